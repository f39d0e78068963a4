//! Labeled image lists: one `<image path> <RGB|HSV|YCbCr>` per line.
//!
//! Relative paths resolve against the manifest's directory. Blank lines and
//! `#` comments are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lumaswitch::skinfilter::ColorSpaceId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: ColorSpaceId,
}

pub fn parse_manifest(text: &str, origin: &Path) -> Result<Vec<ManifestEntry>> {
    let base = origin.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((path, label)) = line.rsplit_once(char::is_whitespace) else {
            bail!(
                "{}:{}: expected `<image path> <label>`, got {raw:?}",
                origin.display(),
                i + 1
            );
        };
        let label = label
            .parse()
            .with_context(|| format!("{}:{}: bad label", origin.display(), i + 1))?;
        entries.push(ManifestEntry {
            path: base.join(path.trim()),
            label,
        });
    }
    if entries.is_empty() {
        bail!("{}: manifest lists no images", origin.display());
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    parse_manifest(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_relative_paths_and_labels() {
        let text = "# training set\na.ppm RGB\n\nsub dir/b.ppm   YCbCr\n/abs/c.ppm hsv # inline\n";
        let entries = parse_manifest(text, Path::new("/data/m.txt")).unwrap();
        assert_eq!(
            entries,
            vec![
                ManifestEntry {
                    path: "/data/a.ppm".into(),
                    label: ColorSpaceId::Rgb
                },
                ManifestEntry {
                    path: "/data/sub dir/b.ppm".into(),
                    label: ColorSpaceId::Ycbcr
                },
                ManifestEntry {
                    path: "/abs/c.ppm".into(),
                    label: ColorSpaceId::Hsv
                },
            ]
        );
    }

    #[test]
    fn bad_label_names_line() {
        let err = parse_manifest("a.ppm RGB\nb.ppm CMY\n", Path::new("m.txt")).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("m.txt:2"), "{msg}");
        assert!(msg.contains("CMY"), "{msg}");
    }

    #[test]
    fn empty_and_malformed() {
        assert!(parse_manifest("# nothing\n\n", Path::new("m.txt")).is_err());
        assert!(parse_manifest("lonely.ppm\n", Path::new("m.txt")).is_err());
    }
}
