//! Resolves command-line flags and the optional `key = value` config file
//! into a [`RunConfig`].
//!
//! Precedence: flag, then config file, then built-in default. The config
//! file path comes from `--filter-config` or `LUMASWITCH_FILTER_CONFIG`.

use std::fs;
use std::path::{Path, PathBuf};

use lumaswitch::skinfilter::{is_filter_key, parse_key_values, ConfigEntry, SkinRangeFilter};
use lumaswitch::switching::{Strategy, VoteThreshold};

use crate::CliError;

pub const CONFIG_ENV: &str = "LUMASWITCH_FILTER_CONFIG";

/// Flag values before merging; `None` means "not given on the command line".
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub strategy: Option<String>,
    pub model: Option<PathBuf>,
    pub filter_config: Option<PathBuf>,
    pub vote_threshold: Option<i64>,
    pub out_dir: PathBuf,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub filter: SkinRangeFilter,
    pub model: Option<PathBuf>,
    pub vote_threshold: VoteThreshold,
    pub out_dir: PathBuf,
    pub report: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn resolve(flags: RunFlags) -> Result<Self, CliError> {
        let entries = match &flags.filter_config {
            Some(path) => read_config(path)?,
            None => Vec::new(),
        };
        let (filter_entries, other): (Vec<ConfigEntry>, Vec<ConfigEntry>) =
            entries.into_iter().partition(|e| is_filter_key(&e.key));
        let filter =
            SkinRangeFilter::from_entries(&filter_entries).map_err(|e| usage(e.to_string()))?;

        let mut strategy = Strategy::MaxConnected;
        let mut model = None;
        let mut votes: i64 = 1;
        for e in other {
            match e.key.as_str() {
                "strategy" => {
                    strategy = e
                        .value
                        .parse()
                        .map_err(|err| usage(format!("line {}: {err}", e.line)))?
                }
                "model" => model = Some(PathBuf::from(&e.value)),
                "vote_threshold" => {
                    votes = e.value.parse().map_err(|_| {
                        usage(format!(
                            "line {}: vote_threshold must be an integer",
                            e.line
                        ))
                    })?
                }
                _ => return Err(usage(format!("line {}: unknown key {:?}", e.line, e.key))),
            }
        }
        if let Some(s) = &flags.strategy {
            strategy = s
                .parse()
                .map_err(|e: lumaswitch::switching::SwitchError| usage(e.to_string()))?;
        }
        if flags.model.is_some() {
            model = flags.model;
        }
        if let Some(v) = flags.vote_threshold {
            votes = v;
        }
        let vote_threshold = u8::try_from(votes)
            .ok()
            .and_then(|v| VoteThreshold::new(v).ok())
            .ok_or_else(|| usage(format!("vote threshold must be 1, 2 or 3, got {votes}")))?;
        if strategy == Strategy::Ann && model.is_none() {
            return Err(usage("strategy ann requires --model <PATH>"));
        }
        Ok(Self {
            strategy,
            filter,
            model,
            vote_threshold,
            out_dir: flags.out_dir,
            report: flags.report,
        })
    }
}

fn read_config(path: &Path) -> Result<Vec<ConfigEntry>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_key_values(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> RunFlags {
        RunFlags {
            out_dir: "out".into(),
            ..RunFlags::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(flags()).unwrap();
        assert_eq!(cfg.strategy, Strategy::MaxConnected);
        assert_eq!(cfg.vote_threshold, VoteThreshold::UNION);
        assert_eq!(cfg.filter, SkinRangeFilter::default());
    }

    #[test]
    fn ann_needs_model() {
        let f = RunFlags {
            strategy: Some("ann".into()),
            ..flags()
        };
        assert!(matches!(RunConfig::resolve(f), Err(CliError::Usage(_))));
    }

    #[test]
    fn bad_votes_and_strategy() {
        let f = RunFlags {
            vote_threshold: Some(4),
            ..flags()
        };
        assert!(matches!(RunConfig::resolve(f), Err(CliError::Usage(_))));
        let f = RunFlags {
            strategy: Some("kmeans".into()),
            ..flags()
        };
        assert!(matches!(RunConfig::resolve(f), Err(CliError::Usage(_))));
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skin.conf");
        fs::write(
            &path,
            "strategy = sigmaconnect\nvote_threshold = 2\nrgb.r.lo = 120\n",
        )
        .unwrap();
        let cfg = RunConfig::resolve(RunFlags {
            filter_config: Some(path.clone()),
            ..flags()
        })
        .unwrap();
        assert_eq!(cfg.strategy, Strategy::SigmaConnect);
        assert_eq!(cfg.vote_threshold.get(), 2);
        assert_eq!(cfg.filter.rgb.r.lo(), 120.0);

        let cfg = RunConfig::resolve(RunFlags {
            filter_config: Some(path),
            vote_threshold: Some(3),
            strategy: Some("maxconnected".into()),
            ..flags()
        })
        .unwrap();
        assert_eq!(cfg.strategy, Strategy::MaxConnected);
        assert_eq!(cfg.vote_threshold.get(), 3);
    }

    #[test]
    fn unknown_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skin.conf");
        fs::write(&path, "colour = red\n").unwrap();
        let err = RunConfig::resolve(RunFlags {
            filter_config: Some(path),
            ..flags()
        })
        .unwrap_err();
        assert!(err.to_string().contains("colour"));
    }
}
