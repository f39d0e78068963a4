use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use lumaswitch::colorspace::feature_vector;
use lumaswitch::imaging::{load_image, save_image, save_mask};
use lumaswitch::mlp::{
    accuracy, load_model, predict_space, save_model, train, MlpModel, Normalization, TrainConfig,
    TrainingSet,
};
use lumaswitch::skinfilter::{ColorSpaceId, SkinRangeFilter};
use lumaswitch::switching::{segment, Choice, Strategy};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::load_manifest;
use crate::report::{EvalRecord, EvaluationReport};

/// One JSON line per segmented image or frame.
#[derive(Debug, Serialize)]
pub struct SegmentRecord<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    pub file: String,
    pub strategy: Strategy,
    pub chosen: Choice,
    pub blob_size: usize,
    pub per_space_sizes: BTreeMap<ColorSpaceId, usize>,
    pub filter: &'a SkinRangeFilter,
}

fn report_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .with_context(|| format!("cannot open report {}", p.display()))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(io::stdout().lock()),
    })
}

struct Segmenter {
    cfg: RunConfig,
    model: Option<MlpModel>,
    sink: Box<dyn Write>,
}

impl Segmenter {
    fn new(cfg: RunConfig) -> Result<Self> {
        let model = match (&cfg.strategy, &cfg.model) {
            (Strategy::Ann, Some(path)) => Some(load_model(path)?),
            _ => None,
        };
        fs::create_dir_all(&cfg.out_dir)
            .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))?;
        let sink = report_sink(cfg.report.as_deref())?;
        Ok(Self { cfg, model, sink })
    }

    fn process(&mut self, input: &Path, frame: Option<usize>) -> Result<()> {
        let image = load_image(input)?;
        let result = segment(
            &image,
            self.cfg.strategy,
            &self.cfg.filter,
            self.model.as_ref(),
            self.cfg.vote_threshold,
        )?;
        let stem = input
            .file_stem()
            .ok_or_else(|| anyhow!("{} has no file name", input.display()))?
            .to_string_lossy();
        let out = |suffix: &str| self.cfg.out_dir.join(format!("{stem}.{suffix}"));
        save_mask(&result.mask, out("mask.pgm"))?;
        save_mask(&result.raw_mask, out("raw.pgm"))?;
        save_image(&result.overlay, out("overlay.ppm"))?;

        let record = SegmentRecord {
            frame,
            file: input.display().to_string(),
            strategy: result.strategy,
            chosen: result.chosen,
            blob_size: result.blob_size,
            per_space_sizes: result.per_space_sizes,
            filter: &self.cfg.filter,
        };
        serde_json::to_writer(&mut self.sink, &record)?;
        self.sink.write_all(b"\n")?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.sink.flush()?;
        Ok(())
    }
}

/// Summary of a batch: how many inputs failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchStatus {
    pub processed: usize,
    pub failed: usize,
}

/// Segments every input, writing `<stem>.mask.pgm`, `<stem>.raw.pgm` and
/// `<stem>.overlay.ppm` into the output directory. Unreadable inputs are
/// reported and skipped.
pub fn cmd_segment(cfg: RunConfig, inputs: &[PathBuf]) -> Result<BatchStatus> {
    let mut seg = Segmenter::new(cfg)?;
    let mut status = BatchStatus {
        processed: 0,
        failed: 0,
    };
    for input in inputs {
        match seg.process(input, None) {
            Ok(()) => status.processed += 1,
            Err(e) => {
                log::error!("{e:#}");
                eprintln!("error: {e:#}");
                status.failed += 1;
            }
        }
    }
    seg.finish()?;
    Ok(status)
}

/// The `.ppm` files of `dir`, sorted by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read frame directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("ppm"))
        })
        .collect();
    frames.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if frames.is_empty() {
        bail!("{} holds no .ppm frames", dir.display());
    }
    Ok(frames)
}

/// Processes a directory of frames in name order as if they arrived from a
/// camera, sleeping `delay` between frames.
pub fn cmd_stream(cfg: RunConfig, dir: &Path, delay: Duration) -> Result<BatchStatus> {
    let frames = list_frames(dir)?;
    let mut seg = Segmenter::new(cfg)?;
    let mut status = BatchStatus {
        processed: 0,
        failed: 0,
    };
    for (index, frame) in frames.iter().enumerate() {
        if index > 0 && !delay.is_zero() {
            thread::sleep(delay);
        }
        match seg.process(frame, Some(index)) {
            Ok(()) => status.processed += 1,
            Err(e) => {
                eprintln!("error: frame {index}: {e:#}");
                status.failed += 1;
            }
        }
    }
    seg.finish()?;
    Ok(status)
}

fn load_labeled(
    manifest: &Path,
) -> Result<Vec<(PathBuf, lumaswitch::FeatureVector, ColorSpaceId)>> {
    load_manifest(manifest)?
        .into_iter()
        .map(|e| {
            let img = load_image(&e.path)?;
            Ok((e.path, feature_vector(&img), e.label))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    pub model_out: PathBuf,
    pub loss_csv: Option<PathBuf>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub accuracy: f64,
    pub examples: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_csv: PathBuf,
}

/// Default loss-trace path: the model path with `.loss.csv` appended.
pub fn default_loss_csv(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".loss.csv");
    PathBuf::from(s)
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let labeled = load_labeled(&args.manifest)?;
    let data = TrainingSet::new(labeled.iter().map(|(_, f, l)| (*f, *l)).collect())?;
    let cfg = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        seed: args.seed,
        hidden_count: args.hidden,
        normalization: Normalization::fit(&data.features()),
    };
    let outcome = train(&data, &cfg)?;
    save_model(&outcome.model, &args.model_out)?;

    let loss_csv = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| default_loss_csv(&args.model_out));
    let mut w = BufWriter::new(
        File::create(&loss_csv).with_context(|| format!("cannot write {}", loss_csv.display()))?,
    );
    writeln!(w, "epoch,loss")?;
    for (epoch, loss) in outcome.loss_trace.iter().enumerate() {
        writeln!(w, "{epoch},{loss}")?;
    }
    w.flush()?;

    Ok(TrainSummary {
        accuracy: accuracy(&outcome.model, &data),
        examples: data.len(),
        initial_loss: outcome.loss_trace[0],
        final_loss: *outcome.loss_trace.last().expect("non-empty trace"),
        loss_csv,
    })
}

pub fn cmd_eval(model_path: &Path, manifest: &Path) -> Result<EvaluationReport> {
    let model = load_model(model_path)?;
    let records = load_labeled(manifest)?
        .into_iter()
        .map(|(path, features, truth)| EvalRecord {
            file: path.display().to_string(),
            predicted: predict_space(&model, &features),
            features,
            truth,
        })
        .collect();
    Ok(EvaluationReport::from_records(records))
}
