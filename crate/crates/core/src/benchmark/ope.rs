use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::metrics::evaluate;
use super::sequence::{load_sequence, FrameSource};
use super::BBox;
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::features::CnTable;
use crate::tracker::{load_cn_table, TrackerState};

/// Per-sequence result of a one-pass run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackReport {
    pub name: String,
    pub frames: usize,
    pub boxes: Vec<BBox>,
    pub overlaps: Vec<f64>,
    pub center_errors: Vec<f64>,
    pub sr: f64,
    pub auc: f64,
    pub dp: f64,
    pub fps: f64,
}

impl TrackReport {
    /// One row per frame: `index,x,y,w,h,overlap,center_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,w,h,overlap,center_error\n");
        for (i, ((b, o), e)) in self
            .boxes
            .iter()
            .zip(&self.overlaps)
            .zip(&self.center_errors)
            .enumerate()
        {
            out.push_str(&format!("{},{},{},{},{},{},{}\n", i + 1, b.x, b.y, b.w, b.h, o, e));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceOutcome {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<TrackReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpeSummary {
    pub sequences: Vec<SequenceOutcome>,
    pub completed: usize,
    pub failed: usize,
    /// Means over completed sequences; absent when none completed.
    pub mean_auc: Option<f64>,
    pub mean_sr: Option<f64>,
    pub mean_dp: Option<f64>,
    pub mean_fps: Option<f64>,
}

impl OpeSummary {
    fn from_outcomes(sequences: Vec<SequenceOutcome>) -> Self {
        let done: Vec<&TrackReport> = sequences.iter().filter_map(|s| s.report.as_ref()).collect();
        let mean = |f: fn(&TrackReport) -> f64| {
            (!done.is_empty()).then(|| done.iter().map(|r| f(r)).sum::<f64>() / done.len() as f64)
        };
        OpeSummary {
            completed: done.len(),
            failed: sequences.len() - done.len(),
            mean_auc: mean(|r| r.auc),
            mean_sr: mean(|r| r.sr),
            mean_dp: mean(|r| r.dp),
            mean_fps: mean(|r| r.fps),
            sequences,
        }
    }
}

/// Initializes from the first ground-truth box and tracks to the end without
/// re-initialization. Only tracker compute is timed; frame decoding is not.
pub fn run_sequence(config: &TrackerConfig, source: &dyn FrameSource, table: Arc<CnTable>) -> Result<TrackReport> {
    let gt = source.ground_truth();
    if gt.len() < 2 {
        return Err(Error::invalid(format!("{}: needs at least 2 frames", source.name())));
    }
    let first = source.frame(0)?;
    let mut elapsed = Duration::ZERO;
    let start = Instant::now();
    let mut state = TrackerState::init_with_table(&first, gt[0], config.clone(), table)?;
    elapsed += start.elapsed();

    let mut boxes = Vec::with_capacity(gt.len());
    boxes.push(gt[0]);
    for i in 1..gt.len() {
        let frame = source.frame(i)?;
        let start = Instant::now();
        let out = state.step(&frame)?;
        elapsed += start.elapsed();
        boxes.push(out.bbox);
    }
    let eval = evaluate(&boxes, gt, elapsed.as_secs_f64())?;
    Ok(TrackReport {
        name: source.name().to_string(),
        frames: gt.len(),
        boxes,
        overlaps: eval.overlaps,
        center_errors: eval.center_errors,
        sr: eval.sr,
        auc: eval.auc,
        dp: eval.dp,
        fps: eval.fps,
    })
}

/// Runs `task(i)` for `i in 0..n` on up to `jobs` threads, keeping input order.
fn run_indexed<T: Send>(n: usize, jobs: usize, task: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = task(i);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|v| v.expect("every index visited"))
        .collect()
}

fn outcome(name: String, result: Result<TrackReport>) -> SequenceOutcome {
    match result {
        Ok(report) => SequenceOutcome {
            name,
            report: Some(report),
            error: None,
        },
        Err(e) => SequenceOutcome {
            name,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// One-pass evaluation over in-memory or pre-loaded sequences.
pub fn run_ope<S: FrameSource + Sync>(config: &TrackerConfig, sources: &[S], jobs: usize) -> Result<OpeSummary> {
    if sources.is_empty() {
        return Err(Error::invalid("no sequences to evaluate"));
    }
    config.validate()?;
    let table = Arc::new(load_cn_table(config)?);
    let outcomes = run_indexed(sources.len(), jobs, |i| {
        let src = &sources[i];
        outcome(src.name().to_string(), run_sequence(config, src, Arc::clone(&table)))
    });
    Ok(OpeSummary::from_outcomes(outcomes))
}

/// Like [`run_ope`], loading each directory inside its worker so that a
/// broken sequence is reported rather than aborting the batch.
pub fn run_ope_dirs(config: &TrackerConfig, dirs: &[PathBuf], jobs: usize) -> Result<OpeSummary> {
    if dirs.is_empty() {
        return Err(Error::invalid("no sequences to evaluate"));
    }
    config.validate()?;
    let table = Arc::new(load_cn_table(config)?);
    let outcomes = run_indexed(dirs.len(), jobs, |i| {
        let dir = &dirs[i];
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        let result = load_sequence(dir).and_then(|rec| run_sequence(config, &rec, Arc::clone(&table)));
        outcome(name, result)
    });
    Ok(OpeSummary::from_outcomes(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::synth::SynthSpec;

    fn translate(seed: u64) -> crate::benchmark::synth::SyntheticSequence {
        SynthSpec::preset("translate", 40, (200, 200), seed)
            .unwrap()
            .render()
            .unwrap()
    }

    #[test]
    fn pure_translation_scores_well() {
        let s = run_ope(&TrackerConfig::default(), &[translate(1)], 1).unwrap();
        assert_eq!((s.completed, s.failed), (1, 0));
        let auc = s.mean_auc.unwrap();
        assert!(auc > 0.6, "{auc}");
        assert!(s.mean_fps.unwrap() > 0.0);
    }

    #[test]
    fn empty_list_is_rejected() {
        let none: [crate::benchmark::synth::SyntheticSequence; 0] = [];
        assert!(matches!(
            run_ope(&TrackerConfig::default(), &none, 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(run_ope_dirs(&TrackerConfig::default(), &[], 2).is_err());
    }

    #[test]
    fn parallel_runs_match_serial_runs() {
        let seqs: Vec<_> = (1..=3).map(translate).collect();
        let cfg = TrackerConfig::default();
        let a = run_ope(&cfg, &seqs, 1).unwrap();
        let b = run_ope(&cfg, &seqs, 3).unwrap();
        for (x, y) in a.sequences.iter().zip(&b.sequences) {
            let (x, y) = (x.report.as_ref().unwrap(), y.report.as_ref().unwrap());
            assert_eq!((&x.name, &x.boxes, x.auc), (&y.name, &y.boxes, y.auc));
        }
    }

    #[test]
    fn broken_directory_does_not_abort_batch() {
        let root = tempfile::tempdir().unwrap();
        let good = root.path().join("good");
        translate(2).write(&good).unwrap();
        let bad = root.path().join("missing");
        let s = run_ope_dirs(&TrackerConfig::default(), &[bad, good], 2).unwrap();
        assert_eq!((s.completed, s.failed), (1, 1));
        assert!(s.sequences[0].error.as_ref().unwrap().contains("groundtruth_rect.txt"));
        assert_eq!(s.sequences[1].name, "good");
    }

    #[test]
    fn csv_has_one_row_per_frame() {
        let rec = translate(3);
        let r = run_sequence(&TrackerConfig::default(), &rec, Arc::new(CnTable::fallback())).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 41);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
    }
}
