//! OTB-style evaluation: sequence ingestion, one-pass evaluation (OPE),
//! precision/success metrics, result persistence (CSV/JSON/SVG), and a
//! synthetic sequence generator for self-contained testing.
//!
//! Wall-clock FPS is written to a `timing.json` sidecar rather than into
//! `summary.json`, so that reruns with identical inputs produce
//! byte-identical CSV/JSON metric outputs.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cco::CcoTracker;
use crate::dcf::{Bbox, TrackerConfig, TrackerState};
use crate::error::{Error, Result};
use crate::features::ImagePatch;

/// Alias for the tracker bounding box used throughout evaluation.
pub type BoundingBox = Bbox;

/// An ordered sequence of frames with per-frame ground truth.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub name: String,
    pub frames: Vec<PathBuf>,
    pub boxes: Vec<Bbox>,
}

/// Decode an image file into a clamped `[0,1]` patch (grayscale or RGB).
pub fn load_image(path: &Path) -> Result<ImagePatch> {
    let img = image::open(path)?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let values = g.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
            ImagePatch::new(h, w, 1, values)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let values = rgb.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
            ImagePatch::new(h, w, 3, values)
        }
    }
}

/// Parse one ground-truth line: `x,y,w,h`, comma or whitespace separated,
/// 1-indexed pixel origin (converted to 0-indexed).
fn parse_gt_line(line: &str, lineno: usize) -> Result<Bbox> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let nums: Vec<f64> = fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad number {f:?}: {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if nums[2] <= 0.0 || nums[3] <= 0.0 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("nonpositive box size {}x{}", nums[2], nums[3]),
        });
    }
    Ok(Bbox {
        x: nums[0] - 1.0,
        y: nums[1] - 1.0,
        w: nums[2],
        h: nums[3],
    })
}

/// Load an OTB-layout sequence: `dir/img/*` frames plus
/// `dir/groundtruth_rect.txt`.
pub fn load_sequence(dir: &Path) -> Result<SequenceSpec> {
    let img_dir = dir.join("img");
    let gt_path = dir.join("groundtruth_rect.txt");
    let mut frames: Vec<PathBuf> = std::fs::read_dir(&img_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref e) if ["png", "jpg", "jpeg", "bmp"].contains(&e.as_str())
            )
        })
        .collect();
    frames.sort();
    let gt = std::fs::read_to_string(&gt_path)?;
    let boxes: Vec<Bbox> = gt
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_gt_line(l, i + 1))
        .collect::<Result<_>>()?;
    if boxes.len() != frames.len() {
        return Err(Error::InvalidArgument(format!(
            "sequence {}: {} ground-truth boxes but {} frames",
            dir.display(),
            boxes.len(),
            frames.len()
        )));
    }
    if frames.is_empty() {
        return Err(Error::InvalidArgument(format!("empty sequence {}", dir.display())));
    }
    if boxes[0].w < 2.0 || boxes[0].h < 2.0 {
        return Err(Error::InvalidArgument("first ground-truth box degenerate".into()));
    }
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    Ok(SequenceSpec { name, frames, boxes })
}

/// Intersection-over-union of two boxes.
pub fn iou(a: &Bbox, b: &Bbox) -> f64 {
    let x1 = a.x.max(b.x);
    let y1 = a.y.max(b.y);
    let x2 = (a.x + a.w).min(b.x + b.w);
    let y2 = (a.y + a.h).min(b.y + b.h);
    let inter = (x2 - x1).max(0.0) * (y2 - y1).max(0.0);
    let union = a.w * a.h + b.w * b.h - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Euclidean distance between box centers, in pixels.
pub fn center_error(a: &Bbox, b: &Bbox) -> f64 {
    let (ar, ac) = a.center();
    let (br, bc) = b.center();
    ((ar - br).powi(2) + (ac - bc).powi(2)).sqrt()
}

/// Per-frame comparison of a prediction with ground truth.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrameRecord {
    pub iou: f64,
    pub center_error: f64,
}

/// A metric curve over a threshold grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

/// Fraction of frames with center error ≤ t, for t ∈ 0..=50 px step 1.
pub fn precision_curve(records: &[FrameRecord]) -> Result<EvalCurve> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("precision_curve: no records".into()));
    }
    let thresholds: Vec<f64> = (0..=50).map(|t| t as f64).collect();
    let values = thresholds
        .iter()
        .map(|&t| records.iter().filter(|r| r.center_error <= t).count() as f64 / records.len() as f64)
        .collect();
    Ok(EvalCurve { thresholds, values })
}

/// Fraction of frames with IoU ≥ t, for t ∈ 0..=1 step 0.05. The closed
/// comparison makes a perfect trajectory saturate the whole curve (AUC 1).
pub fn success_curve(records: &[FrameRecord]) -> Result<EvalCurve> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("success_curve: no records".into()));
    }
    let thresholds: Vec<f64> = (0..=20).map(|t| t as f64 * 0.05).collect();
    let values = thresholds
        .iter()
        .map(|&t| records.iter().filter(|r| r.iou >= t).count() as f64 / records.len() as f64)
        .collect();
    Ok(EvalCurve { thresholds, values })
}

/// Mean of the success curve over its threshold grid.
pub fn auc(curve: &EvalCurve) -> f64 {
    curve.values.iter().sum::<f64>() / curve.values.len() as f64
}

/// Distance precision rate at the 20-pixel threshold.
pub fn dpr(curve: &EvalCurve) -> f64 {
    curve
        .thresholds
        .iter()
        .position(|&t| (t - 20.0).abs() < 1e-9)
        .map(|i| curve.values[i])
        .unwrap_or(0.0)
}

/// Overlap success rate at the 0.5 IoU threshold.
pub fn osr(curve: &EvalCurve) -> f64 {
    curve
        .thresholds
        .iter()
        .position(|&t| (t - 0.5).abs() < 1e-9)
        .map(|i| curve.values[i])
        .unwrap_or(0.0)
}

/// Which tracker the harness drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackerKind {
    #[serde(rename = "dcf")]
    Dcf,
    #[serde(rename = "cco")]
    Cco,
}

/// Result of tracking one sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceResult {
    pub name: String,
    pub boxes: Vec<Bbox>,
    pub records: Vec<FrameRecord>,
    pub frames: usize,
    /// Wall-clock seconds spent inside tracking calls (excludes I/O).
    pub track_seconds: f64,
    /// Populated when the sequence failed; metrics then absent.
    pub error: Option<String>,
}

/// Aggregate OPE report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tracker: TrackerKind,
    pub sequences: Vec<SequenceResult>,
}

/// Track one sequence with OPE semantics: initialize from the frame-1
/// ground truth, then track to the end.
pub fn track_sequence(
    config: &TrackerConfig,
    kind: TrackerKind,
    seq: &SequenceSpec,
) -> Result<SequenceResult> {
    let first = load_image(&seq.frames[0])?;
    let mut boxes = Vec::with_capacity(seq.frames.len());
    boxes.push(seq.boxes[0]);
    let mut track_seconds = 0.0;
    match kind {
        TrackerKind::Dcf => {
            let start = Instant::now();
            let mut state = TrackerState::init(&first, seq.boxes[0], config.clone())?;
            track_seconds += start.elapsed().as_secs_f64();
            for path in &seq.frames[1..] {
                let frame = load_image(path)?;
                let start = Instant::now();
                let bb = state.track_frame(&frame)?;
                track_seconds += start.elapsed().as_secs_f64();
                boxes.push(bb);
            }
        }
        TrackerKind::Cco => {
            let start = Instant::now();
            let mut state = CcoTracker::init(&first, seq.boxes[0], config.clone())?;
            track_seconds += start.elapsed().as_secs_f64();
            for path in &seq.frames[1..] {
                let frame = load_image(path)?;
                let start = Instant::now();
                let bb = state.track_frame(&frame)?;
                track_seconds += start.elapsed().as_secs_f64();
                boxes.push(bb);
            }
        }
    }
    let records = boxes
        .iter()
        .zip(seq.boxes.iter())
        .map(|(p, g)| FrameRecord {
            iou: iou(p, g),
            center_error: center_error(p, g),
        })
        .collect();
    Ok(SequenceResult {
        name: seq.name.clone(),
        boxes,
        records,
        frames: seq.frames.len(),
        track_seconds,
        error: None,
    })
}

/// Run one-pass evaluation over a set of sequences. Sequences run in
/// parallel up to `threads`; per-sequence failures are isolated into the
/// report rather than aborting the run. Output order matches input order.
pub fn run_ope(
    config: &TrackerConfig,
    kind: TrackerKind,
    sequences: &[SequenceSpec],
    threads: usize,
) -> Result<Report> {
    if sequences.is_empty() {
        return Err(Error::InvalidArgument("run_ope: no sequences".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<SequenceResult> = pool.install(|| {
        use rayon::prelude::*;
        sequences
            .par_iter()
            .map(|seq| {
                track_sequence(config, kind, seq).unwrap_or_else(|e| SequenceResult {
                    name: seq.name.clone(),
                    boxes: Vec::new(),
                    records: Vec::new(),
                    frames: seq.frames.len(),
                    track_seconds: 0.0,
                    error: Some(e.to_string()),
                })
            })
            .collect()
    });
    Ok(Report {
        tracker: kind,
        sequences: results,
    })
}

/// Pooled frame records across all successful sequences.
pub fn all_records(report: &Report) -> Vec<FrameRecord> {
    report
        .sequences
        .iter()
        .filter(|s| s.error.is_none())
        .flat_map(|s| s.records.iter().copied())
        .collect()
}

#[derive(Debug, Serialize)]
struct SequenceSummary {
    name: String,
    frames: usize,
    dpr: Option<f64>,
    osr: Option<f64>,
    auc: Option<f64>,
    mean_center_error: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Summary {
    tracker: TrackerKind,
    sequences: Vec<SequenceSummary>,
    aggregate: AggregateSummary,
}

#[derive(Debug, Serialize)]
struct AggregateSummary {
    dpr: f64,
    osr: f64,
    auc: f64,
    mean_center_error: f64,
    frames: usize,
}

fn fmt6(v: f64) -> f64 {
    // fixed rounding keeps JSON byte-stable across platforms
    (v * 1e6).round() / 1e6
}

/// Write curves.csv, summary.json, SVG plots, and the timing sidecar.
pub fn emit_outputs(report: &Report, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let records = all_records(report);
    if records.is_empty() {
        return Err(Error::InvalidArgument("emit_outputs: no successful frames".into()));
    }
    let prec = precision_curve(&records)?;
    let succ = success_curve(&records)?;

    // curves.csv: curve,threshold,value
    let mut csv = String::from("curve,threshold,value\n");
    for (t, v) in prec.thresholds.iter().zip(prec.values.iter()) {
        csv.push_str(&format!("precision,{t:.2},{v:.6}\n"));
    }
    for (t, v) in succ.thresholds.iter().zip(succ.values.iter()) {
        csv.push_str(&format!("success,{t:.2},{v:.6}\n"));
    }
    std::fs::write(dir.join("curves.csv"), csv)?;

    // trajectories per sequence
    for seq in &report.sequences {
        if seq.error.is_some() {
            continue;
        }
        let mut traj = String::from("frame,x,y,w,h,iou,center_error\n");
        for (i, (b, r)) in seq.boxes.iter().zip(seq.records.iter()).enumerate() {
            traj.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.4},{:.6},{:.6}\n",
                i + 1,
                b.x,
                b.y,
                b.w,
                b.h,
                r.iou,
                r.center_error
            ));
        }
        std::fs::write(dir.join(format!("{}_trajectory.csv", seq.name)), traj)?;
    }

    // summary.json (deterministic; FPS lives in timing.json)
    let seq_summaries = report
        .sequences
        .iter()
        .map(|s| {
            if s.error.is_some() {
                SequenceSummary {
                    name: s.name.clone(),
                    frames: s.frames,
                    dpr: None,
                    osr: None,
                    auc: None,
                    mean_center_error: None,
                    error: s.error.clone(),
                }
            } else {
                let p = precision_curve(&s.records).unwrap();
                let su = success_curve(&s.records).unwrap();
                let mce = s.records.iter().map(|r| r.center_error).sum::<f64>()
                    / s.records.len() as f64;
                SequenceSummary {
                    name: s.name.clone(),
                    frames: s.frames,
                    dpr: Some(fmt6(dpr(&p))),
                    osr: Some(fmt6(osr(&su))),
                    auc: Some(fmt6(auc(&su))),
                    mean_center_error: Some(fmt6(mce)),
                    error: None,
                }
            }
        })
        .collect();
    let mce = records.iter().map(|r| r.center_error).sum::<f64>() / records.len() as f64;
    let summary = Summary {
        tracker: report.tracker,
        sequences: seq_summaries,
        aggregate: AggregateSummary {
            dpr: fmt6(dpr(&prec)),
            osr: fmt6(osr(&succ)),
            auc: fmt6(auc(&succ)),
            mean_center_error: fmt6(mce),
            frames: records.len(),
        },
    };
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    f.write_all(serde_json::to_string_pretty(&summary)?.as_bytes())?;
    f.write_all(b"\n")?;

    // timing sidecar (wall-clock dependent, deliberately separate)
    #[derive(Serialize)]
    struct Timing {
        name: String,
        frames: usize,
        track_seconds: f64,
        fps: f64,
    }
    let timing: Vec<Timing> = report
        .sequences
        .iter()
        .filter(|s| s.error.is_none())
        .map(|s| Timing {
            name: s.name.clone(),
            frames: s.frames,
            track_seconds: s.track_seconds,
            fps: if s.track_seconds > 0.0 {
                s.frames as f64 / s.track_seconds
            } else {
                0.0
            },
        })
        .collect();
    let mut f = std::fs::File::create(dir.join("timing.json"))?;
    f.write_all(serde_json::to_string_pretty(&timing)?.as_bytes())?;
    f.write_all(b"\n")?;

    // plots
    std::fs::write(
        dir.join("precision.svg"),
        render_curve_svg(&prec, "Precision plot", "Location error threshold (px)"),
    )?;
    std::fs::write(
        dir.join("success.svg"),
        render_curve_svg(&succ, "Success plot", "Overlap threshold"),
    )?;
    Ok(())
}

/// Render a single curve as a standalone SVG line plot.
pub fn render_curve_svg(curve: &EvalCurve, title: &str, xlabel: &str) -> String {
    let (w, h) = (480.0, 360.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let tmin = curve.thresholds.first().copied().unwrap_or(0.0);
    let tmax = curve.thresholds.last().copied().unwrap_or(1.0).max(tmin + 1e-9);
    let sx = |t: f64| ml + (t - tmin) / (tmax - tmin) * pw;
    let sy = |v: f64| mt + (1.0 - v) * ph;
    let pts: Vec<String> = curve
        .thresholds
        .iter()
        .zip(curve.values.iter())
        .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t), sy(v)))
        .collect();
    let mut xticks = String::new();
    for i in 0..=5 {
        let t = tmin + (tmax - tmin) * i as f64 / 5.0;
        let x = sx(t);
        xticks.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{0:.2}\" x2=\"{x:.2}\" y2=\"{1:.2}\" stroke=\"black\"/>\
             <text x=\"{x:.2}\" y=\"{2:.2}\" font-size=\"11\" text-anchor=\"middle\">{t:.2}</text>",
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 18.0
        ));
    }
    let mut yticks = String::new();
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = sy(v);
        yticks.push_str(&format!(
            "<line x1=\"{0:.2}\" y1=\"{y:.2}\" x2=\"{1:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\
             <text x=\"{2:.2}\" y=\"{3:.2}\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>",
            ml - 5.0,
            ml,
            ml - 8.0,
            y + 4.0
        ));
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{cx:.2}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n\
         <rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n\
         {xticks}\n{yticks}\n\
         <text x=\"{cx:.2}\" y=\"{xl:.2}\" font-size=\"12\" text-anchor=\"middle\">{xlabel}</text>\n\
         <polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"{points}\"/>\n\
         </svg>\n",
        cx = ml + pw / 2.0,
        xl = h - 12.0,
        points = pts.join(" ")
    )
}

/// Synthetic sequence flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthKind {
    #[serde(rename = "translate")]
    Translate,
    #[serde(rename = "zoom")]
    Zoom,
}

/// Parameters for one generated sequence.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub name: String,
    pub kind: SynthKind,
    pub frames: usize,
    pub frame_size: usize,
    pub target_size: f64,
    pub start: (f64, f64), // top-left (x, y)
    pub velocity: (f64, f64), // px/frame (dx, dy), Translate only
    pub zoom_rate: f64,       // size multiplier per frame, Zoom only
    pub seed: u64,
}

/// Render one frame: textured dark background plus a bright checkered
/// square with the given top-left and side length.
fn render_synth_frame(spec: &SynthSpec, x: f64, y: f64, side: f64) -> ImagePatch {
    let n = spec.frame_size;
    let mut values = vec![0.0; n * n];
    // deterministic low-contrast background texture
    for r in 0..n {
        for c in 0..n {
            let t = ((r as f64 * 0.7 + spec.seed as f64).sin() * (c as f64 * 0.5).cos()) * 0.04;
            values[r * n + c] = 0.25 + t;
        }
    }
    for r in 0..n {
        for c in 0..n {
            let fr = r as f64;
            let fc = c as f64;
            if fr >= y && fr < y + side && fc >= x && fc < x + side {
                // internal 2x2 checker gives the target scale-sensitive texture
                let u = ((fr - y) / side * 2.0) as usize;
                let v = ((fc - x) / side * 2.0) as usize;
                values[r * n + c] = if (u + v) % 2 == 0 { 0.9 } else { 0.65 };
            }
        }
    }
    ImagePatch::new(n, n, 1, values).unwrap()
}

/// Ground-truth state of frame `t` (0-based) of a synthetic sequence.
pub fn synth_truth(spec: &SynthSpec, t: usize) -> Bbox {
    match spec.kind {
        SynthKind::Translate => Bbox {
            x: spec.start.0 + spec.velocity.0 * t as f64,
            y: spec.start.1 + spec.velocity.1 * t as f64,
            w: spec.target_size,
            h: spec.target_size,
        },
        SynthKind::Zoom => {
            let side = spec.target_size * spec.zoom_rate.powi(t as i32);
            let cx = spec.start.0 + spec.target_size / 2.0;
            let cy = spec.start.1 + spec.target_size / 2.0;
            Bbox {
                x: cx - side / 2.0,
                y: cy - side / 2.0,
                w: side,
                h: side,
            }
        }
    }
}

/// Render frame `t` (0-based) of a synthetic sequence in memory.
pub fn synth_frame(spec: &SynthSpec, t: usize) -> (ImagePatch, Bbox) {
    let gt = synth_truth(spec, t);
    (render_synth_frame(spec, gt.x, gt.y, gt.w), gt)
}

/// Write a synthetic sequence to disk in the OTB layout (PNG frames plus a
/// 1-indexed `groundtruth_rect.txt`).
pub fn write_synth_sequence(spec: &SynthSpec, root: &Path) -> Result<PathBuf> {
    let dir = root.join(&spec.name);
    let img_dir = dir.join("img");
    std::fs::create_dir_all(&img_dir)?;
    let mut gt = String::new();
    for t in 0..spec.frames {
        let (frame, bb) = synth_frame(spec, t);
        let n = spec.frame_size as u32;
        let buf: Vec<u8> = frame
            .values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let img = image::GrayImage::from_raw(n, n, buf)
            .ok_or_else(|| Error::InvalidArgument("synth frame buffer".into()))?;
        img.save(img_dir.join(format!("{:04}.png", t + 1)))?;
        gt.push_str(&format!(
            "{:.2},{:.2},{:.2},{:.2}\n",
            bb.x + 1.0,
            bb.y + 1.0,
            bb.w,
            bb.h
        ));
    }
    std::fs::write(dir.join("groundtruth_rect.txt"), gt)?;
    Ok(dir)
}

/// The default five-sequence synthetic suite (four translations at varied
/// directions/speeds plus one zoom).
pub fn default_synth_suite(frames: usize, seed: u64) -> Vec<SynthSpec> {
    let base = |name: &str, kind, start, velocity, zoom_rate, s| SynthSpec {
        name: name.to_string(),
        kind,
        frames,
        frame_size: 160,
        target_size: 28.0,
        start,
        velocity,
        zoom_rate,
        seed: seed ^ s,
    };
    vec![
        base("translate_right", SynthKind::Translate, (12.0, 60.0), (1.2, 0.0), 1.0, 1),
        base("translate_down", SynthKind::Translate, (62.0, 10.0), (0.0, 1.2), 1.0, 2),
        base("translate_diag", SynthKind::Translate, (14.0, 14.0), (1.0, 1.0), 1.0, 3),
        base("translate_fast", SynthKind::Translate, (120.0, 70.0), (-1.4, 0.4), 1.0, 4),
        base("zoom_in", SynthKind::Zoom, (62.0, 62.0), (0.0, 0.0), 1.004, 5),
    ]
}
