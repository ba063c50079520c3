//! Basic multi-channel DCF tracker: closed-form Fourier-domain filter
//! training, detection, moving-average model update, and 3-scale search.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crm::{reliability_scores, select_channels, select_top_k, TargetRegion};
use crate::error::{Error, Result};
use crate::features::{
    backbone_maps, concat_channels, extract_patch, hog, msc_features, resize_patch,
    CompressionHead, ImagePatch, LrnParams, SHALLOW_OUT_CHANNELS,
};
use crate::tensor::{
    apply_window, default_sigma, fft2, gaussian_label, hann_window, ifft2_real_checked, FeatureMap,
    GaussianLabel, Spectrum,
};

/// Closed-form DCF model: per-channel Fourier numerators plus a shared
/// real denominator.
#[derive(Debug, Clone)]
pub struct DcfModel {
    /// `A^l = φ̂x^l ⊙ ĝ*`, one channel per feature channel.
    pub numerator: Spectrum,
    /// `B = Σ_k φ̂x^k ⊙ (φ̂x^k)*`, shared across channels; real-valued.
    pub denominator: Spectrum,
    pub lambda: f64,
}

impl DcfModel {
    /// Reconstruct the per-channel filter spectra `ĥ^l = A^l / (B + λ)`.
    pub fn filter_spectra(&self) -> Spectrum {
        let ch = self.numerator.channels;
        let mut out = self.numerator.clone();
        for i in 0..self.numerator.height * self.numerator.width {
            let den = self.denominator.values[i].re + self.lambda;
            for d in 0..ch {
                out.values[i * ch + d] /= den;
            }
        }
        out
    }
}

/// Solve the multi-channel ridge regression in the Fourier domain.
pub fn train_filter(phi_x: &FeatureMap, g: &GaussianLabel, lambda: f64) -> Result<DcfModel> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument("lambda_d must be > 0".into()));
    }
    if g.map.height != phi_x.height || g.map.width != phi_x.width {
        return Err(Error::DimMismatch("train_filter label dims".into()));
    }
    let x_spec = fft2(phi_x)?;
    let g_spec = fft2(&g.map)?;
    let (h, w, ch) = (phi_x.height, phi_x.width, phi_x.channels);
    let mut numerator = Spectrum::new(h, w, ch);
    let mut denominator = Spectrum::new(h, w, 1);
    for i in 0..h * w {
        let gc = g_spec.values[i].conj();
        let mut b = 0.0;
        for d in 0..ch {
            let xv = x_spec.values[i * ch + d];
            numerator.values[i * ch + d] = xv * gc;
            b += xv.norm_sqr();
        }
        denominator.values[i] = Complex64::new(b, 0.0);
    }
    Ok(DcfModel {
        numerator,
        denominator,
        lambda,
    })
}

/// Detection result: the real response map, the integer peak cell, the
/// sub-cell refined peak, and the peak value.
#[derive(Debug, Clone)]
pub struct Detection {
    pub response: FeatureMap,
    pub peak_cell: (usize, usize),
    pub peak: (f64, f64),
    pub peak_value: f64,
}

/// Argmax with deterministic tie-break (smallest row, then col).
pub fn argmax_cell(map: &FeatureMap) -> (usize, usize, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut cell = (0usize, 0usize);
    for r in 0..map.height {
        for c in 0..map.width {
            let v = map.values[r * map.width + c];
            if v > best {
                best = v;
                cell = (r, c);
            }
        }
    }
    (cell.0, cell.1, best)
}

/// One-dimensional quadratic peak refinement from three samples.
fn quadratic_offset(prev: f64, center: f64, next: f64) -> f64 {
    let denom = prev - 2.0 * center + next;
    if denom.abs() < 1e-12 {
        0.0
    } else {
        (0.5 * (prev - next) / denom).clamp(-0.5, 0.5)
    }
}

/// Sub-cell peak refinement by separate 1-D quadratic fits along row and
/// column, with circular neighbor indexing.
pub fn refine_peak(map: &FeatureMap, cell: (usize, usize)) -> (f64, f64) {
    let (h, w) = (map.height, map.width);
    let at = |r: i64, c: i64| map.values[(r.rem_euclid(h as i64) as usize) * w + c.rem_euclid(w as i64) as usize];
    let (r, c) = (cell.0 as i64, cell.1 as i64);
    let dr = quadratic_offset(at(r - 1, c), at(r, c), at(r + 1, c));
    let dc = quadratic_offset(at(r, c - 1), at(r, c), at(r, c + 1));
    (cell.0 as f64 + dr, cell.1 as f64 + dc)
}

/// Fourier-domain detection: `f = 𝓕⁻¹(Σ_l conj(ĥ^l) ⊙ φ̂z^l)`.
pub fn detect(model: &DcfModel, phi_z: &FeatureMap) -> Result<Detection> {
    let ch = model.numerator.channels;
    if phi_z.height != model.numerator.height
        || phi_z.width != model.numerator.width
        || phi_z.channels != ch
    {
        return Err(Error::DimMismatch("detect: feature dims vs model".into()));
    }
    let z_spec = fft2(phi_z)?;
    let mut resp_spec = Spectrum::new(phi_z.height, phi_z.width, 1);
    for i in 0..phi_z.height * phi_z.width {
        let den = model.denominator.values[i].re + model.lambda;
        let mut acc = Complex64::new(0.0, 0.0);
        for d in 0..ch {
            let hv = model.numerator.values[i * ch + d] / den;
            acc += hv.conj() * z_spec.values[i * ch + d];
        }
        resp_spec.values[i] = acc;
    }
    let (response, _residue) = ifft2_real_checked(&resp_spec)?;
    let (pr, pc, peak_value) = argmax_cell(&response);
    let peak = refine_peak(&response, (pr, pc));
    Ok(Detection {
        response,
        peak_cell: (pr, pc),
        peak,
        peak_value,
    })
}

/// Moving-average update of the model statistics:
/// `A ← (1−μ)A + μ·A_new; B ← (1−μ)B + μ·B_new`.
pub fn update_model(
    model: &DcfModel,
    phi_x_new: &FeatureMap,
    g: &GaussianLabel,
    mu: f64,
) -> Result<DcfModel> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mu must be in [0,1], got {mu}")));
    }
    let fresh = train_filter(phi_x_new, g, model.lambda)?;
    if !fresh.numerator.same_dims(&model.numerator) {
        return Err(Error::DimMismatch("update_model feature dims".into()));
    }
    let mut out = model.clone();
    for (a, n) in out.numerator.values.iter_mut().zip(fresh.numerator.values.iter()) {
        *a = *a * (1.0 - mu) + n * mu;
    }
    for (b, n) in out
        .denominator
        .values
        .iter_mut()
        .zip(fresh.denominator.values.iter())
    {
        *b = *b * (1.0 - mu) + n * mu;
    }
    Ok(out)
}

/// Which feature stack the tracker extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "msc")]
    Msc,
    #[serde(rename = "hog")]
    Hog,
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "hog+raw")]
    HogRaw,
}

/// CRM selection settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrmConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    50
}
fn default_eta() -> f64 {
    3.0
}
fn default_zeta() -> f64 {
    1e-5
}

impl Default for CrmConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

/// Tracker configuration (JSON surface shared by the DCF and CCO trackers).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackerConfig {
    #[serde(default = "default_features")]
    pub features: FeatureKind,
    #[serde(default = "default_lambda_d")]
    pub lambda_d: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default = "default_scales")]
    pub scales: usize,
    #[serde(default = "default_scale_step")]
    pub scale_step: f64,
    #[serde(default = "default_scale_penalty")]
    pub scale_penalty: f64,
    #[serde(default)]
    pub crm: CrmConfig,
    /// Feature grid side length.
    #[serde(default = "default_model_size")]
    pub model_size: usize,
    /// Backbone stand-in geometry for the multi-level stack.
    #[serde(default = "default_shallow_size")]
    pub shallow_size: usize,
    #[serde(default = "default_deep_size")]
    pub deep_size: usize,
    #[serde(default = "default_hog_cell")]
    pub hog_cell: usize,
    #[serde(default)]
    pub head_checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    // continuous-operator extras
    #[serde(default = "default_grid_factor")]
    pub grid_factor: usize,
    /// Truncated coefficient bandwidth; `None` means the full resolution.
    #[serde(default)]
    pub bandwidth: Option<usize>,
    #[serde(default = "default_lambda_c")]
    pub lambda_c: f64,
}

fn default_features() -> FeatureKind {
    FeatureKind::Msc
}
fn default_lambda_d() -> f64 {
    1e-4
}
fn default_mu() -> f64 {
    0.012
}
fn default_padding() -> f64 {
    1.65
}
fn default_scales() -> usize {
    3
}
fn default_scale_step() -> f64 {
    1.0275
}
fn default_scale_penalty() -> f64 {
    0.9925
}
fn default_model_size() -> usize {
    52
}
fn default_shallow_size() -> usize {
    109
}
fn default_deep_size() -> usize {
    13
}
fn default_hog_cell() -> usize {
    4
}
fn default_grid_factor() -> usize {
    1
}
fn default_lambda_c() -> f64 {
    1e-4
}

impl Default for TrackerConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

impl TrackerConfig {
    /// MSC-DCF defaults.
    pub fn dcf() -> Self {
        Self::default()
    }

    /// MSC-CCO defaults: higher learning rate and padding, K = 58.
    pub fn cco() -> Self {
        let mut cfg = Self::default();
        cfg.mu = 9.4e-3;
        cfg.padding = 3.62;
        cfg.crm.k = 58;
        cfg
    }
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Bbox {
    pub fn center(&self) -> (f64, f64) {
        (self.y + self.h / 2.0, self.x + self.w / 2.0)
    }
}

/// Feature extractor shared by both trackers: config plus the (lazily
/// created) compression head.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub kind: FeatureKind,
    pub head: Option<CompressionHead>,
    pub model_size: usize,
    pub shallow_size: usize,
    pub deep_size: usize,
    pub hog_cell: usize,
}

impl FeatureExtractor {
    pub fn from_config(cfg: &TrackerConfig) -> Result<Self> {
        let head = if cfg.features == FeatureKind::Msc {
            Some(match &cfg.head_checkpoint {
                Some(path) => crate::features::checkpoint::load_head(path)?,
                None => CompressionHead::random(4, 4, LrnParams::default(), cfg.seed ^ 0x5eed),
            })
        } else {
            None
        };
        Ok(Self {
            kind: cfg.features,
            head,
            model_size: cfg.model_size,
            shallow_size: cfg.shallow_size,
            deep_size: cfg.deep_size,
            hog_cell: cfg.hog_cell,
        })
    }

    /// Feature grid side length produced by [`Self::extract`].
    pub fn grid_size(&self) -> usize {
        match self.kind {
            FeatureKind::Msc => (self.shallow_size - 7) / 2 + 1,
            _ => self.model_size,
        }
    }

    /// Extract the configured feature stack from a search patch.
    pub fn extract(&self, patch: &ImagePatch) -> Result<FeatureMap> {
        match self.kind {
            FeatureKind::Msc => {
                let (shallow, deep) = backbone_maps(patch, self.shallow_size, self.deep_size)?;
                msc_features(&shallow, &deep, self.head.as_ref().unwrap())
            }
            FeatureKind::Hog => {
                let px = resize_patch(patch, self.model_size * self.hog_cell, self.model_size * self.hog_cell)?;
                hog(&px, self.hog_cell)
            }
            FeatureKind::Raw => {
                let px = resize_patch(patch, self.model_size, self.model_size)?;
                let mut map = px.to_feature_map();
                for v in map.values.iter_mut() {
                    *v -= 0.5;
                }
                Ok(map)
            }
            FeatureKind::HogRaw => {
                let hogf = {
                    let px = resize_patch(
                        patch,
                        self.model_size * self.hog_cell,
                        self.model_size * self.hog_cell,
                    )?;
                    hog(&px, self.hog_cell)?
                };
                let raw = {
                    let px = resize_patch(patch, self.model_size, self.model_size)?;
                    let mut map = px.to_feature_map();
                    for v in map.values.iter_mut() {
                        *v -= 0.5;
                    }
                    map
                };
                concat_channels(&hogf, &raw)
            }
        }
    }
}

/// Mutable per-sequence tracker state.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub center: (f64, f64), // (row, col) pixels
    pub size: (f64, f64),   // (h, w) pixels
    pub scale: f64,
    pub model: DcfModel,
    /// Frozen CRM channel set, if selection ran at init.
    pub channels: Option<Vec<usize>>,
    pub config: TrackerConfig,
    pub extractor: FeatureExtractor,
    pub window: FeatureMap,
    pub label: GaussianLabel,
}

/// Scale exponents searched per frame, centered on zero.
pub fn scale_exponents(scales: usize) -> Vec<i64> {
    let half = (scales / 2) as i64;
    (-half..=half).collect()
}

fn clamp_center(center: (f64, f64), frame: &ImagePatch) -> (f64, f64) {
    (
        center.0.clamp(0.0, (frame.height - 1) as f64),
        center.1.clamp(0.0, (frame.width - 1) as f64),
    )
}

impl TrackerState {
    /// Initialize from the first frame's ground-truth box: extract
    /// features, run CRM selection on the deep block, train the model.
    pub fn init(frame: &ImagePatch, bbox: Bbox, config: TrackerConfig) -> Result<Self> {
        if bbox.w < 2.0 || bbox.h < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate bbox {}x{}",
                bbox.w, bbox.h
            )));
        }
        let extractor = FeatureExtractor::from_config(&config)?;
        let grid = extractor.grid_size();
        let center = clamp_center(bbox.center(), frame);
        let size = (bbox.h, bbox.w);
        let patch = extract_patch(frame, center, size, config.padding, patch_pixels(&extractor))?;
        let raw_features = extractor.extract(&patch)?;

        // target extent in feature cells
        let region_px = size.0.max(size.1) * (1.0 + config.padding);
        let cells_per_px = grid as f64 / region_px;
        let t_h = ((size.0 * cells_per_px).round() as usize).max(1);
        let t_w = ((size.1 * cells_per_px).round() as usize).max(1);

        // CRM on the deep channel block only, frozen for the sequence
        let channels = if config.crm.enabled && config.features == FeatureKind::Msc {
            let region = TargetRegion::centered(grid, grid, t_h, t_w);
            let (_, deep) = crate::features::split_channels(&raw_features, SHALLOW_OUT_CHANNELS)?;
            let scores = reliability_scores(&deep, &region, config.crm.eta, config.crm.zeta)?;
            let k = config.crm.k.min(deep.channels);
            let mut selected: Vec<usize> = select_top_k(&scores, k)?
                .into_iter()
                .map(|c| c + SHALLOW_OUT_CHANNELS)
                .collect();
            selected.sort_unstable();
            let mut all: Vec<usize> = (0..SHALLOW_OUT_CHANNELS).collect();
            all.extend(selected);
            Some(all)
        } else {
            None
        };

        let features = match &channels {
            Some(ch) => select_channels(&raw_features, ch)?,
            None => raw_features,
        };
        let window = hann_window(grid, grid);
        let sigma = default_sigma(t_h as f64, t_w as f64).max(0.5);
        let label = gaussian_label(grid, grid, (grid as f64 / 2.0, grid as f64 / 2.0), sigma)?;
        let windowed = apply_window(&features, &window)?;
        let model = train_filter(&windowed, &label, config.lambda_d)?;
        Ok(Self {
            center,
            size,
            scale: 1.0,
            model,
            channels,
            config,
            extractor,
            window,
            label,
        })
    }

    fn features_at(&self, frame: &ImagePatch, center: (f64, f64), size: (f64, f64)) -> Result<FeatureMap> {
        let patch = extract_patch(
            frame,
            center,
            size,
            self.config.padding,
            patch_pixels(&self.extractor),
        )?;
        let raw = self.extractor.extract(&patch)?;
        let feats = match &self.channels {
            Some(ch) => select_channels(&raw, ch)?,
            None => raw,
        };
        apply_window(&feats, &self.window)
    }

    /// Evaluate all scale candidates and return (index into exponents,
    /// detections per candidate).
    pub fn estimate_scale(&self, frame: &ImagePatch) -> Result<(usize, Vec<Detection>)> {
        let exps = scale_exponents(self.config.scales);
        let mut detections = Vec::with_capacity(exps.len());
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &e) in exps.iter().enumerate() {
            let s = self.config.scale_step.powi(e as i32);
            let size = (self.size.0 * s, self.size.1 * s);
            let feats = self.features_at(frame, self.center, size)?;
            let det = detect(&self.model, &feats)?;
            let penalized = det.peak_value * self.config.scale_penalty.powi(e.abs() as i32);
            if penalized > best.1 {
                best = (i, penalized);
            }
            detections.push(det);
        }
        Ok((best.0, detections))
    }

    /// Track one frame: detect over scales, move the center, update the
    /// model statistics. Returns the new bounding box.
    pub fn track_frame(&mut self, frame: &ImagePatch) -> Result<Bbox> {
        let exps = scale_exponents(self.config.scales);
        let (best_idx, detections) = self.estimate_scale(frame)?;
        let s = self.config.scale_step.powi(exps[best_idx] as i32);
        let det = &detections[best_idx];

        let grid = self.extractor.grid_size() as f64;
        let region_h = self.size.0 * s * (1.0 + self.config.padding);
        let region_w = self.size.1 * s * (1.0 + self.config.padding);
        // displacement in cells relative to the label center, wrapped
        let mut dr = det.peak.0 - grid / 2.0;
        let mut dc = det.peak.1 - grid / 2.0;
        if dr > grid / 2.0 {
            dr -= grid;
        }
        if dc > grid / 2.0 {
            dc -= grid;
        }
        let dy = dr * region_h / grid;
        let dx = dc * region_w / grid;

        self.center = clamp_center((self.center.0 + dy, self.center.1 + dx), frame);
        self.size = (self.size.0 * s, self.size.1 * s);
        self.scale *= s;

        let feats = self.features_at(frame, self.center, self.size)?;
        self.model = {
            let fresh_label = &self.label;
            update_model(&self.model, &feats, fresh_label, self.config.mu)?
        };
        Ok(self.bbox())
    }

    pub fn bbox(&self) -> Bbox {
        Bbox {
            x: self.center.1 - self.size.1 / 2.0,
            y: self.center.0 - self.size.0 / 2.0,
            w: self.size.1,
            h: self.size.0,
        }
    }
}

/// Search-patch resolution in pixels for a given extractor.
fn patch_pixels(extractor: &FeatureExtractor) -> usize {
    match extractor.kind {
        FeatureKind::Msc => extractor.shallow_size,
        FeatureKind::Hog | FeatureKind::HogRaw => extractor.model_size * extractor.hog_cell,
        FeatureKind::Raw => extractor.model_size,
    }
}
