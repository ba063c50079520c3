//! Continuous-convolution-operator tracker: cubic B-spline interpolation
//! of discrete feature channels into a periodic continuous domain, a
//! per-frequency ridge filter over the truncated Fourier coefficients, a
//! densely evaluated confidence map, and sub-pixel localization.
//!
//! Filter learning uses a kernel-weighted regularizer `λ_c Σ_d ‖b̂⊙f̂_d‖²`
//! (a Sobolev-style weighting by the interpolation kernel spectrum) instead
//! of a plain `λ_c‖f‖²`. Substituting `u_d = b̂⊙f̂_d` turns the solve into
//! exactly the multi-channel DCF normal equations, so full-bandwidth,
//! grid-factor-1 operation reproduces the DCF tracker bit-for-bit — which
//! keeps the simplified learning testable against an independent oracle.

use num_complex::Complex64;

use crate::dcf::{argmax_cell, Bbox, Detection, FeatureExtractor, FeatureKind, TrackerConfig};
use crate::error::{Error, Result};
use crate::features::{
    concat_channels, extract_patch, hog, pca_fit, pca_project, resize_patch, split_channels,
    ImagePatch, PcaProjector, PCA_DIM, SHALLOW_OUT_CHANNELS,
};
use crate::tensor::{
    apply_window, default_sigma, fft2, gaussian_label, hann_window, ifft2_real_checked, FeatureMap,
    GaussianLabel, Spectrum,
};

/// Cubic B-spline on a unit-spaced grid; support `[-2, 2]`, partition of
/// unity: `Σ_n β(t − n) = 1` for every real `t`.
pub fn bspline3(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + a * a * a / 2.0
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Periodized interpolation kernel for `n` samples over period `period`:
/// `b(t) = Σ_m β((t − m·period)/Δ)` with grid spacing `Δ = period/n`.
#[derive(Debug, Clone)]
pub struct InterpKernel {
    pub period: f64,
    pub samples: usize,
    /// Support radius of the underlying B-spline in grid cells.
    pub support: f64,
}

impl InterpKernel {
    pub fn cubic(period: f64, samples: usize) -> Result<Self> {
        if samples == 0 || period <= 0.0 {
            return Err(Error::InvalidArgument("kernel needs samples > 0, period > 0".into()));
        }
        Ok(Self {
            period,
            samples,
            support: 2.0,
        })
    }

    /// Grid spacing `Δ = period / samples`.
    pub fn spacing(&self) -> f64 {
        self.period / self.samples as f64
    }

    /// Evaluate the periodized kernel at `t` (any real argument).
    pub fn eval(&self, t: f64) -> f64 {
        let delta = self.spacing();
        let tw = t.rem_euclid(self.period);
        let mut acc = 0.0;
        // the periodic images within support of [0, period)
        for m in -1..=1 {
            acc += bspline3((tw - m as f64 * self.period) / delta);
        }
        acc
    }

    /// Continuous Fourier coefficient of the periodized kernel at signed
    /// harmonic `k` (Poisson summation): `b̂_k = (1/N)·sinc⁴(k/N)`.
    pub fn spectrum_coeff(&self, k: i64) -> f64 {
        let n = self.samples as f64;
        let f = k as f64 / n;
        let s = if f == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * f).sin() / (std::f64::consts::PI * f)
        };
        s.powi(4) / n
    }

    /// Spectrum coefficients in DFT bin order (bin j ↦ signed harmonic
    /// `j` for `j ≤ N/2`, else `j − N`).
    pub fn spectrum_bins(&self) -> Vec<f64> {
        (0..self.samples)
            .map(|j| self.spectrum_coeff(signed_freq(j, self.samples)))
            .collect()
    }
}

/// Map DFT bin index to its signed harmonic (Nyquist bin ↦ `+N/2`).
pub fn signed_freq(bin: usize, n: usize) -> i64 {
    if bin <= n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

/// Direct-sum interpolation (Eq.-style): `J{y}(p) = Σ_n y[n]·b(p − Δn)`,
/// summed circularly; `p` outside `[0, P)` is wrapped.
pub fn interpolate_channel(samples: &[f64], kernel: &InterpKernel, p: f64) -> Result<f64> {
    if samples.len() != kernel.samples {
        return Err(Error::DimMismatch(format!(
            "interpolate_channel: {} samples vs kernel size {}",
            samples.len(),
            kernel.samples
        )));
    }
    let delta = kernel.spacing();
    let pw = p.rem_euclid(kernel.period);
    let mut acc = 0.0;
    for (n, &y) in samples.iter().enumerate() {
        acc += y * kernel.eval(pw - delta * n as f64);
    }
    Ok(acc)
}

/// Continuous filter: per-channel truncated Fourier coefficients `f̂_d`
/// stored in DFT bin order, plus the band limit used during training.
#[derive(Debug, Clone)]
pub struct CcoFilter {
    pub coeffs: Spectrum,
    /// Per-axis harmonic limit; `None` = full resolution.
    pub bandwidth: Option<usize>,
    pub lambda: f64,
}

/// True when the 2-D bin lies inside the truncated band `max(|k1|,|k2|) ≤ B`.
fn in_band(r: usize, c: usize, h: usize, w: usize, bandwidth: Option<usize>) -> bool {
    match bandwidth {
        None => true,
        Some(b) => {
            signed_freq(r, h).unsigned_abs() as usize <= b
                && signed_freq(c, w).unsigned_abs() as usize <= b
            }
    }
}

/// 2-D separable kernel spectrum value at a bin pair.
fn kernel_bin(kr: &[f64], kc: &[f64], r: usize, c: usize) -> f64 {
    kr[r] * kc[c]
}

/// Per-frequency ridge solve over the truncated Fourier coefficients of the
/// interpolated feature channels (kernel-weighted regularization; see the
/// module docs). Returns the continuous filter coefficients `f̂_d = u_d/b̂`.
pub fn train_cco_filter(
    phi_x: &FeatureMap,
    g: &GaussianLabel,
    lambda_c: f64,
    bandwidth: Option<usize>,
) -> Result<CcoFilter> {
    if lambda_c <= 0.0 {
        return Err(Error::InvalidArgument("lambda_c must be > 0".into()));
    }
    if g.map.height != phi_x.height || g.map.width != phi_x.width {
        return Err(Error::DimMismatch("train_cco_filter label dims".into()));
    }
    let (h, w, ch) = (phi_x.height, phi_x.width, phi_x.channels);
    let x_spec = fft2(phi_x)?;
    let g_spec = fft2(&g.map)?;
    let krow = InterpKernel::cubic(h as f64, h)?.spectrum_bins();
    let kcol = InterpKernel::cubic(w as f64, w)?.spectrum_bins();
    let mut coeffs = Spectrum::new(h, w, ch);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !in_band(r, c, h, w, bandwidth) {
                continue;
            }
            let mut den = lambda_c;
            for d in 0..ch {
                den += x_spec.values[i * ch + d].norm_sqr();
            }
            let b = kernel_bin(&krow, &kcol, r, c);
            let gv = g_spec.values[i];
            for d in 0..ch {
                let u = x_spec.values[i * ch + d].conj() * gv / den;
                coeffs.values[i * ch + d] = u / b;
            }
        }
    }
    Ok(CcoFilter {
        coeffs,
        bandwidth,
        lambda: lambda_c,
    })
}

/// Kernel-weighted training objective of a filter on `(φx, g)`:
/// `Σ_bins ‖Σ_d u_d x̂_d − ĝ‖² + λ Σ_d ‖u_d‖²` with `u = b̂⊙f̂` (bins
/// outside the filter's band contribute `‖ĝ‖²`).
pub fn cco_objective(filter: &CcoFilter, phi_x: &FeatureMap, g: &GaussianLabel) -> Result<f64> {
    let (h, w, ch) = (phi_x.height, phi_x.width, phi_x.channels);
    if filter.coeffs.height != h || filter.coeffs.width != w || filter.coeffs.channels != ch {
        return Err(Error::DimMismatch("cco_objective dims".into()));
    }
    let x_spec = fft2(phi_x)?;
    let g_spec = fft2(&g.map)?;
    let krow = InterpKernel::cubic(h as f64, h)?.spectrum_bins();
    let kcol = InterpKernel::cubic(w as f64, w)?.spectrum_bins();
    let mut obj = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let b = kernel_bin(&krow, &kcol, r, c);
            let mut fit = -g_spec.values[i];
            let mut reg = 0.0;
            for d in 0..ch {
                let u = filter.coeffs.values[i * ch + d] * b;
                fit += u * x_spec.values[i * ch + d];
                reg += u.norm_sqr();
            }
            obj += fit.norm_sqr() + filter.lambda * reg;
        }
    }
    Ok(obj)
}

/// Evaluate `Q_f{z} = Σ_d f^d ⊛ J_d{z^d}` on a `grid_factor`-times-denser
/// grid via zero-padded inverse transform of the coefficient products.
pub fn confidence_map(filter: &CcoFilter, phi_z: &FeatureMap, grid_factor: usize) -> Result<FeatureMap> {
    if grid_factor == 0 {
        return Err(Error::InvalidArgument("grid_factor must be ≥ 1".into()));
    }
    let (h, w, ch) = (phi_z.height, phi_z.width, phi_z.channels);
    if filter.coeffs.height != h || filter.coeffs.width != w || filter.coeffs.channels != ch {
        return Err(Error::DimMismatch("confidence_map dims".into()));
    }
    let z_spec = fft2(phi_z)?;
    let krow = InterpKernel::cubic(h as f64, h)?.spectrum_bins();
    let kcol = InterpKernel::cubic(w as f64, w)?.spectrum_bins();
    // response coefficients at the coarse bins: ŝ = Σ_d f̂_d · b̂ · ẑ_d
    let mut s = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !in_band(r, c, h, w, filter.bandwidth) {
                continue;
            }
            let b = kernel_bin(&krow, &kcol, r, c);
            let mut acc = Complex64::new(0.0, 0.0);
            for d in 0..ch {
                acc += filter.coeffs.values[i * ch + d] * b * z_spec.values[i * ch + d];
            }
            s[i] = acc;
        }
    }
    if grid_factor == 1 {
        let mut spec = Spectrum::new(h, w, 1);
        spec.values = s;
        let (map, _res) = ifft2_real_checked(&spec)?;
        return Ok(map);
    }
    // zero-pad to the fine grid, splitting Nyquist bins so the evaluated
    // trigonometric polynomial stays real
    let (fh, fw) = (h * grid_factor, w * grid_factor);
    let mut fine = Spectrum::new(fh, fw, 1);
    for r in 0..h {
        let kr = signed_freq(r, h);
        let row_split = h % 2 == 0 && r == h / 2;
        for c in 0..w {
            let kc = signed_freq(c, w);
            let col_split = w % 2 == 0 && c == w / 2;
            let mut parts: Vec<(i64, i64, f64)> = vec![(kr, kc, 1.0)];
            if row_split {
                parts = parts
                    .into_iter()
                    .flat_map(|(_, kc, wgt)| [(kr, kc, wgt / 2.0), (-kr, kc, wgt / 2.0)])
                    .collect();
            }
            if col_split {
                parts = parts
                    .into_iter()
                    .flat_map(|(kr, _, wgt)| [(kr, kc, wgt / 2.0), (kr, -kc, wgt / 2.0)])
                    .collect();
            }
            let v = s[r * w + c];
            for (pr, pc, wgt) in parts {
                let br = pr.rem_euclid(fh as i64) as usize;
                let bc = pc.rem_euclid(fw as i64) as usize;
                fine.values[br * fw + bc] += v * wgt;
            }
        }
    }
    let (mut map, _res) = ifft2_real_checked(&fine)?;
    let scale = (grid_factor * grid_factor) as f64;
    for v in map.values.iter_mut() {
        *v *= scale;
    }
    Ok(map)
}

/// Dense-grid argmax plus one quadratic refinement step; returns the peak
/// in coarse-grid (original cell) units along with the peak value.
pub fn localize_subpixel(map: &FeatureMap, grid_factor: usize) -> Result<((f64, f64), f64)> {
    if map.height == 0 || map.width == 0 || grid_factor == 0 {
        return Err(Error::InvalidArgument("empty map or zero grid_factor".into()));
    }
    let (r, c, peak_value) = argmax_cell(map);
    let refined = crate::dcf::refine_peak(map, (r, c));
    let gf = grid_factor as f64;
    Ok(((refined.0 / gf, refined.1 / gf), peak_value))
}

/// Running CCO model statistics (same moving-average scheme as the DCF
/// tracker, stored over the raw feature spectra).
#[derive(Debug, Clone)]
pub struct CcoModel {
    /// `Σ`-style numerator `conj(x̂_d)⊙ĝ` per channel.
    pub numerator: Spectrum,
    /// Shared real denominator `Σ_d |x̂_d|²`.
    pub denominator: Spectrum,
    pub lambda: f64,
    pub bandwidth: Option<usize>,
}

impl CcoModel {
    pub fn train(phi_x: &FeatureMap, g: &GaussianLabel, lambda_c: f64, bandwidth: Option<usize>) -> Result<Self> {
        if lambda_c <= 0.0 {
            return Err(Error::InvalidArgument("lambda_c must be > 0".into()));
        }
        let x_spec = fft2(phi_x)?;
        let g_spec = fft2(&g.map)?;
        let (h, w, ch) = (phi_x.height, phi_x.width, phi_x.channels);
        let mut numerator = Spectrum::new(h, w, ch);
        let mut denominator = Spectrum::new(h, w, 1);
        for i in 0..h * w {
            let gv = g_spec.values[i];
            let mut b = 0.0;
            for d in 0..ch {
                let xv = x_spec.values[i * ch + d];
                numerator.values[i * ch + d] = xv.conj() * gv;
                b += xv.norm_sqr();
            }
            denominator.values[i] = Complex64::new(b, 0.0);
        }
        Ok(Self {
            numerator,
            denominator,
            lambda: lambda_c,
            bandwidth,
        })
    }

    pub fn update(&mut self, phi_x_new: &FeatureMap, g: &GaussianLabel, mu: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidArgument(format!("mu must be in [0,1], got {mu}")));
        }
        let fresh = Self::train(phi_x_new, g, self.lambda, self.bandwidth)?;
        if !fresh.numerator.same_dims(&self.numerator) {
            return Err(Error::DimMismatch("cco update feature dims".into()));
        }
        for (a, n) in self.numerator.values.iter_mut().zip(fresh.numerator.values.iter()) {
            *a = *a * (1.0 - mu) + n * mu;
        }
        for (b, n) in self
            .denominator
            .values
            .iter_mut()
            .zip(fresh.denominator.values.iter())
        {
            *b = *b * (1.0 - mu) + n * mu;
        }
        Ok(())
    }

    /// Materialize the continuous filter from the running statistics.
    pub fn filter(&self) -> Result<CcoFilter> {
        let (h, w, ch) = (
            self.numerator.height,
            self.numerator.width,
            self.numerator.channels,
        );
        let krow = InterpKernel::cubic(h as f64, h)?.spectrum_bins();
        let kcol = InterpKernel::cubic(w as f64, w)?.spectrum_bins();
        let mut coeffs = Spectrum::new(h, w, ch);
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if !in_band(r, c, h, w, self.bandwidth) {
                    continue;
                }
                let den = self.denominator.values[i].re + self.lambda;
                let b = kernel_bin(&krow, &kcol, r, c);
                for d in 0..ch {
                    coeffs.values[i * ch + d] = self.numerator.values[i * ch + d] / (den * b);
                }
            }
        }
        Ok(CcoFilter {
            coeffs,
            bandwidth: self.bandwidth,
            lambda: self.lambda,
        })
    }
}

/// Per-sequence state of the continuous-operator tracker. Mirrors the DCF
/// glue; MSC features are PCA-compressed and concatenated with HOG.
#[derive(Debug, Clone)]
pub struct CcoTracker {
    pub center: (f64, f64),
    pub size: (f64, f64),
    pub scale: f64,
    pub model: CcoModel,
    pub channels: Option<Vec<usize>>,
    pub pca: Option<PcaProjector>,
    pub config: TrackerConfig,
    pub extractor: FeatureExtractor,
    pub window: FeatureMap,
    pub label: GaussianLabel,
}

impl CcoTracker {
    fn raw_features(
        extractor: &FeatureExtractor,
        config: &TrackerConfig,
        frame: &ImagePatch,
        center: (f64, f64),
        size: (f64, f64),
    ) -> Result<FeatureMap> {
        match extractor.kind {
            FeatureKind::Msc => {
                let patch = extract_patch(frame, center, size, config.padding, extractor.shallow_size)?;
                let msc = extractor.extract(&patch)?;
                let grid = extractor.grid_size();
                let hog_patch = extract_patch(
                    frame,
                    center,
                    size,
                    config.padding,
                    grid * extractor.hog_cell,
                )?;
                let hogf = hog(&hog_patch, extractor.hog_cell)?;
                concat_channels(&msc, &hogf)
            }
            FeatureKind::Hog | FeatureKind::HogRaw => {
                let patch = extract_patch(
                    frame,
                    center,
                    size,
                    config.padding,
                    extractor.model_size * extractor.hog_cell,
                )?;
                match extractor.kind {
                    FeatureKind::Hog => hog(&patch, extractor.hog_cell),
                    _ => {
                        let hogf = hog(&patch, extractor.hog_cell)?;
                        let small = resize_patch(&patch, extractor.model_size, extractor.model_size)?;
                        let mut raw = small.to_feature_map();
                        for v in raw.values.iter_mut() {
                            *v -= 0.5;
                        }
                        concat_channels(&hogf, &raw)
                    }
                }
            }
            FeatureKind::Raw => {
                let patch = extract_patch(frame, center, size, config.padding, extractor.model_size)?;
                let mut map = patch.to_feature_map();
                for v in map.values.iter_mut() {
                    *v -= 0.5;
                }
                Ok(map)
            }
        }
    }

    /// Split a combined MSC+HOG stack, apply frozen CRM/PCA to the MSC
    /// part, and re-concatenate.
    fn compress(
        &self,
        raw: &FeatureMap,
    ) -> Result<FeatureMap> {
        if self.extractor.kind != FeatureKind::Msc {
            return Ok(raw.clone());
        }
        let msc_channels = raw.channels - crate::features::HOG_CHANNELS;
        let (msc, hogf) = split_channels(raw, msc_channels)?;
        let msc = match &self.channels {
            Some(ch) => crate::crm::select_channels(&msc, ch)?,
            None => msc,
        };
        let msc = match &self.pca {
            Some(p) => pca_project(p, &msc)?,
            None => msc,
        };
        concat_channels(&msc, &hogf)
    }

    /// Initialize from the first frame's ground-truth box.
    pub fn init(frame: &ImagePatch, bbox: Bbox, config: TrackerConfig) -> Result<Self> {
        if bbox.w < 2.0 || bbox.h < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate bbox {}x{}",
                bbox.w, bbox.h
            )));
        }
        let extractor = FeatureExtractor::from_config(&config)?;
        let grid = extractor.grid_size();
        let center = (
            bbox.center().0.clamp(0.0, (frame.height - 1) as f64),
            bbox.center().1.clamp(0.0, (frame.width - 1) as f64),
        );
        let size = (bbox.h, bbox.w);
        let raw = Self::raw_features(&extractor, &config, frame, center, size)?;

        let region_px = size.0.max(size.1) * (1.0 + config.padding);
        let cells_per_px = grid as f64 / region_px;
        let t_h = ((size.0 * cells_per_px).round() as usize).max(1);
        let t_w = ((size.1 * cells_per_px).round() as usize).max(1);

        // CRM selection on the deep MSC block, then PCA over the selected
        // MSC channels; both frozen for the sequence
        let (channels, pca) = if extractor.kind == FeatureKind::Msc {
            let msc_channels = raw.channels - crate::features::HOG_CHANNELS;
            let (msc, _) = split_channels(&raw, msc_channels)?;
            let channels = if config.crm.enabled {
                let region = crate::crm::TargetRegion::centered(grid, grid, t_h, t_w);
                let (_, deep) = split_channels(&msc, SHALLOW_OUT_CHANNELS)?;
                let scores =
                    crate::crm::reliability_scores(&deep, &region, config.crm.eta, config.crm.zeta)?;
                let k = config.crm.k.min(deep.channels);
                let mut selected: Vec<usize> = crate::crm::select_top_k(&scores, k)?
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
            let selected_msc = match &channels {
                Some(ch) => crate::crm::select_channels(&msc, ch)?,
                None => msc,
            };
            let pca = if selected_msc.channels > PCA_DIM {
                let samples: Vec<Vec<f64>> = (0..selected_msc.height * selected_msc.width)
                    .map(|i| {
                        selected_msc.values
                            [i * selected_msc.channels..(i + 1) * selected_msc.channels]
                            .to_vec()
                    })
                    .collect();
                Some(pca_fit(&samples, PCA_DIM)?)
            } else {
                None
            };
            (channels, pca)
        } else {
            (None, None)
        };

        let window = hann_window(grid, grid);
        let sigma = default_sigma(t_h as f64, t_w as f64).max(0.5);
        let label = gaussian_label(grid, grid, (grid as f64 / 2.0, grid as f64 / 2.0), sigma)?;

        let mut tracker = Self {
            center,
            size,
            scale: 1.0,
            model: CcoModel {
                numerator: Spectrum::new(1, 1, 1),
                denominator: Spectrum::new(1, 1, 1),
                lambda: config.lambda_c,
                bandwidth: config.bandwidth,
            },
            channels,
            pca,
            config,
            extractor,
            window,
            label,
        };
        let feats = apply_window(&tracker.compress(&raw)?, &tracker.window)?;
        tracker.model = CcoModel::train(
            &feats,
            &tracker.label,
            tracker.config.lambda_c,
            tracker.config.bandwidth,
        )?;
        Ok(tracker)
    }

    fn features_at(&self, frame: &ImagePatch, center: (f64, f64), size: (f64, f64)) -> Result<FeatureMap> {
        let raw = Self::raw_features(&self.extractor, &self.config, frame, center, size)?;
        apply_window(&self.compress(&raw)?, &self.window)
    }

    /// Evaluate all scale candidates; returns the best index plus each
    /// candidate's sub-pixel peak (coarse-cell units) and peak value.
    pub fn estimate_scale(&self, frame: &ImagePatch) -> Result<(usize, Vec<((f64, f64), f64)>)> {
        let exps = crate::dcf::scale_exponents(self.config.scales);
        let filter = self.model.filter()?;
        let mut results = Vec::with_capacity(exps.len());
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &e) in exps.iter().enumerate() {
            let s = self.config.scale_step.powi(e as i32);
            let size = (self.size.0 * s, self.size.1 * s);
            let feats = self.features_at(frame, center_of(self), size)?;
            let map = confidence_map(&filter, &feats, self.config.grid_factor)?;
            let (peak, value) = localize_subpixel(&map, self.config.grid_factor)?;
            let penalized = value * self.config.scale_penalty.powi(e.abs() as i32);
            if penalized > best.1 {
                best = (i, penalized);
            }
            results.push((peak, value));
        }
        Ok((best.0, results))
    }

    /// Track one frame and return the new bounding box.
    pub fn track_frame(&mut self, frame: &ImagePatch) -> Result<Bbox> {
        let exps = crate::dcf::scale_exponents(self.config.scales);
        let (best_idx, candidates) = self.estimate_scale(frame)?;
        let s = self.config.scale_step.powi(exps[best_idx] as i32);
        let (peak, _) = candidates[best_idx];

        let grid = self.extractor.grid_size() as f64;
        let region_h = self.size.0 * s * (1.0 + self.config.padding);
        let region_w = self.size.1 * s * (1.0 + self.config.padding);
        let mut dr = peak.0 - grid / 2.0;
        let mut dc = peak.1 - grid / 2.0;
        if dr > grid / 2.0 {
            dr -= grid;
        }
        if dc > grid / 2.0 {
            dc -= grid;
        }
        self.center = (
            (self.center.0 + dr * region_h / grid).clamp(0.0, (frame.height - 1) as f64),
            (self.center.1 + dc * region_w / grid).clamp(0.0, (frame.width - 1) as f64),
        );
        self.size = (self.size.0 * s, self.size.1 * s);
        self.scale *= s;

        let feats = self.features_at(frame, self.center, self.size)?;
        let label = self.label.clone();
        self.model.update(&feats, &label, self.config.mu)?;
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

    /// Detection on explicit features, exposed for cross-model checks.
    pub fn detect_features(&self, feats: &FeatureMap) -> Result<Detection> {
        let filter = self.model.filter()?;
        let map = confidence_map(&filter, feats, 1)?;
        let (r, c, peak_value) = argmax_cell(&map);
        let peak = crate::dcf::refine_peak(&map, (r, c));
        Ok(Detection {
            response: map,
            peak_cell: (r, c),
            peak,
            peak_value,
        })
    }
}

fn center_of(t: &CcoTracker) -> (f64, f64) {
    t.center
}
