//! Dense real/complex tensor types, per-channel 2-D FFT, spectral algebra,
//! window and label generation.
//!
//! FFT convention: unnormalized forward transform, `1/(H*W)`-scaled inverse.
//! All tensors are row-major, channel-last: index `(r, c, d)` maps to
//! `(r * width + c) * channels + d`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub mod io;

/// Real-valued H×W×D tensor; the carrier of all features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![0.0; height * width * channels],
        }
    }

    pub fn from_values(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidArgument("tensor dims must be positive".into()));
        }
        if values.len() != height * width * channels {
            return Err(Error::DimMismatch(format!(
                "expected {} values, got {}",
                height * width * channels,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("FeatureMap values".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    #[inline]
    pub fn idx(&self, r: usize, c: usize, d: usize) -> usize {
        (r * self.width + c) * self.channels + d
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, d: usize) -> f64 {
        self.values[(r * self.width + c) * self.channels + d]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, d: usize, v: f64) {
        self.values[(r * self.width + c) * self.channels + d] = v;
    }

    pub fn same_dims(&self, other: &FeatureMap) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Single channel as a standalone map.
    pub fn channel(&self, d: usize) -> FeatureMap {
        let mut out = FeatureMap::new(self.height, self.width, 1);
        for r in 0..self.height {
            for c in 0..self.width {
                out.values[r * self.width + c] = self.get(r, c, d);
            }
        }
        out
    }

    /// Circular shift by (dr, dc): output[r, c] = input[(r - dr) mod H, (c - dc) mod W].
    pub fn circular_shift(&self, dr: i64, dc: i64) -> FeatureMap {
        let (h, w) = (self.height as i64, self.width as i64);
        let mut out = FeatureMap::new(self.height, self.width, self.channels);
        for r in 0..h {
            for c in 0..w {
                let sr = (r - dr).rem_euclid(h) as usize;
                let sc = (c - dc).rem_euclid(w) as usize;
                for d in 0..self.channels {
                    let v = self.get(sr, sc, d);
                    out.set(r as usize, c as usize, d, v);
                }
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> FeatureMap {
        FeatureMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }
}

/// Complex H×W×D frequency-domain tensor paired to a [`FeatureMap`] by
/// per-channel 2-D DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![Complex64::new(0.0, 0.0); height * width * channels],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, d: usize) -> Complex64 {
        self.values[(r * self.width + c) * self.channels + d]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, d: usize, v: Complex64) {
        self.values[(r * self.width + c) * self.channels + d] = v;
    }

    pub fn same_dims(&self, other: &Spectrum) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn channel(&self, d: usize) -> Spectrum {
        let mut out = Spectrum::new(self.height, self.width, 1);
        for i in 0..self.height * self.width {
            out.values[i] = self.values[i * self.channels + d];
        }
        out
    }

    /// Elementwise conjugate.
    pub fn conj(&self) -> Spectrum {
        Spectrum {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

/// Elementwise complex product of equally shaped spectra.
pub fn hadamard(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    if !a.same_dims(b) {
        return Err(Error::DimMismatch(format!(
            "hadamard: {}x{}x{} vs {}x{}x{}",
            a.height, a.width, a.channels, b.height, b.width, b.channels
        )));
    }
    Ok(Spectrum {
        height: a.height,
        width: a.width,
        channels: a.channels,
        values: a
            .values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| x * y)
            .collect(),
    })
}

fn fft2_channel(
    planner: &mut FftPlanner<f64>,
    data: &mut [Complex64],
    h: usize,
    w: usize,
    inverse: bool,
) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    for r in 0..h {
        row_fft.process(&mut data[r * w..(r + 1) * w]);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = data[r * w + c];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            data[r * w + c] = col[r];
        }
    }
}

/// Per-channel 2-D DFT (unnormalized forward).
pub fn fft2(map: &FeatureMap) -> Result<Spectrum> {
    if map.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fft2 input".into()));
    }
    let (h, w, ch) = (map.height, map.width, map.channels);
    let mut planner = FftPlanner::new();
    let mut out = Spectrum::new(h, w, ch);
    let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
    for d in 0..ch {
        for i in 0..h * w {
            buf[i] = Complex64::new(map.values[i * ch + d], 0.0);
        }
        fft2_channel(&mut planner, &mut buf, h, w, false);
        for i in 0..h * w {
            out.values[i * ch + d] = buf[i];
        }
    }
    Ok(out)
}

/// Per-channel inverse 2-D DFT, scaled by `1/(H*W)`. The imaginary part is
/// discarded; use [`ifft2_complex`] when it matters.
pub fn ifft2(spec: &Spectrum) -> Result<FeatureMap> {
    let (map, _residue) = ifft2_real_checked(spec)?;
    Ok(map)
}

/// Inverse transform returning the real part plus the largest imaginary
/// residue observed before discarding it.
pub fn ifft2_real_checked(spec: &Spectrum) -> Result<(FeatureMap, f64)> {
    if spec.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("ifft2 input".into()));
    }
    let (h, w, ch) = (spec.height, spec.width, spec.channels);
    let scale = 1.0 / (h * w) as f64;
    let mut planner = FftPlanner::new();
    let mut out = FeatureMap::new(h, w, ch);
    let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
    let mut residue = 0.0f64;
    for d in 0..ch {
        for i in 0..h * w {
            buf[i] = spec.values[i * ch + d];
        }
        fft2_channel(&mut planner, &mut buf, h, w, true);
        for i in 0..h * w {
            let v = buf[i] * scale;
            residue = residue.max(v.im.abs());
            out.values[i * ch + d] = v.re;
        }
    }
    Ok((out, residue))
}

/// Periodic Gaussian regression target with peak 1 at the center cell.
#[derive(Debug, Clone)]
pub struct GaussianLabel {
    pub map: FeatureMap,
    pub center: (f64, f64),
    pub sigma: f64,
}

/// Build a wrapped (circularly periodic) Gaussian label.
///
/// `center` is a (row, col) real subcell position; distances are measured on
/// the torus so the label is consistent with the circulant shift model.
pub fn gaussian_label(h: usize, w: usize, center: (f64, f64), sigma: f64) -> Result<GaussianLabel> {
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument("label dims must be positive".into()));
    }
    let mut map = FeatureMap::new(h, w, 1);
    for r in 0..h {
        for c in 0..w {
            let dr = wrapped_dist(r as f64 - center.0, h as f64);
            let dc = wrapped_dist(c as f64 - center.1, w as f64);
            let v = (-0.5 * (dr * dr + dc * dc) / (sigma * sigma)).exp();
            map.values[r * w + c] = v;
        }
    }
    Ok(GaussianLabel {
        map,
        center,
        sigma,
    })
}

fn wrapped_dist(d: f64, period: f64) -> f64 {
    let m = d.rem_euclid(period);
    if m > period / 2.0 {
        m - period
    } else {
        m
    }
}

/// Default label bandwidth: sqrt(target area in cells) / 10.
pub fn default_sigma(target_h_cells: f64, target_w_cells: f64) -> f64 {
    (target_h_cells * target_w_cells).sqrt() / 10.0
}

/// Single-channel 2-D Hann window; zero on the border, 1 at the center for
/// odd dims. A 1-length axis degenerates to 1.
pub fn hann_window(h: usize, w: usize) -> FeatureMap {
    let hann = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let nm1 = (n - 1) as f64;
        (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / nm1).cos())
            .collect()
    };
    let wr = hann(h);
    let wc = hann(w);
    let mut out = FeatureMap::new(h, w, 1);
    for r in 0..h {
        for c in 0..w {
            out.values[r * w + c] = wr[r] * wc[c];
        }
    }
    out
}

/// Multiply every channel of `map` by the single-channel `window`.
pub fn apply_window(map: &FeatureMap, window: &FeatureMap) -> Result<FeatureMap> {
    if window.channels != 1 || window.height != map.height || window.width != map.width {
        return Err(Error::DimMismatch(format!(
            "apply_window: window {}x{}x{} vs map {}x{}x{}",
            window.height, window.width, window.channels, map.height, map.width, map.channels
        )));
    }
    let mut out = map.clone();
    for r in 0..map.height {
        for c in 0..map.width {
            let wv = window.values[r * map.width + c];
            for d in 0..map.channels {
                let i = out.idx(r, c, d);
                out.values[i] *= wv;
            }
        }
    }
    Ok(out)
}

/// Direct O(H²W²) spatial-domain circular correlation, summed over channels.
///
/// `r[m,n] = Σ_l Σ_{p,q} h[p,q,l] · z[(p+m) mod H, (q+n) mod W, l]`.
/// Used as a test oracle against the Fourier-domain detection path.
pub fn circular_correlate_spatial(h: &FeatureMap, z: &FeatureMap) -> Result<FeatureMap> {
    if !h.same_dims(z) {
        return Err(Error::DimMismatch("circular_correlate_spatial".into()));
    }
    let (hh, ww, ch) = (h.height, h.width, h.channels);
    let mut out = FeatureMap::new(hh, ww, 1);
    for m in 0..hh {
        for n in 0..ww {
            let mut acc = 0.0;
            for p in 0..hh {
                let pr = (p + m) % hh;
                for q in 0..ww {
                    let qc = (q + n) % ww;
                    for d in 0..ch {
                        acc += h.get(p, q, d) * z.get(pr, qc, d);
                    }
                }
            }
            out.values[m * ww + n] = acc;
        }
    }
    Ok(out)
}

/// Fourier-path circular correlation: `𝓕⁻¹(Σ_l conj(ĥ^l) ⊙ ẑ^l)`.
pub fn circular_correlate_fourier(h: &FeatureMap, z: &FeatureMap) -> Result<FeatureMap> {
    if !h.same_dims(z) {
        return Err(Error::DimMismatch("circular_correlate_fourier".into()));
    }
    let hs = fft2(h)?;
    let zs = fft2(z)?;
    let mut acc = Spectrum::new(h.height, h.width, 1);
    for i in 0..h.height * h.width {
        let mut s = Complex64::new(0.0, 0.0);
        for d in 0..h.channels {
            s += hs.values[i * h.channels + d].conj() * zs.values[i * h.channels + d];
        }
        acc.values[i] = s;
    }
    ifft2(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, h: usize, w: usize, d: usize) -> FeatureMap {
        let values = (0..h * w * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureMap::from_values(h, w, d, values).unwrap()
    }

    #[test]
    fn constant_map_has_dc_only_spectrum() {
        let c = 0.37;
        let m = FeatureMap::from_values(8, 8, 1, vec![c; 64]).unwrap();
        let s = fft2(&m).unwrap();
        assert_relative_eq!(s.values[0].re, 64.0 * c, max_relative = 1e-12);
        assert!(s.values[0].im.abs() < 1e-12);
        for v in &s.values[1..] {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut m = FeatureMap::new(4, 6, 1);
        m.values[0] = 1.0;
        let s = fft2(&m).unwrap();
        for v in &s.values {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_map(&mut rng, 5, 7, 1);
        let s = fft2(&m).unwrap();
        let spatial: f64 = m.values.iter().map(|v| v * v).sum();
        let freq: f64 = s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / 35.0;
        assert_relative_eq!(spatial, freq, max_relative = 1e-9);
    }

    #[test]
    fn fft_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(h, w, d) in &[(3, 3, 1), (5, 7, 2), (8, 8, 3), (16, 16, 4)] {
            let m = random_map(&mut rng, h, w, d);
            let back = ifft2(&fft2(&m).unwrap()).unwrap();
            for (a, b) in m.values.iter().zip(back.values.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_symmetry_of_real_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_map(&mut rng, 6, 9, 2);
        let s = fft2(&m).unwrap();
        for r in 0..6 {
            for c in 0..9 {
                for d in 0..2 {
                    let a = s.get(r, c, d);
                    let b = s.get((6 - r) % 6, (9 - c) % 9, d).conj();
                    assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn fft2_rejects_non_finite() {
        let mut m = FeatureMap::new(2, 2, 1);
        m.values[1] = f64::NAN;
        assert!(fft2(&m).is_err());
    }

    #[test]
    fn hadamard_identity_and_conj_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = fft2(&random_map(&mut rng, 4, 4, 2)).unwrap();
        let ones = Spectrum {
            height: 4,
            width: 4,
            channels: 2,
            values: vec![Complex64::new(1.0, 0.0); 32],
        };
        let prod = hadamard(&a, &ones).unwrap();
        assert_eq!(prod.values, a.values);
        assert_eq!(a.conj().conj().values, a.values);
    }

    #[test]
    fn hadamard_complex_arithmetic() {
        let mk = |v| Spectrum {
            height: 1,
            width: 1,
            channels: 1,
            values: vec![v],
        };
        let p = hadamard(&mk(Complex64::new(1.0, 2.0)), &mk(Complex64::new(3.0, -1.0))).unwrap();
        assert_eq!(p.values[0], Complex64::new(5.0, 5.0));
    }

    #[test]
    fn hadamard_rejects_dim_mismatch() {
        let a = Spectrum::new(2, 2, 1);
        let b = Spectrum::new(2, 3, 1);
        assert!(hadamard(&a, &b).is_err());
    }

    #[test]
    fn gaussian_label_peak_and_falloff() {
        let g = gaussian_label(16, 16, (8.0, 8.0), 2.0).unwrap();
        assert_relative_eq!(g.map.get(8, 8, 0), 1.0);
        // one sigma along the row axis
        assert_relative_eq!(g.map.get(10, 8, 0), (-0.5f64).exp(), max_relative = 1e-12);
        assert!(g.map.values.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn gaussian_label_reflection_symmetry() {
        let g = gaussian_label(16, 16, (8.0, 8.0), 3.0).unwrap();
        for r in 1..16 {
            for c in 1..16 {
                let a = g.map.get(r, c, 0);
                let b = g.map.get(16 - r, 16 - c, 0);
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_label_rejects_bad_sigma() {
        assert!(gaussian_label(8, 8, (4.0, 4.0), 0.0).is_err());
        assert!(gaussian_label(8, 8, (4.0, 4.0), -1.0).is_err());
    }

    #[test]
    fn hann_window_degenerate_and_endpoints() {
        let w1 = hann_window(1, 1);
        assert_eq!(w1.values, vec![1.0]);
        let w9 = hann_window(9, 9);
        assert_relative_eq!(w9.get(4, 4, 0), 1.0);
        for c in 0..9 {
            assert_eq!(w9.get(0, c, 0), 0.0);
            assert_eq!(w9.get(8, c, 0), 0.0);
        }
        assert!(w9.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn windowed_ones_equals_window() {
        let ones = FeatureMap::from_values(9, 9, 1, vec![1.0; 81]).unwrap();
        let w = hann_window(9, 9);
        let out = apply_window(&ones, &w).unwrap();
        assert_eq!(out.values, w.values);
    }

    #[test]
    fn correlation_impulse_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = random_map(&mut rng, 5, 5, 1);
        let mut h = FeatureMap::new(5, 5, 1);
        h.values[0] = 1.0;
        let r = circular_correlate_spatial(&h, &z).unwrap();
        assert_eq!(r.values, z.values);

        let mut h10 = FeatureMap::new(5, 5, 1);
        h10.set(1, 0, 0, 1.0);
        let r = circular_correlate_spatial(&h10, &z).unwrap();
        // impulse at (1,0) -> response is z shifted up by one row
        for m in 0..5 {
            for n in 0..5 {
                assert_relative_eq!(r.get(m, n, 0), z.get((m + 1) % 5, n, 0));
            }
        }
    }

    #[test]
    fn correlation_theorem_matches_spatial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(h, w, d) in &[(4, 4, 1), (4, 4, 2), (7, 5, 3), (16, 16, 4)] {
            let a = random_map(&mut rng, h, w, d);
            let b = random_map(&mut rng, h, w, d);
            let spatial = circular_correlate_spatial(&a, &b).unwrap();
            let fourier = circular_correlate_fourier(&a, &b).unwrap();
            for (x, y) in spatial.values.iter().zip(fourier.values.iter()) {
                assert_relative_eq!(x, y, max_relative = 1e-9, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn circular_shift_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_map(&mut rng, 6, 8, 2);
        let shifted = m.circular_shift(2, 3).circular_shift(-2, -3);
        assert_eq!(m.values, shifted.values);
    }
}
