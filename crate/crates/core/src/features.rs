//! Feature pipeline: patch extraction, HOG, resampling (max pool /
//! bilinear upsample), 1×1 compression with LRN, channel concatenation,
//! PCA compression, and the composed multi-level same-resolution feature
//! stack.
//!
//! Channel layout of the composed stack is deterministic: channels 0..32
//! come from the shallow branch, 32..96 from the deep branch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

pub const SHALLOW_OUT_CHANNELS: usize = 32;
pub const DEEP_OUT_CHANNELS: usize = 64;
pub const PCA_DIM: usize = 38;

/// Image patch with values clamped to [0,1]; 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone)]
pub struct ImagePatch {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl ImagePatch {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("empty patch".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "patch channels must be 1 or 3, got {channels}"
            )));
        }
        if values.len() != height * width * channels {
            return Err(Error::DimMismatch("patch value count".into()));
        }
        let values = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, d: usize) -> f64 {
        self.values[(r * self.width + c) * self.channels + d]
    }

    /// Luminance view; grayscale patches pass through.
    pub fn gray(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.values.clone();
        }
        (0..self.height * self.width)
            .map(|i| {
                0.299 * self.values[i * 3] + 0.587 * self.values[i * 3 + 1]
                    + 0.114 * self.values[i * 3 + 2]
            })
            .collect()
    }

    pub fn to_feature_map(&self) -> FeatureMap {
        FeatureMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.clone(),
        }
    }
}

/// Source pixel coordinate for bilinear resampling of an `out_len`-cell axis
/// onto a continuous crop of `region` pixels centered at `center`.
#[inline]
fn sample_coord(center: f64, region: f64, out_len: usize, i: usize) -> f64 {
    center + (i as f64 + 0.5 - out_len as f64 / 2.0) * region / out_len as f64
}

#[inline]
fn bilinear_at(frame: &ImagePatch, r: f64, c: f64, d: usize) -> f64 {
    let rc = r.clamp(0.0, (frame.height - 1) as f64);
    let cc = c.clamp(0.0, (frame.width - 1) as f64);
    let r0 = rc.floor() as usize;
    let c0 = cc.floor() as usize;
    let r1 = (r0 + 1).min(frame.height - 1);
    let c1 = (c0 + 1).min(frame.width - 1);
    let fr = rc - r0 as f64;
    let fc = cc - c0 as f64;
    let v00 = frame.get(r0, c0, d);
    let v01 = frame.get(r0, c1, d);
    let v10 = frame.get(r1, c0, d);
    let v11 = frame.get(r1, c1, d);
    v00 * (1.0 - fr) * (1.0 - fc) + v01 * (1.0 - fr) * fc + v10 * fr * (1.0 - fc) + v11 * fr * fc
}

/// Extract a padded search patch around `center` (row, col in pixels).
///
/// The crop region spans `target_size * (1 + padding_factor)` pixels per
/// axis and is resampled bilinearly to `out_size`×`out_size`. Pixels outside
/// the frame replicate the nearest edge pixel.
pub fn extract_patch(
    frame: &ImagePatch,
    center: (f64, f64),
    target_size: (f64, f64),
    padding_factor: f64,
    out_size: usize,
) -> Result<ImagePatch> {
    if padding_factor <= 0.0 {
        return Err(Error::InvalidArgument("padding_factor must be > 0".into()));
    }
    if target_size.0 <= 0.0 || target_size.1 <= 0.0 || out_size == 0 {
        return Err(Error::InvalidArgument("nonpositive patch size".into()));
    }
    let region_h = target_size.0 * (1.0 + padding_factor);
    let region_w = target_size.1 * (1.0 + padding_factor);
    let mut values = Vec::with_capacity(out_size * out_size * frame.channels);
    for i in 0..out_size {
        let r = sample_coord(center.0, region_h, out_size, i);
        for j in 0..out_size {
            let c = sample_coord(center.1, region_w, out_size, j);
            for d in 0..frame.channels {
                values.push(bilinear_at(frame, r, c, d));
            }
        }
    }
    ImagePatch::new(out_size, out_size, frame.channels, values)
}

/// Crop region side length in source pixels for a given target size and
/// padding factor (rounded to the nearest pixel).
pub fn crop_region_size(target: f64, padding_factor: f64) -> usize {
    (target * (1.0 + padding_factor)).round() as usize
}

pub const HOG_CHANNELS: usize = 32; // 18 sensitive + 9 insensitive + 4 texture + 1 zero

/// Felzenszwalb-style 31-channel HOG plus one all-zero occupancy channel.
///
/// Gradients use centered differences with edge replication; for RGB the
/// channel with the largest magnitude wins. Orientation and spatial votes
/// are soft-binned; block normalization uses the four neighboring 2×2 cell
/// energies with truncation at 0.2.
pub fn hog(patch: &ImagePatch, cell_size: usize) -> Result<FeatureMap> {
    if cell_size == 0 {
        return Err(Error::InvalidArgument("cell_size must be > 0".into()));
    }
    let cells_h = patch.height / cell_size;
    let cells_w = patch.width / cell_size;
    if cells_h == 0 || cells_w == 0 {
        return Err(Error::InvalidArgument("patch smaller than one cell".into()));
    }
    let h = cells_h * cell_size;
    let w = cells_w * cell_size;

    // orientation histograms: 18 signed bins per cell
    let mut hist = vec![0.0f64; cells_h * cells_w * 18];
    let clamp_r = |r: i64| r.clamp(0, patch.height as i64 - 1) as usize;
    let clamp_c = |c: i64| c.clamp(0, patch.width as i64 - 1) as usize;
    for r in 0..h {
        for c in 0..w {
            let mut best_mag2 = -1.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for d in 0..patch.channels {
                let dx = patch.get(r, clamp_c(c as i64 + 1), d)
                    - patch.get(r, clamp_c(c as i64 - 1), d);
                let dy = patch.get(clamp_r(r as i64 + 1), c, d)
                    - patch.get(clamp_r(r as i64 - 1), c, d);
                let m2 = dx * dx + dy * dy;
                if m2 > best_mag2 {
                    best_mag2 = m2;
                    gx = dx;
                    gy = dy;
                }
            }
            let mag = best_mag2.max(0.0).sqrt();
            if mag == 0.0 {
                continue;
            }
            // signed orientation in [0, 2π) → continuous bin in [0, 18)
            let angle = gy.atan2(gx).rem_euclid(2.0 * std::f64::consts::PI);
            let ob = angle / (2.0 * std::f64::consts::PI) * 18.0;
            let o0 = ob.floor() as usize % 18;
            let o1 = (o0 + 1) % 18;
            let of = ob - ob.floor();

            // soft spatial binning over cell centers
            let cr = (r as f64 + 0.5) / cell_size as f64 - 0.5;
            let cc = (c as f64 + 0.5) / cell_size as f64 - 0.5;
            let r0 = cr.floor();
            let c0 = cc.floor();
            let fr = cr - r0;
            let fc = cc - c0;
            for (ri, wr) in [(r0 as i64, 1.0 - fr), (r0 as i64 + 1, fr)] {
                if ri < 0 || ri >= cells_h as i64 {
                    continue;
                }
                for (ci, wc) in [(c0 as i64, 1.0 - fc), (c0 as i64 + 1, fc)] {
                    if ci < 0 || ci >= cells_w as i64 {
                        continue;
                    }
                    let base = (ri as usize * cells_w + ci as usize) * 18;
                    hist[base + o0] += mag * wr * wc * (1.0 - of);
                    hist[base + o1] += mag * wr * wc * of;
                }
            }
        }
    }

    // per-cell insensitive energy for block normalization
    let mut energy = vec![0.0f64; cells_h * cells_w];
    for i in 0..cells_h * cells_w {
        for o in 0..9 {
            let s = hist[i * 18 + o] + hist[i * 18 + o + 9];
            energy[i] += s * s;
        }
    }

    let eps = 1e-10;
    let cell_energy = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= cells_h as i64 || c >= cells_w as i64 {
            0.0
        } else {
            energy[r as usize * cells_w + c as usize]
        }
    };

    let mut out = FeatureMap::new(cells_h, cells_w, HOG_CHANNELS);
    for r in 0..cells_h as i64 {
        for c in 0..cells_w as i64 {
            // four 2x2 block energies around this cell
            let mut norms = [0.0f64; 4];
            for (k, (dr, dc)) in [(-1, -1), (-1, 1), (1, -1), (1, 1)].iter().enumerate() {
                let n = cell_energy(r, c)
                    + cell_energy(r + dr, c)
                    + cell_energy(r, c + dc)
                    + cell_energy(r + dr, c + dc);
                norms[k] = 1.0 / (n + eps).sqrt();
            }
            let base = (r as usize * cells_w + c as usize) * 18;
            let mut texture = [0.0f64; 4];
            // 18 contrast-sensitive channels
            for o in 0..18 {
                let v = hist[base + o];
                let mut acc = 0.0;
                for (k, nk) in norms.iter().enumerate() {
                    let t = (v * nk).min(0.2);
                    acc += t;
                    texture[k] += t;
                }
                out.set(r as usize, c as usize, o, 0.5 * acc);
            }
            // 9 contrast-insensitive channels
            for o in 0..9 {
                let v = hist[base + o] + hist[base + o + 9];
                let mut acc = 0.0;
                for nk in &norms {
                    acc += (v * nk).min(0.2);
                }
                out.set(r as usize, c as usize, 18 + o, 0.5 * acc);
            }
            // 4 texture-energy channels
            for (k, t) in texture.iter().enumerate() {
                out.set(r as usize, c as usize, 27 + k, 0.2357 * t);
            }
            // channel 31 stays zero
        }
    }
    Ok(out)
}

/// Channelwise max pooling; output dims are `floor((len - kernel)/stride)+1`.
pub fn max_pool(map: &FeatureMap, kernel: usize, stride: usize) -> Result<FeatureMap> {
    if kernel == 0 || stride == 0 {
        return Err(Error::InvalidArgument("kernel and stride must be > 0".into()));
    }
    if map.height < kernel || map.width < kernel {
        return Err(Error::InvalidArgument(format!(
            "input {}x{} smaller than kernel {kernel}",
            map.height, map.width
        )));
    }
    let oh = (map.height - kernel) / stride + 1;
    let ow = (map.width - kernel) / stride + 1;
    let mut out = FeatureMap::new(oh, ow, map.channels);
    for r in 0..oh {
        for c in 0..ow {
            for d in 0..map.channels {
                let mut m = f64::NEG_INFINITY;
                for kr in 0..kernel {
                    for kc in 0..kernel {
                        m = m.max(map.get(r * stride + kr, c * stride + kc, d));
                    }
                }
                out.set(r, c, d, m);
            }
        }
    }
    Ok(out)
}

/// Fixed bilinear upsampling by an integer factor (a deconvolution with
/// frozen bilinear weights). Output pixel `o` samples input coordinate
/// `(o + 0.5)/factor - 0.5`, clamped at the borders.
pub fn upsample(map: &FeatureMap, factor: usize) -> Result<FeatureMap> {
    if factor == 0 {
        return Err(Error::InvalidArgument("factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(map.clone());
    }
    let oh = map.height * factor;
    let ow = map.width * factor;
    let mut out = FeatureMap::new(oh, ow, map.channels);
    let src = |o: usize, f: usize, len: usize| -> (usize, usize, f64) {
        let x = ((o as f64 + 0.5) / f as f64 - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = x.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, x - i0 as f64)
    };
    for r in 0..oh {
        let (r0, r1, fr) = src(r, factor, map.height);
        for c in 0..ow {
            let (c0, c1, fc) = src(c, factor, map.width);
            for d in 0..map.channels {
                let v = map.get(r0, c0, d) * (1.0 - fr) * (1.0 - fc)
                    + map.get(r0, c1, d) * (1.0 - fr) * fc
                    + map.get(r1, c0, d) * fr * (1.0 - fc)
                    + map.get(r1, c1, d) * fr * fc;
                out.set(r, c, d, v);
            }
        }
    }
    Ok(out)
}

/// Per-pixel matrix-vector product plus bias. `weights` is row-major
/// `c_in × c_out`.
pub fn conv1x1(map: &FeatureMap, weights: &[f64], biases: &[f64]) -> Result<FeatureMap> {
    let c_in = map.channels;
    let c_out = biases.len();
    if weights.len() != c_in * c_out {
        return Err(Error::DimMismatch(format!(
            "conv1x1 weights: expected {}x{}, got {} values",
            c_in,
            c_out,
            weights.len()
        )));
    }
    let mut out = FeatureMap::new(map.height, map.width, c_out);
    for i in 0..map.height * map.width {
        for o in 0..c_out {
            let mut acc = biases[o];
            for k in 0..c_in {
                acc += map.values[i * c_in + k] * weights[k * c_out + o];
            }
            out.values[i * c_out + o] = acc;
        }
    }
    Ok(out)
}

/// Backward pass of [`conv1x1`]: returns (grad wrt input, grad wrt weights,
/// grad wrt biases) for an upstream gradient shaped like the output.
pub fn conv1x1_backward(
    input: &FeatureMap,
    weights: &[f64],
    grad_out: &FeatureMap,
) -> Result<(FeatureMap, Vec<f64>, Vec<f64>)> {
    let c_in = input.channels;
    let c_out = grad_out.channels;
    if grad_out.height != input.height || grad_out.width != input.width {
        return Err(Error::DimMismatch("conv1x1_backward spatial dims".into()));
    }
    if weights.len() != c_in * c_out {
        return Err(Error::DimMismatch("conv1x1_backward weights".into()));
    }
    let mut gin = FeatureMap::new(input.height, input.width, c_in);
    let mut gw = vec![0.0; c_in * c_out];
    let mut gb = vec![0.0; c_out];
    for i in 0..input.height * input.width {
        for o in 0..c_out
        {
            let g = grad_out.values[i * c_out + o];
            gb[o] += g;
            for k in 0..c_in {
                gw[k * c_out + o] += input.values[i * c_in + k] * g;
                gin.values[i * c_in + k] += weights[k * c_out + o] * g;
            }
        }
    }
    Ok((gin, gw, gb))
}

/// Local response normalization parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct LrnParams {
    pub n: usize,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LrnParams {
    fn default() -> Self {
        Self {
            n: 5,
            kappa: 2.0,
            alpha: 1e-4,
            beta: 0.75,
        }
    }
}

#[inline]
fn lrn_window(d: usize, n: usize, channels: usize) -> (usize, usize) {
    let half = n / 2;
    let lo = d.saturating_sub(half);
    let hi = (d + half).min(channels - 1);
    (lo, hi)
}

/// Cross-channel divisive normalization:
/// `y = v / (κ + (α/n)·Σ_{neighborhood} v²)^β`.
pub fn lrn(map: &FeatureMap, p: &LrnParams) -> Result<FeatureMap> {
    if p.n == 0 {
        return Err(Error::InvalidArgument("lrn neighborhood must be > 0".into()));
    }
    let ch = map.channels;
    let mut out = map.clone();
    for i in 0..map.height * map.width {
        let px = &map.values[i * ch..(i + 1) * ch];
        for d in 0..ch {
            let (lo, hi) = lrn_window(d, p.n, ch);
            let ssq: f64 = px[lo..=hi].iter().map(|v| v * v).sum();
            let denom = (p.kappa + p.alpha / p.n as f64 * ssq).powf(p.beta);
            out.values[i * ch + d] = px[d] / denom;
        }
    }
    Ok(out)
}

/// Backward pass of [`lrn`] wrt its input.
pub fn lrn_backward(input: &FeatureMap, p: &LrnParams, grad_out: &FeatureMap) -> Result<FeatureMap> {
    if !input.same_dims(grad_out) {
        return Err(Error::DimMismatch("lrn_backward".into()));
    }
    let ch = input.channels;
    let an = p.alpha / p.n as f64;
    let mut gin = FeatureMap::new(input.height, input.width, ch);
    for i in 0..input.height * input.width {
        let px = &input.values[i * ch..(i + 1) * ch];
        let go = &grad_out.values[i * ch..(i + 1) * ch];
        // d_d = κ + (α/n)·Σ_{N(d)} x², y_d = x_d d_d^{-β}
        let mut denom = vec![0.0f64; ch];
        for d in 0..ch {
            let (lo, hi) = lrn_window(d, p.n, ch);
            let ssq: f64 = px[lo..=hi].iter().map(|v| v * v).sum();
            denom[d] = p.kappa + an * ssq;
        }
        for j in 0..ch {
            let mut g = go[j] * denom[j].powf(-p.beta);
            // cross terms: every output d whose window contains j
            for d in 0..ch {
                let (lo, hi) = lrn_window(d, p.n, ch);
                if j >= lo && j <= hi {
                    g -= go[d] * 2.0 * p.beta * an * px[d] * px[j] * denom[d].powf(-p.beta - 1.0);
                }
            }
            gin.values[i * ch + j] = g;
        }
    }
    Ok(gin)
}

/// Stack channels, `a` first.
pub fn concat_channels(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::DimMismatch("concat_channels spatial dims".into()));
    }
    let ch = a.channels + b.channels;
    let mut out = FeatureMap::new(a.height, a.width, ch);
    for i in 0..a.height * a.width {
        out.values[i * ch..i * ch + a.channels]
            .copy_from_slice(&a.values[i * a.channels..(i + 1) * a.channels]);
        out.values[i * ch + a.channels..(i + 1) * ch]
            .copy_from_slice(&b.values[i * b.channels..(i + 1) * b.channels]);
    }
    Ok(out)
}

/// Inverse of [`concat_channels`]: split off the first `a_channels` channels.
pub fn split_channels(map: &FeatureMap, a_channels: usize) -> Result<(FeatureMap, FeatureMap)> {
    if a_channels == 0 || a_channels >= map.channels {
        return Err(Error::InvalidArgument("split point out of range".into()));
    }
    let bc = map.channels - a_channels;
    let mut a = FeatureMap::new(map.height, map.width, a_channels);
    let mut b = FeatureMap::new(map.height, map.width, bc);
    for i in 0..map.height * map.width {
        a.values[i * a_channels..(i + 1) * a_channels]
            .copy_from_slice(&map.values[i * map.channels..i * map.channels + a_channels]);
        b.values[i * bc..(i + 1) * bc]
            .copy_from_slice(&map.values[i * map.channels + a_channels..(i + 1) * map.channels]);
    }
    Ok((a, b))
}

/// Trainable 1×1 compression weights plus LRN parameters for the shallow
/// and deep branches.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionHead {
    pub shallow_in: usize,
    pub deep_in: usize,
    pub shallow_w: Vec<f64>, // shallow_in × 32
    pub shallow_b: Vec<f64>,
    pub deep_w: Vec<f64>, // deep_in × 64
    pub deep_b: Vec<f64>,
    pub lrn: LrnParams,
}

impl CompressionHead {
    pub fn new(shallow_in: usize, deep_in: usize, lrn: LrnParams) -> Self {
        Self {
            shallow_in,
            deep_in,
            shallow_w: vec![0.0; shallow_in * SHALLOW_OUT_CHANNELS],
            shallow_b: vec![0.0; SHALLOW_OUT_CHANNELS],
            deep_w: vec![0.0; deep_in * DEEP_OUT_CHANNELS],
            deep_b: vec![0.0; DEEP_OUT_CHANNELS],
            lrn,
        }
    }

    /// Deterministic small random initialization.
    pub fn random(shallow_in: usize, deep_in: usize, lrn: LrnParams, seed: u64) -> Self {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut head = Self::new(shallow_in, deep_in, lrn);
        let ss = (2.0 / shallow_in as f64).sqrt();
        let ds = (2.0 / deep_in as f64).sqrt();
        for w in head.shallow_w.iter_mut() {
            *w = rng.gen_range(-ss..ss);
        }
        for w in head.deep_w.iter_mut() {
            *w = rng.gen_range(-ds..ds);
        }
        head
    }

    pub fn param_count(&self) -> usize {
        self.shallow_w.len() + self.shallow_b.len() + self.deep_w.len() + self.deep_b.len()
    }
}

/// Checkpoint I/O for a compression head: two MSCT tensors (weights, biases)
/// plus a JSON sidecar with LRN parameters and branch dims.
pub mod checkpoint {
    use std::path::Path;

    use serde::{Deserialize, Serialize};

    use super::{CompressionHead, LrnParams, DEEP_OUT_CHANNELS, SHALLOW_OUT_CHANNELS};
    use crate::error::{Error, Result};
    use crate::tensor::io::{read_tensor, write_tensor};
    use crate::tensor::FeatureMap;

    #[derive(Serialize, Deserialize)]
    struct Sidecar {
        shallow_in: usize,
        deep_in: usize,
        lrn: LrnParams,
    }

    /// Writes `<prefix>.weights.msct`, `<prefix>.biases.msct`, `<prefix>.json`.
    pub fn save_head(prefix: &Path, head: &CompressionHead) -> Result<()> {
        let mut w = head.shallow_w.clone();
        w.extend_from_slice(&head.deep_w);
        let mut b = head.shallow_b.clone();
        b.extend_from_slice(&head.deep_b);
        let wlen = w.len();
        let blen = b.len();
        write_tensor(
            &prefix.with_extension("weights.msct"),
            &FeatureMap::from_values(1, wlen, 1, w)?,
        )?;
        write_tensor(
            &prefix.with_extension("biases.msct"),
            &FeatureMap::from_values(1, blen, 1, b)?,
        )?;
        let sidecar = Sidecar {
            shallow_in: head.shallow_in,
            deep_in: head.deep_in,
            lrn: head.lrn,
        };
        std::fs::write(
            prefix.with_extension("json"),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        Ok(())
    }

    pub fn load_head(prefix: &Path) -> Result<CompressionHead> {
        let sidecar: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json"))?)?;
        let w = read_tensor(&prefix.with_extension("weights.msct"))?;
        let b = read_tensor(&prefix.with_extension("biases.msct"))?;
        let sw_len = sidecar.shallow_in * SHALLOW_OUT_CHANNELS;
        let dw_len = sidecar.deep_in * DEEP_OUT_CHANNELS;
        if w.values.len() != sw_len + dw_len {
            return Err(Error::BadTensorFile("weight tensor length mismatch".into()));
        }
        if b.values.len() != SHALLOW_OUT_CHANNELS + DEEP_OUT_CHANNELS {
            return Err(Error::BadTensorFile("bias tensor length mismatch".into()));
        }
        Ok(CompressionHead {
            shallow_in: sidecar.shallow_in,
            deep_in: sidecar.deep_in,
            shallow_w: w.values[..sw_len].to_vec(),
            shallow_b: b.values[..SHALLOW_OUT_CHANNELS].to_vec(),
            deep_w: w.values[sw_len..].to_vec(),
            deep_b: b.values[SHALLOW_OUT_CHANNELS..].to_vec(),
            lrn: sidecar.lrn,
        })
    }
}

/// Compose the multi-level stack: max-pool the shallow map, upsample the
/// deep map, compress both with 1×1 convolutions, LRN-normalize, and
/// concatenate (shallow block first).
pub fn msc_features(
    shallow: &FeatureMap,
    deep: &FeatureMap,
    head: &CompressionHead,
) -> Result<FeatureMap> {
    let s = max_pool(shallow, 7, 2)?;
    let d = upsample(deep, 4)?;
    if s.height != d.height || s.width != d.width {
        return Err(Error::DimMismatch(format!(
            "post-resampling dims disagree: shallow {}x{} vs deep {}x{}",
            s.height, s.width, d.height, d.width
        )));
    }
    let s = lrn(&conv1x1(&s, &head.shallow_w, &head.shallow_b)?, &head.lrn)?;
    let d = lrn(&conv1x1(&d, &head.deep_w, &head.deep_b)?, &head.lrn)?;
    concat_channels(&s, &d)
}

/// Mean vector plus orthonormal basis projecting channel vectors to a
/// lower dimension.
#[derive(Debug, Clone)]
pub struct PcaProjector {
    pub mean: Vec<f64>,
    /// Row-major `in_dim × out_dim`; columns are principal directions.
    pub basis: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Fit the top-`out_dim` principal directions of the given sample vectors.
pub fn pca_fit(samples: &[Vec<f64>], out_dim: usize) -> Result<PcaProjector> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidArgument("pca_fit: no samples".into()));
    }
    let d = samples[0].len();
    if out_dim > d {
        return Err(Error::InvalidArgument(format!(
            "pca output dim {out_dim} exceeds input dim {d}"
        )));
    }
    if n < out_dim {
        return Err(Error::InvalidArgument(format!(
            "pca_fit needs at least {out_dim} samples, got {n}"
        )));
    }
    let mut mean = vec![0.0; d];
    for s in samples {
        if s.len() != d {
            return Err(Error::DimMismatch("pca sample length".into()));
        }
        for (m, v) in mean.iter_mut().zip(s.iter()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
    for s in samples {
        for i in 0..d {
            let ci = s[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += ci * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[(i, j)] = cov[(j, i)];
        }
    }
    cov /= n as f64;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut basis = vec![0.0; d * out_dim];
    for (k, &src) in order.iter().take(out_dim).enumerate() {
        let col = eig.eigenvectors.column(src);
        // fix sign for determinism: largest-magnitude entry positive
        let mut pivot = 0;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis[i * out_dim + k] = sign * col[i];
        }
    }
    Ok(PcaProjector {
        mean,
        basis,
        in_dim: d,
        out_dim,
    })
}

/// Project every spatial position's channel vector through the PCA basis.
pub fn pca_project(p: &PcaProjector, map: &FeatureMap) -> Result<FeatureMap> {
    if map.channels != p.in_dim {
        return Err(Error::DimMismatch(format!(
            "pca_project: map has {} channels, projector expects {}",
            map.channels, p.in_dim
        )));
    }
    let mut out = FeatureMap::new(map.height, map.width, p.out_dim);
    for i in 0..map.height * map.width {
        let px = &map.values[i * p.in_dim..(i + 1) * p.in_dim];
        for k in 0..p.out_dim {
            let mut acc = 0.0;
            for j in 0..p.in_dim {
                acc += (px[j] - p.mean[j]) * p.basis[j * p.out_dim + k];
            }
            out.values[i * p.out_dim + k] = acc;
        }
    }
    Ok(out)
}

/// Back-project PCA coefficients to the original channel space.
pub fn pca_reconstruct(p: &PcaProjector, map: &FeatureMap) -> Result<FeatureMap> {
    if map.channels != p.out_dim {
        return Err(Error::DimMismatch("pca_reconstruct channels".into()));
    }
    let mut out = FeatureMap::new(map.height, map.width, p.in_dim);
    for i in 0..map.height * map.width {
        let px = &map.values[i * p.out_dim..(i + 1) * p.out_dim];
        for j in 0..p.in_dim {
            let mut acc = p.mean[j];
            for k in 0..p.out_dim {
                acc += px[k] * p.basis[j * p.out_dim + k];
            }
            out.values[i * p.in_dim + j] = acc;
        }
    }
    Ok(out)
}

/// Desk-scale stand-in for the CNN backbone: derive shallow and deep maps
/// from an image patch by resizing and stacking intensity and gradient
/// channels. Keeps the resampling geometry of the real pipeline without the
/// network itself.
pub fn backbone_maps(
    patch: &ImagePatch,
    shallow_size: usize,
    deep_size: usize,
) -> Result<(FeatureMap, FeatureMap)> {
    let make = |size: usize| -> Result<FeatureMap> {
        let resized = resize_patch(patch, size, size)?;
        let gray = resized.gray();
        let mut out = FeatureMap::new(size, size, 4);
        let at = |r: i64, c: i64| {
            gray[(r.clamp(0, size as i64 - 1) as usize) * size
                + c.clamp(0, size as i64 - 1) as usize]
        };
        for r in 0..size as i64 {
            for c in 0..size as i64 {
                let v = at(r, c);
                let gx = at(r, c + 1) - at(r, c - 1);
                let gy = at(r + 1, c) - at(r - 1, c);
                let i = (r as usize * size + c as usize) * 4;
                out.values[i] = v - 0.5;
                out.values[i + 1] = gx;
                out.values[i + 2] = gy;
                out.values[i + 3] = (gx * gx + gy * gy).sqrt();
            }
        }
        Ok(out)
    };
    Ok((make(shallow_size)?, make(deep_size)?))
}

/// Bilinear resize of a whole patch.
pub fn resize_patch(patch: &ImagePatch, out_h: usize, out_w: usize) -> Result<ImagePatch> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument("resize to empty".into()));
    }
    let mut values = Vec::with_capacity(out_h * out_w * patch.channels);
    for i in 0..out_h {
        let r = ((i as f64 + 0.5) * patch.height as f64 / out_h as f64 - 0.5)
            .clamp(0.0, (patch.height - 1) as f64);
        for j in 0..out_w {
            let c = ((j as f64 + 0.5) * patch.width as f64 / out_w as f64 - 0.5)
                .clamp(0.0, (patch.width - 1) as f64);
            for d in 0..patch.channels {
                values.push(bilinear_at(patch, r, c, d));
            }
        }
    }
    ImagePatch::new(out_h, out_w, patch.channels, values)
}
