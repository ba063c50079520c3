//! Differentiable correlation-filter loss layer, its Fourier-domain
//! backward pass, finite-difference verification helpers, and a small SGD
//! trainer that fits the compression head on triplet samples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    concat_channels, conv1x1, conv1x1_backward, lrn, lrn_backward, max_pool, split_channels,
    upsample, CompressionHead, DEEP_OUT_CHANNELS, SHALLOW_OUT_CHANNELS,
};
use crate::tensor::{fft2, gaussian_label, ifft2_real_checked, FeatureMap, GaussianLabel, Spectrum};

/// Training sample: centered target features `x`, shifted test features `z`,
/// and the Gaussian label `g` centered at the shifted target position.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub x: FeatureMap,
    pub z: FeatureMap,
    pub g: GaussianLabel,
}

/// Cached spectra from one forward pass of the CF layer.
#[derive(Debug, Clone)]
pub struct CfLayerTape {
    pub x_spec: Spectrum,
    pub z_spec: Spectrum,
    pub g_spec: Spectrum,
    /// Shared real denominator `Σ_k |φ̂x^k|² + λ` per frequency bin.
    pub denom: Vec<f64>,
    /// `Σ_k conj(φ̂x^k) ⊙ φ̂z^k` per frequency bin.
    pub s: Vec<Complex64>,
    pub response: FeatureMap,
    pub lambda: f64,
}

/// Forward pass of the correlation-filter layer.
///
/// The per-channel filter is the closed-form ridge solution over the
/// circulant sample set of `φx`, trained against `g` recentered at the map
/// center (the target is centered in `φx`). The response is the circular
/// correlation of that filter with `φz`, and the loss is `‖r − g‖²` summed
/// over cells, with `g` at its stated (possibly offset) center. This is the
/// reading under which the loss is invariant to joint circular shifts of
/// `φz` and `g`.
pub fn cf_forward(
    phi_x: &FeatureMap,
    phi_z: &FeatureMap,
    g: &GaussianLabel,
    lambda: f64,
) -> Result<(f64, FeatureMap, CfLayerTape)> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    if !phi_x.same_dims(phi_z) {
        return Err(Error::DimMismatch("cf_forward: phi_x vs phi_z".into()));
    }
    if g.map.height != phi_x.height || g.map.width != phi_x.width {
        return Err(Error::DimMismatch("cf_forward: label dims".into()));
    }
    let x_spec = fft2(phi_x)?;
    let z_spec = fft2(phi_z)?;
    // filter training label: same bandwidth, centered
    let g_center = gaussian_label(
        phi_x.height,
        phi_x.width,
        (phi_x.height as f64 / 2.0, phi_x.width as f64 / 2.0),
        g.sigma,
    )?;
    let g_spec = fft2(&g_center.map)?;
    let bins = phi_x.height * phi_x.width;
    let ch = phi_x.channels;

    let mut denom = vec![lambda; bins];
    let mut s = vec![Complex64::new(0.0, 0.0); bins];
    for i in 0..bins {
        for d in 0..ch {
            let xv = x_spec.values[i * ch + d];
            denom[i] += xv.norm_sqr();
            s[i] += xv.conj() * z_spec.values[i * ch + d];
        }
    }
    let mut r_spec = Spectrum::new(phi_x.height, phi_x.width, 1);
    for i in 0..bins {
        r_spec.values[i] = g_spec.values[i] * s[i] / denom[i];
    }
    let (response, _residue) = ifft2_real_checked(&r_spec)?;
    let loss: f64 = response
        .values
        .iter()
        .zip(g.map.values.iter())
        .map(|(r, gv)| (r - gv) * (r - gv))
        .sum();
    let tape = CfLayerTape {
        x_spec,
        z_spec,
        g_spec,
        denom,
        s,
        response: response.clone(),
        lambda,
    };
    Ok((loss, response, tape))
}

/// Largest imaginary residue of the response before it is cast to a real
/// map; exposed for invariant checks.
pub fn cf_response_imag_residue(tape: &CfLayerTape) -> Result<f64> {
    let bins = tape.denom.len();
    let mut r_spec = Spectrum::new(tape.response.height, tape.response.width, 1);
    for i in 0..bins {
        r_spec.values[i] = tape.g_spec.values[i] * tape.s[i] / tape.denom[i];
    }
    let (_, residue) = ifft2_real_checked(&r_spec)?;
    Ok(residue)
}

/// Backward pass of the CF layer: gradients of a scalar loss wrt `φx` and
/// `φz`, given the upstream gradient wrt the response map.
///
/// Both gradients are assembled per frequency bin. The `φz` path goes
/// through the numerator only; the `φx` path differentiates the shared
/// denominator with the quotient rule and pairs conjugate bins so that the
/// spatial outputs come out real.
pub fn cf_backward(tape: &CfLayerTape, upstream: &FeatureMap) -> Result<(FeatureMap, FeatureMap)> {
    let (h, w, ch) = (tape.x_spec.height, tape.x_spec.width, tape.x_spec.channels);
    if upstream.height != h || upstream.width != w || upstream.channels != 1 {
        return Err(Error::DimMismatch("cf_backward: upstream dims".into()));
    }
    let u_spec = fft2(upstream)?;
    let bins = h * w;
    let mut dx_spec = Spectrum::new(h, w, ch);
    let mut dz_spec = Spectrum::new(h, w, ch);
    for i in 0..bins {
        let u = u_spec.values[i];
        let g = tape.g_spec.values[i];
        let den = tape.denom[i];
        let s = tape.s[i];
        // common per-bin factors
        let ug_den = u * g.conj() / den; // Û ⊙ ĝ* / den
        let cu_g_den2 = u.conj() * g / (den * den); // conj(Û) ⊙ ĝ / den²
        let u_cg_cs_den2 = u * g.conj() * s.conj() / (den * den); // Û ⊙ ĝ* ⊙ S* / den²
        for d in 0..ch {
            let xv = tape.x_spec.values[i * ch + d];
            let zv = tape.z_spec.values[i * ch + d];
            dz_spec.values[i * ch + d] = ug_den * xv;
            dx_spec.values[i * ch + d] =
                cu_g_den2 * (zv * den - s * xv) - u_cg_cs_den2 * xv;
        }
    }
    let (dx, _) = ifft2_real_checked(&dx_spec)?;
    let (dz, _) = ifft2_real_checked(&dz_spec)?;
    Ok((dx, dz))
}

/// Central finite-difference check of an analytic gradient.
///
/// Relative error uses `max(|analytic|, |numeric|, 1e-8)` as denominator.
pub fn grad_check<F>(mut f: F, inputs: &mut [f64], analytic: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(inputs.len(), analytic.len());
    let mut max_rel = 0.0f64;
    for i in 0..inputs.len() {
        let orig = inputs[i];
        inputs[i] = orig + eps;
        let fp = f(inputs);
        inputs[i] = orig - eps;
        let fm = f(inputs);
        inputs[i] = orig;
        let numeric = (fp - fm) / (2.0 * eps);
        let rel = (numeric - analytic[i]).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

/// SGD hyperparameters and per-parameter velocity buffers.
#[derive(Debug, Clone)]
pub struct SgdState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub velocity: Vec<f64>,
}

impl SgdState {
    pub fn new(learning_rate: f64, momentum: f64, weight_decay: f64, param_count: usize) -> Self {
        Self {
            learning_rate,
            momentum,
            weight_decay,
            velocity: vec![0.0; param_count],
        }
    }
}

/// One SGD-with-momentum step:
/// `v ← m·v − lr·(grad + wd·param); param ← param + v`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], state: &mut SgdState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocity.len() {
        return Err(Error::DimMismatch("sgd_step shapes".into()));
    }
    for i in 0..params.len() {
        let v = state.momentum * state.velocity[i]
            - state.learning_rate * (grads[i] + state.weight_decay * params[i]);
        state.velocity[i] = v;
        params[i] += v;
    }
    Ok(())
}

/// Training configuration (CLI JSON surface).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
}

fn default_lambda() -> f64 {
    1e-4
}
fn default_lr() -> f64 {
    1e-5
}
fn default_momentum() -> f64 {
    0.9
}
fn default_weight_decay() -> f64 {
    5e-4
}
fn default_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    16
}

impl Default for TrainConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

/// A triplet with the frozen resampling layers already applied: the trainer
/// only updates the 1×1 compression heads, so pooled/upsampled maps can be
/// cached per sample.
#[derive(Debug, Clone)]
pub struct PreparedTriplet {
    pub x_shallow: FeatureMap,
    pub x_deep: FeatureMap,
    pub z_shallow: FeatureMap,
    pub z_deep: FeatureMap,
    pub g: GaussianLabel,
}

impl PreparedTriplet {
    /// Apply the frozen max-pool/upsample layers to raw branch maps.
    pub fn from_branch_maps(
        x_shallow: &FeatureMap,
        x_deep: &FeatureMap,
        z_shallow: &FeatureMap,
        z_deep: &FeatureMap,
        g: GaussianLabel,
    ) -> Result<Self> {
        Ok(Self {
            x_shallow: max_pool(x_shallow, 7, 2)?,
            x_deep: upsample(x_deep, 4)?,
            z_shallow: max_pool(z_shallow, 7, 2)?,
            z_deep: upsample(z_deep, 4)?,
            g,
        })
    }
}

/// Run the compression stage (1×1 conv + LRN per branch, then concat) on
/// already-resampled branch maps.
pub fn compress_branches(
    shallow: &FeatureMap,
    deep: &FeatureMap,
    head: &CompressionHead,
) -> Result<FeatureMap> {
    let s = lrn(&conv1x1(shallow, &head.shallow_w, &head.shallow_b)?, &head.lrn)?;
    let d = lrn(&conv1x1(deep, &head.deep_w, &head.deep_b)?, &head.lrn)?;
    concat_channels(&s, &d)
}

/// Gradient accumulator over the head parameters, flattened in the order
/// (shallow_w, shallow_b, deep_w, deep_b).
#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub values: Vec<f64>,
}

impl HeadGrads {
    pub fn zeros(head: &CompressionHead) -> Self {
        Self {
            values: vec![0.0; head.param_count()],
        }
    }
}

pub fn head_params(head: &CompressionHead) -> Vec<f64> {
    let mut p = head.shallow_w.clone();
    p.extend_from_slice(&head.shallow_b);
    p.extend_from_slice(&head.deep_w);
    p.extend_from_slice(&head.deep_b);
    p
}

pub fn set_head_params(head: &mut CompressionHead, params: &[f64]) {
    let sw = head.shallow_w.len();
    let sb = head.shallow_b.len();
    let dw = head.deep_w.len();
    head.shallow_w.copy_from_slice(&params[..sw]);
    head.shallow_b.copy_from_slice(&params[sw..sw + sb]);
    head.deep_w.copy_from_slice(&params[sw + sb..sw + sb + dw]);
    head.deep_b.copy_from_slice(&params[sw + sb + dw..]);
}

/// Loss and head-parameter gradients for one prepared triplet.
pub fn triplet_loss_and_grads(
    t: &PreparedTriplet,
    head: &CompressionHead,
    lambda: f64,
    grads: &mut HeadGrads,
) -> Result<f64> {
    // forward through the compression stage for both branches of x and z,
    // keeping pre-LRN activations for the backward pass
    let xs_conv = conv1x1(&t.x_shallow, &head.shallow_w, &head.shallow_b)?;
    let xd_conv = conv1x1(&t.x_deep, &head.deep_w, &head.deep_b)?;
    let zs_conv = conv1x1(&t.z_shallow, &head.shallow_w, &head.shallow_b)?;
    let zd_conv = conv1x1(&t.z_deep, &head.deep_w, &head.deep_b)?;
    let phi_x = concat_channels(&lrn(&xs_conv, &head.lrn)?, &lrn(&xd_conv, &head.lrn)?)?;
    let phi_z = concat_channels(&lrn(&zs_conv, &head.lrn)?, &lrn(&zd_conv, &head.lrn)?)?;

    let (loss, response, tape) = cf_forward(&phi_x, &phi_z, &t.g, lambda)?;
    let mut upstream = FeatureMap::new(response.height, response.width, 1);
    for (u, (r, g)) in upstream
        .values
        .iter_mut()
        .zip(response.values.iter().zip(t.g.map.values.iter()))
    {
        *u = 2.0 * (r - g);
    }
    let (dphi_x, dphi_z) = cf_backward(&tape, &upstream)?;

    let sw = head.shallow_w.len();
    let sb = head.shallow_b.len();
    let dw = head.deep_w.len();
    let mut accumulate = |dphi: &FeatureMap,
                          s_conv: &FeatureMap,
                          d_conv: &FeatureMap,
                          s_in: &FeatureMap,
                          d_in: &FeatureMap|
     -> Result<()> {
        let (ds, dd) = split_channels(dphi, SHALLOW_OUT_CHANNELS)?;
        debug_assert_eq!(dd.channels, DEEP_OUT_CHANNELS);
        let ds = lrn_backward(s_conv, &head.lrn, &ds)?;
        let dd = lrn_backward(d_conv, &head.lrn, &dd)?;
        let (_, gw_s, gb_s) = conv1x1_backward(s_in, &head.shallow_w, &ds)?;
        let (_, gw_d, gb_d) = conv1x1_backward(d_in, &head.deep_w, &dd)?;
        for (a, b) in grads.values[..sw].iter_mut().zip(gw_s.iter()) {
            *a += b;
        }
        for (a, b) in grads.values[sw..sw + sb].iter_mut().zip(gb_s.iter()) {
            *a += b;
        }
        for (a, b) in grads.values[sw + sb..sw + sb + dw].iter_mut().zip(gw_d.iter()) {
            *a += b;
        }
        for (a, b) in grads.values[sw + sb + dw..].iter_mut().zip(gb_d.iter()) {
            *a += b;
        }
        Ok(())
    };
    accumulate(&dphi_x, &xs_conv, &xd_conv, &t.x_shallow, &t.x_deep)?;
    accumulate(&dphi_z, &zs_conv, &zd_conv, &t.z_shallow, &t.z_deep)?;
    Ok(loss)
}

/// Minibatch SGD over the compression head. Returns the trained head and
/// the mean loss per epoch.
pub fn train_head(
    mut head: CompressionHead,
    triplets: &[PreparedTriplet],
    cfg: &TrainConfig,
) -> Result<(CompressionHead, Vec<f64>)> {
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("train_head: no triplets".into()));
    }
    let mut params = head_params(&head);
    let mut state = SgdState::new(cfg.lr, cfg.momentum, cfg.weight_decay, params.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    for _epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        for batch in triplets.chunks(cfg.batch.max(1)) {
            let mut grads = HeadGrads::zeros(&head);
            let mut batch_loss = 0.0;
            for t in batch {
                batch_loss += triplet_loss_and_grads(t, &head, cfg.lambda, &mut grads)?;
            }
            epoch_loss += batch_loss;
            sgd_step(&mut params, &grads.values, &mut state)?;
            set_head_params(&mut head, &params);
        }
        history.push(epoch_loss / triplets.len() as f64);
    }
    Ok((head, history))
}

/// Generate triplets from a synthetic grayscale frame sequence.
///
/// `x` is extracted with the target centered; `z` comes from a nearby frame
/// with a translation offset drawn uniformly within ±¼ of the patch size,
/// and `g` is centered at the offset target position.
pub fn make_triplets(
    frames: &[crate::features::ImagePatch],
    boxes: &[(f64, f64, f64, f64)], // (x, y, w, h)
    count: usize,
    geometry: &TripletGeometry,
    seed: u64,
) -> Result<Vec<PreparedTriplet>> {
    use rand::prelude::*;
    if frames.len() < 2 || frames.len() != boxes.len() {
        return Err(Error::InvalidArgument(
            "make_triplets needs >= 2 annotated frames".into(),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    // feature-grid size produced by the frozen resampling layers
    let feat = (geometry.shallow_size - 7) / 2 + 1;
    let sigma = crate::tensor::default_sigma(feat as f64, feat as f64).max(0.5);
    for _ in 0..count {
        let i = rng.gen_range(0..frames.len());
        let j_lo = i.saturating_sub(2);
        let j_hi = (i + 2).min(frames.len() - 1);
        let j = rng.gen_range(j_lo..=j_hi);
        let (bx, by, bw, bh) = boxes[i];
        let cx = (bx + bw / 2.0, by + bh / 2.0);
        let (bx2, by2, bw2, bh2) = boxes[j];
        let region = bh2 * (1.0 + geometry.padding);
        let max_off = region / 4.0;
        let off_r = rng.gen_range(-max_off..max_off);
        let off_c = rng.gen_range(-max_off..max_off);
        let cz = (by2 + bh2 / 2.0 + off_r, bx2 + bw2 / 2.0 + off_c);

        let x_patch = crate::features::extract_patch(
            &frames[i],
            (cx.1, cx.0).into(),
            (bh, bw),
            geometry.padding,
            geometry.patch_size,
        )?;
        let z_patch = crate::features::extract_patch(
            &frames[j],
            cz,
            (bh2, bw2),
            geometry.padding,
            geometry.patch_size,
        )?;
        let (xs, xd) =
            crate::features::backbone_maps(&x_patch, geometry.shallow_size, geometry.deep_size)?;
        let (zs, zd) =
            crate::features::backbone_maps(&z_patch, geometry.shallow_size, geometry.deep_size)?;
        // offset in feature cells: the target sits at -offset relative to
        // the patch center, scaled by region-to-grid ratio
        let cells_per_px = feat as f64 / region;
        let gc = (
            (feat as f64 / 2.0 - off_r * cells_per_px).rem_euclid(feat as f64),
            (feat as f64 / 2.0 - off_c * cells_per_px).rem_euclid(feat as f64),
        );
        let g = gaussian_label(feat, feat, gc, sigma)?;
        out.push(PreparedTriplet::from_branch_maps(&xs, &xd, &zs, &zd, g)?);
    }
    Ok(out)
}

/// Desk-scale geometry for triplet generation.
#[derive(Debug, Clone)]
pub struct TripletGeometry {
    pub padding: f64,
    pub patch_size: usize,
    pub shallow_size: usize,
    pub deep_size: usize,
}

impl Default for TripletGeometry {
    fn default() -> Self {
        Self {
            padding: 1.65,
            patch_size: 48,
            shallow_size: 21,
            deep_size: 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::LrnParams;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, h: usize, w: usize, d: usize) -> FeatureMap {
        let values = (0..h * w * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureMap::from_values(h, w, d, values).unwrap()
    }

    #[test]
    fn zero_features_give_label_norm_loss() {
        let g = gaussian_label(6, 6, (3.0, 3.0), 1.0).unwrap();
        let x = FeatureMap::new(6, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let z = random_map(&mut rng, 6, 6, 2);
        let (loss, r, _) = cf_forward(&x, &z, &g, 1e-4).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        let g_norm: f64 = g.map.values.iter().map(|v| v * v).sum();
        assert_relative_eq!(loss, g_norm, max_relative = 1e-12);
    }

    #[test]
    fn perfect_response_gives_zero_loss() {
        // pick phi_z so that r = g exactly: solve in frequency domain
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = gaussian_label(8, 8, (4.0, 4.0), 1.5).unwrap();
        let x = random_map(&mut rng, 8, 8, 1);
        let x_spec = fft2(&x).unwrap();
        let g_spec = fft2(&g.map).unwrap();
        let lambda = 1e-4;
        // r̂ = ĝ conj(x̂) ẑ / (|x̂|²+λ) = ĝ  ⇔  ẑ = (|x̂|²+λ)/conj(x̂)
        let mut z_spec = Spectrum::new(8, 8, 1);
        for i in 0..64 {
            let xv = x_spec.values[i];
            z_spec.values[i] = Complex64::new(xv.norm_sqr() + lambda, 0.0) / xv.conj();
        }
        let z = crate::tensor::ifft2(&z_spec).unwrap();
        let (loss, r, _) = cf_forward(&x, &z, &g, lambda).unwrap();
        for (a, b) in r.values.iter().zip(g.map.values.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-8);
        }
        assert!(loss < 1e-14);
        let _ = g_spec;
    }

    #[test]
    fn cf_forward_rejects_bad_args() {
        let g = gaussian_label(4, 4, (2.0, 2.0), 1.0).unwrap();
        let x = FeatureMap::new(4, 4, 1);
        let z5 = FeatureMap::new(5, 5, 1);
        assert!(cf_forward(&x, &x, &g, 0.0).is_err());
        assert!(cf_forward(&x, &z5, &g, 1e-4).is_err());
    }

    #[test]
    fn response_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = gaussian_label(7, 5, (3.0, 2.0), 1.0).unwrap();
        let x = random_map(&mut rng, 7, 5, 3);
        let z = random_map(&mut rng, 7, 5, 3);
        let (_, _, tape) = cf_forward(&x, &z, &g, 1e-4).unwrap();
        assert!(cf_response_imag_residue(&tape).unwrap() < 1e-9);
    }

    #[test]
    fn loss_invariant_under_joint_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let g = gaussian_label(8, 8, (4.0, 4.0), 1.2).unwrap();
        let x = random_map(&mut rng, 8, 8, 2);
        let z = random_map(&mut rng, 8, 8, 2);
        let (loss, _, _) = cf_forward(&x, &z, &g, 1e-4).unwrap();
        let z_shift = z.circular_shift(2, 3);
        let g_shift = GaussianLabel {
            map: g.map.circular_shift(2, 3),
            center: (6.0, 7.0),
            sigma: g.sigma,
        };
        let (loss2, _, _) = cf_forward(&x, &z_shift, &g_shift, 1e-4).unwrap();
        assert_relative_eq!(loss, loss2, max_relative = 1e-9);
    }

    #[test]
    fn backward_zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let g = gaussian_label(5, 5, (2.0, 2.0), 1.0).unwrap();
        let x = random_map(&mut rng, 5, 5, 2);
        let z = random_map(&mut rng, 5, 5, 2);
        let (_, _, tape) = cf_forward(&x, &z, &g, 1e-4).unwrap();
        let zero = FeatureMap::new(5, 5, 1);
        let (dx, dz) = cf_backward(&tape, &zero).unwrap();
        assert!(dx.values.iter().all(|&v| v.abs() < 1e-15));
        assert!(dz.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn backward_scales_linearly_with_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let g = gaussian_label(5, 5, (2.0, 2.0), 1.0).unwrap();
        let x = random_map(&mut rng, 5, 5, 2);
        let z = random_map(&mut rng, 5, 5, 2);
        let (_, _, tape) = cf_forward(&x, &z, &g, 1e-4).unwrap();
        let u = random_map(&mut rng, 5, 5, 1);
        let (dx1, dz1) = cf_backward(&tape, &u).unwrap();
        let (dx3, dz3) = cf_backward(&tape, &u.scale(3.0)).unwrap();
        for (a, b) in dx1.values.iter().zip(dx3.values.iter()) {
            assert_relative_eq!(3.0 * a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
        for (a, b) in dz1.values.iter().zip(dz3.values.iter()) {
            assert_relative_eq!(3.0 * a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    fn loss_of(x: &FeatureMap, z: &FeatureMap, g: &GaussianLabel, lambda: f64) -> f64 {
        cf_forward(x, z, g, lambda).unwrap().0
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for &(h, w, ch) in &[(4, 4, 1), (5, 5, 2), (6, 5, 3)] {
            let g = gaussian_label(h, w, (h as f64 / 2.0, w as f64 / 2.0), 1.0).unwrap();
            let x = random_map(&mut rng, h, w, ch);
            let z = random_map(&mut rng, h, w, ch);
            let lambda = 1e-2;
            let (_, response, tape) = cf_forward(&x, &z, &g, lambda).unwrap();
            let mut upstream = FeatureMap::new(h, w, 1);
            for (u, (r, gv)) in upstream
                .values
                .iter_mut()
                .zip(response.values.iter().zip(g.map.values.iter()))
            {
                *u = 2.0 * (r - gv);
            }
            let (dx, dz) = cf_backward(&tape, &upstream).unwrap();

            let mut xv = x.values.clone();
            let err_x = grad_check(
                |vals| {
                    let xm = FeatureMap::from_values(h, w, ch, vals.to_vec()).unwrap();
                    loss_of(&xm, &z, &g, lambda)
                },
                &mut xv,
                &dx.values,
                1e-3,
            );
            assert!(err_x < 1e-4, "phi_x gradient error {err_x}");

            let mut zv = z.values.clone();
            let err_z = grad_check(
                |vals| {
                    let zm = FeatureMap::from_values(h, w, ch, vals.to_vec()).unwrap();
                    loss_of(&x, &zm, &g, lambda)
                },
                &mut zv,
                &dz.values,
                1e-3,
            );
            assert!(err_z < 1e-4, "phi_z gradient error {err_z}");
        }
    }

    #[test]
    fn grad_check_exact_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut x: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = grad_check(
            |v| v.iter().map(|a| a * a).sum(),
            &mut x,
            &analytic,
            1e-4,
        );
        assert!(err < 1e-8, "quadratic grad check error {err}");
    }

    #[test]
    fn sgd_degenerate_cases() {
        let mut params = vec![1.0, -2.0];
        let grads = vec![0.5, 0.25];
        let mut state = SgdState::new(0.1, 0.0, 0.0, 2);
        sgd_step(&mut params, &grads, &mut state).unwrap();
        assert_relative_eq!(params[0], 1.0 - 0.05);
        assert_relative_eq!(params[1], -2.0 - 0.025);

        // zero gradient, zero weight decay -> fixed point
        let mut params = vec![3.0];
        let mut state = SgdState::new(0.1, 0.9, 0.0, 1);
        sgd_step(&mut params, &[0.0], &mut state).unwrap();
        assert_eq!(params[0], 3.0);

        assert!(sgd_step(&mut params, &[0.0, 1.0], &mut state).is_err());
    }

    #[test]
    fn train_config_defaults_match_published_values() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr, 1e-5);
        assert_eq!(cfg.momentum, 0.9);
        assert_eq!(cfg.weight_decay, 5e-4);
        assert_eq!(cfg.batch, 16);
        assert_eq!(cfg.epochs, 200);
        assert_eq!(cfg.lambda, 1e-4);
    }

    fn toy_triplet(rng: &mut ChaCha8Rng) -> PreparedTriplet {
        let xs = random_map(rng, 9, 9, 2);
        let xd = random_map(rng, 1, 1, 2);
        let zs = random_map(rng, 9, 9, 2);
        let zd = random_map(rng, 1, 1, 2);
        // pooled grid: (9-7)/2+1 = 2, upsample 1x1 by 4 -> 4x4; mismatch, so
        // pool to 2x2 and upsample to 4x4 will not concat. Use direct maps.
        let g = gaussian_label(2, 2, (1.0, 1.0), 0.8).unwrap();
        PreparedTriplet {
            x_shallow: max_pool(&xs, 7, 2).unwrap(),
            x_deep: max_pool(&xd.clone(), 1, 1).unwrap(),
            z_shallow: max_pool(&zs, 7, 2).unwrap(),
            z_deep: max_pool(&zd.clone(), 1, 1).unwrap(),
            g,
        }
    }

    #[test]
    fn batch_loss_is_sum_over_identical_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let head = CompressionHead::random(2, 2, LrnParams::default(), 3);
        // deep map must match shallow grid 2x2: upsample(1x1 by 4) is 4x4,
        // so instead feed 2x2 directly via PreparedTriplet fields
        let mut t = toy_triplet(&mut rng);
        t.x_deep = random_map(&mut rng, 2, 2, 2);
        t.z_deep = random_map(&mut rng, 2, 2, 2);
        let mut g1 = HeadGrads::zeros(&head);
        let single = triplet_loss_and_grads(&t, &head, 1e-4, &mut g1).unwrap();
        let mut total = 0.0;
        let mut gn = HeadGrads::zeros(&head);
        for _ in 0..4 {
            total += triplet_loss_and_grads(&t, &head, 1e-4, &mut gn).unwrap();
        }
        assert_relative_eq!(total, 4.0 * single, max_relative = 1e-12);
        for (a, b) in g1.values.iter().zip(gn.values.iter()) {
            assert_relative_eq!(4.0 * a, *b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let head = CompressionHead::random(2, 2, LrnParams::default(), 5);
        let mut t = toy_triplet(&mut rng);
        t.x_deep = random_map(&mut rng, 2, 2, 2);
        t.z_deep = random_map(&mut rng, 2, 2, 2);
        let mut grads = HeadGrads::zeros(&head);
        triplet_loss_and_grads(&t, &head, 1e-2, &mut grads).unwrap();
        let mut params = head_params(&head);
        let base = head.clone();
        let err = grad_check(
            |p| {
                let mut h2 = base.clone();
                set_head_params(&mut h2, p);
                let mut g = HeadGrads::zeros(&h2);
                triplet_loss_and_grads(&t, &h2, 1e-2, &mut g).unwrap()
            },
            &mut params,
            &grads.values,
            1e-4,
        );
        assert!(err < 1e-4, "head gradient error {err}");
    }
}
