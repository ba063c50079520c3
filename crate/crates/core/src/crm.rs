//! Channel reliability measurement: score each feature channel by
//! target-vs-background activation and select the top-K channels.

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

/// Floating-point zero guard for the nonzero-activation count.
pub const NONZERO_EPS: f64 = 1e-12;

/// Per-channel reliability score `C = R · A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScore {
    pub channel: usize,
    /// Target-to-total L1 activation ratio.
    pub ratio: f64,
    /// Nonzero-activation indicator, 0 or 1.
    pub indicator: u8,
    /// `ratio * indicator`.
    pub score: f64,
}

/// Axis-aligned target region in feature-cell coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TargetRegion {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl TargetRegion {
    pub fn validate(&self, map: &FeatureMap) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument("empty target region".into()));
        }
        if self.top + self.height > map.height || self.left + self.width > map.width {
            return Err(Error::InvalidArgument(format!(
                "target region {}x{}+{}+{} outside {}x{} map",
                self.height, self.width, self.top, self.left, map.height, map.width
            )));
        }
        Ok(())
    }

    /// Region of `target` cells centered on the map center, clamped inside.
    pub fn centered(map_h: usize, map_w: usize, target_h: usize, target_w: usize) -> Self {
        let h = target_h.clamp(1, map_h);
        let w = target_w.clamp(1, map_w);
        Self {
            top: (map_h - h) / 2,
            left: (map_w - w) / 2,
            height: h,
            width: w,
        }
    }
}

/// Channel-wise target-to-total ratio `R^l = ‖S_t‖₁ / (‖S_e‖₁ + ζ)`.
pub fn channel_ratio(map: &FeatureMap, region: &TargetRegion, zeta: f64) -> Result<Vec<f64>> {
    if zeta <= 0.0 {
        return Err(Error::InvalidArgument("zeta must be > 0".into()));
    }
    region.validate(map)?;
    let mut target = vec![0.0f64; map.channels];
    let mut entire = vec![0.0f64; map.channels];
    for r in 0..map.height {
        for c in 0..map.width {
            let in_region = r >= region.top
                && r < region.top + region.height
                && c >= region.left
                && c < region.left + region.width;
            for d in 0..map.channels {
                let v = map.get(r, c, d).abs();
                entire[d] += v;
                if in_region {
                    target[d] += v;
                }
            }
        }
    }
    Ok(target
        .iter()
        .zip(entire.iter())
        .map(|(t, e)| t / (e + zeta))
        .collect())
}

/// Nonzero-activation indicator per channel: `A = 1` iff the count of
/// strictly nonzero target cells exceeds `W_t·H_t/η`.
pub fn activation_indicator(map: &FeatureMap, region: &TargetRegion, eta: f64) -> Result<Vec<u8>> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be > 0".into()));
    }
    region.validate(map)?;
    let threshold = (region.width * region.height) as f64 / eta;
    let mut out = vec![0u8; map.channels];
    for d in 0..map.channels {
        let mut count = 0usize;
        for r in region.top..region.top + region.height {
            for c in region.left..region.left + region.width {
                if map.get(r, c, d).abs() > NONZERO_EPS {
                    count += 1;
                }
            }
        }
        out[d] = u8::from(count as f64 > threshold);
    }
    Ok(out)
}

/// Reliability scores `C^l = R^l · A^l` for every channel.
pub fn reliability_scores(
    map: &FeatureMap,
    region: &TargetRegion,
    eta: f64,
    zeta: f64,
) -> Result<Vec<ChannelScore>> {
    let ratios = channel_ratio(map, region, zeta)?;
    let indicators = activation_indicator(map, region, eta)?;
    Ok(ratios
        .into_iter()
        .zip(indicators)
        .enumerate()
        .map(|(channel, (ratio, indicator))| ChannelScore {
            channel,
            ratio,
            indicator,
            score: ratio * indicator as f64,
        })
        .collect())
}

/// Indices of the K highest-scoring channels, descending by score with
/// ties broken by lower channel index.
pub fn select_top_k(scores: &[ChannelScore], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} out of range for {} channels",
            scores.len()
        )));
    }
    let mut order: Vec<&ChannelScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.channel.cmp(&b.channel))
    });
    Ok(order.iter().take(k).map(|s| s.channel).collect())
}

/// Keep only the listed channels of a map, in the given order.
pub fn select_channels(map: &FeatureMap, channels: &[usize]) -> Result<FeatureMap> {
    if channels.iter().any(|&c| c >= map.channels) {
        return Err(Error::InvalidArgument("channel index out of range".into()));
    }
    let k = channels.len();
    let mut out = FeatureMap::new(map.height, map.width, k);
    for i in 0..map.height * map.width {
        for (j, &c) in channels.iter().enumerate() {
            out.values[i * k + j] = map.values[i * map.channels + c];
        }
    }
    Ok(out)
}
