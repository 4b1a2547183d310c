//! Percentile bootstrap with reproducible, batch-parallel resampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Confidence level in percent.
    pub level: f64,
    pub seed: u64,
    /// Resamples per independently seeded stream.
    pub batch_size: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 10_000, level: 95.0, seed: 0, batch_size: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
    pub level: f64,
    pub resamples: usize,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Length of the intersection relative to the shorter interval. Two
    /// degenerate intervals overlap fully when equal and not at all otherwise.
    pub fn overlap_fraction(&self, other: &ConfidenceInterval) -> f64 {
        let inter = self.upper.min(other.upper) - self.lower.max(other.lower);
        let shorter = self.width().min(other.width());
        if inter < 0.0 {
            0.0
        } else if shorter <= 0.0 {
            1.0
        } else {
            (inter / shorter).min(1.0)
        }
    }
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Resamples `items` with replacement and returns the central `level`%
/// percentile interval of `statistic`. Batch `b` draws from stream `b` of the
/// seeded generator, so results do not depend on thread count.
pub fn bootstrap_ci<T, F>(items: &[T], statistic: F, cfg: &BootstrapConfig) -> Result<ConfidenceInterval, EvalError>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync,
{
    if items.is_empty() {
        return Err(EvalError::EmptySample);
    }
    if cfg.resamples == 0 || cfg.batch_size == 0 || !(0.0..100.0).contains(&cfg.level) || cfg.level <= 0.0 {
        return Err(EvalError::Config(format!("bad bootstrap settings {cfg:?}")));
    }
    let n = items.len();
    let batches = cfg.resamples.div_ceil(cfg.batch_size);
    let mut stats: Vec<f64> = (0..batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let count = cfg.batch_size.min(cfg.resamples - b * cfg.batch_size);
            let mut sample: Vec<&T> = Vec::with_capacity(n);
            let statistic = &statistic;
            (0..count)
                .map(move |_| {
                    sample.clear();
                    sample.extend((0..n).map(|_| &items[rng.gen_range(0..n)]));
                    statistic(&sample)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (100.0 - cfg.level) / 200.0;
    let all: Vec<&T> = items.iter().collect();
    Ok(ConfidenceInterval {
        lower: percentile(&stats, alpha),
        upper: percentile(&stats, 1.0 - alpha),
        point: statistic(&all),
        level: cfg.level,
        resamples: cfg.resamples,
    })
}
