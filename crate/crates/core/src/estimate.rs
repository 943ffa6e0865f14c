//! Monte Carlo estimates, moment accumulation and lane-parallel sampling.
//!
//! Every estimator in the crate draws `n` samples split over a fixed number of
//! lanes. Lane `i` owns the ChaCha stream `i` of the generator seeded with the
//! run seed, so results are bit-reproducible given `(seed, n, lanes)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LaneRng = ChaCha8Rng;

pub const DEFAULT_LANES: usize = 4;
pub const DEFAULT_TOLERANCE: f64 = 3.0;

/// Monte Carlo scalar with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    /// An exactly known value (zero standard error).
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_samples: 0,
            seed: 0,
        }
    }

    /// Discrepancy to `other` in units of the combined standard error of two
    /// independent estimates.
    pub fn sigmas_to(&self, other: &Estimate) -> f64 {
        sigmas(
            self.value - other.value,
            self.stderr.hypot(other.stderr),
            self.value.abs().max(other.value.abs()),
        )
    }

    pub fn agrees_with(&self, other: &Estimate, tol: f64) -> bool {
        self.sigmas_to(other) <= tol
    }

    pub fn lower_bound(&self, tol: f64) -> f64 {
        self.value - tol * self.stderr
    }
}

/// `|diff| / stderr`, treating differences at rounding level as zero.
pub fn sigmas(diff: f64, stderr: f64, scale: f64) -> f64 {
    let floor = 1e-9 * scale.max(1.0);
    let d = diff.abs();
    if d <= floor {
        0.0
    } else if stderr > 0.0 {
        d / stderr
    } else {
        f64::INFINITY
    }
}

/// Sampling budget shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub n: usize,
    pub seed: u64,
    pub lanes: usize,
    /// Pass threshold, as a multiple of the combined standard error.
    pub tolerance: f64,
}

impl Sampling {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            lanes: DEFAULT_LANES,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_lanes(mut self, lanes: usize) -> Self {
        self.lanes = lanes.max(1);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Same budget on an independent stream, keyed by `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: mix_seed(self.seed, tag),
            ..*self
        }
    }

    fn lane_sizes(&self) -> Vec<usize> {
        let lanes = self.lanes.max(1);
        (0..lanes)
            .map(|i| self.n / lanes + usize::from(i < self.n % lanes))
            .collect()
    }
}

/// SplitMix64 finaliser applied to `seed ^ tag`, used to derive sub-streams.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn lane_rng(seed: u64, lane: usize) -> LaneRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane as u64);
    rng
}

/// Running means and co-moments of a fixed-dimension vector statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    count: u64,
    mean: Vec<f64>,
    // Row-major dim x dim matrix of centred cross products.
    comoment: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let post_i = x[i] - self.mean[i];
            for j in 0..d {
                self.comoment[i * d + j] += delta[j] * post_i;
            }
        }
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = other
            .mean
            .iter()
            .zip(&self.mean)
            .map(|(b, a)| b - a)
            .collect();
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] +=
                    other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.count - 1) as f64
    }

    pub fn stderr(&self, i: usize) -> f64 {
        self.stderr_of_combination(&[(i, 1.0)])
    }

    /// Standard error of the mean of `x_i - x_j` over paired samples.
    pub fn diff_stderr(&self, i: usize, j: usize) -> f64 {
        self.stderr_of_combination(&[(i, 1.0), (j, -1.0)])
    }

    /// Standard error of the mean of `Σ w_k x_{i_k}`.
    pub fn stderr_of_combination(&self, terms: &[(usize, f64)]) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let mut var = 0.0;
        for &(i, wi) in terms {
            for &(j, wj) in terms {
                var += wi * wj * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.count as f64).sqrt()
    }

    pub fn estimate(&self, i: usize, seed: u64) -> Estimate {
        Estimate {
            value: self.mean(i),
            stderr: self.stderr(i),
            n_samples: self.count,
            seed,
        }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut m = Self::new(dim);
        for r in rows {
            m.push(r);
        }
        m
    }
}

/// Draws `sampling.n` vector samples of dimension `dim` across lanes.
///
/// `draw` fills one sample; lane results are merged in lane order so the
/// output does not depend on thread scheduling.
pub fn run_lanes<F>(sampling: &Sampling, dim: usize, draw: F) -> Result<Moments>
where
    F: Fn(&mut LaneRng, &mut [f64]) -> Result<()> + Sync,
{
    if sampling.n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let sizes = sampling.lane_sizes();
    let lanes: Vec<Result<Moments>> = sizes
        .par_iter()
        .enumerate()
        .map(|(lane, &count)| {
            let mut rng = lane_rng(sampling.seed, lane);
            let mut acc = Moments::new(dim);
            let mut buf = vec![0.0; dim];
            for _ in 0..count {
                draw(&mut rng, &mut buf)?;
                if let Some(k) = buf.iter().position(|v| v.is_nan()) {
                    return Err(Error::NanValue(format!("sample component {k}")));
                }
                acc.push(&buf);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::new(dim);
    for lane in lanes {
        total.merge(&lane?);
    }
    Ok(total)
}

/// Draws `sampling.n` items across lanes and concatenates them in lane order.
pub fn collect_lanes<T, F>(sampling: &Sampling, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut LaneRng) -> Result<T> + Sync,
{
    let sizes = sampling.lane_sizes();
    let lanes: Vec<Result<Vec<T>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(lane, &count)| {
            let mut rng = lane_rng(sampling.seed, lane);
            (0..count).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(sampling.n);
    for lane in lanes {
        out.extend(lane?);
    }
    Ok(out)
}

/// One pairwise comparison inside an [`IdentityReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub a: usize,
    pub b: usize,
    /// Standard error of `a - b`; paired when both sides share draws.
    pub stderr: f64,
    pub sigmas: f64,
    pub pass: bool,
}

/// Several estimates of one quantity and their pairwise agreement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub sides: Vec<(String, Estimate)>,
    pub pairs: Vec<PairCheck>,
    pub max_discrepancy_sigmas: f64,
    pub pass: bool,
}

impl IdentityReport {
    /// Sides are independent estimates (or exact values).
    pub fn independent(name: impl Into<String>, sides: Vec<(String, Estimate)>, tol: f64) -> Self {
        let n = sides.len();
        let mut pairs = vec![];
        for a in 0..n {
            for b in a + 1..n {
                let (x, y) = (&sides[a].1, &sides[b].1);
                pairs.push(pair(a, b, x, y, x.stderr.hypot(y.stderr), tol));
            }
        }
        Self::assemble(name.into(), sides, pairs)
    }

    /// Sides are the means of coordinates `0..labels.len()` of paired samples.
    pub fn paired(
        name: impl Into<String>,
        labels: &[&str],
        moments: &Moments,
        seed: u64,
        tol: f64,
    ) -> Self {
        let cols: Vec<(&str, usize)> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        Self::paired_columns(name, &cols, moments, seed, tol)
    }

    /// Sides are the means of the given `(label, coordinate)` columns of paired samples.
    pub fn paired_columns(
        name: impl Into<String>,
        cols: &[(&str, usize)],
        moments: &Moments,
        seed: u64,
        tol: f64,
    ) -> Self {
        let sides: Vec<(String, Estimate)> = cols
            .iter()
            .map(|(l, i)| (l.to_string(), moments.estimate(*i, seed)))
            .collect();
        let mut pairs = vec![];
        for a in 0..sides.len() {
            for b in a + 1..sides.len() {
                let se = moments.diff_stderr(cols[a].1, cols[b].1);
                pairs.push(pair(a, b, &sides[a].1, &sides[b].1, se, tol));
            }
        }
        Self::assemble(name.into(), sides, pairs)
    }

    /// A paired report whose sides are also compared against an exact value.
    pub fn with_exact(mut self, label: &str, value: f64, tol: f64) -> Self {
        let exact = Estimate::exact(value);
        let idx = self.sides.len();
        for a in 0..idx {
            let x = self.sides[a].1;
            self.pairs.push(pair(a, idx, &x, &exact, x.stderr, tol));
        }
        self.sides.push((label.to_string(), exact));
        Self::assemble(self.name, self.sides, self.pairs)
    }

    fn assemble(name: String, sides: Vec<(String, Estimate)>, pairs: Vec<PairCheck>) -> Self {
        let max = pairs.iter().map(|p| p.sigmas).fold(0.0, f64::max);
        let pass = pairs.iter().all(|p| p.pass);
        Self {
            name,
            sides,
            pairs,
            max_discrepancy_sigmas: max,
            pass,
        }
    }
}

fn pair(a: usize, b: usize, x: &Estimate, y: &Estimate, se: f64, tol: f64) -> PairCheck {
    let s = sigmas(x.value - y.value, se, x.value.abs().max(y.value.abs()));
    PairCheck {
        a,
        b,
        stderr: se,
        sigmas: s,
        pass: s <= tol,
    }
}
