//! Stationary max-stable processes built from `Q`, their finite-dimensional
//! distributions, and the recovery of `Θ` from a `Z` representation.
//!
//! `ζ_j = max_i P_i Q^{(i)}_{j-T_i}` where `(P_i, T_i)` are the points of a
//! Poisson process with intensity `ϑ α x^{-α-1} dx ⊗ counting` and the
//! `Q^{(i)}` are i.i.d. copies of `Q`. Shifts are drawn on the window
//! inflated by `shift_margin`; `Q` is cut below `trunc_eps`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    collect_lanes, lane_rng, run_lanes, Estimate, IdentityReport, LaneRng, Sampling,
};
use crate::models::{Budget, Condition, SpectralModel};
use crate::seqspace::FiniteSeq;
use crate::stats::{frechet_cdf, ks_test, open_uniform, KsResult};

pub const DEFAULT_TRUNC_EPS: f64 = 1e-4;

/// Significance level of the marginal Kolmogorov–Smirnov check.
pub const KS_LEVEL: f64 = 1e-3;

/// Parameters of the M3 simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct M3Config {
    pub model: SpectralModel,
    /// Inclusive coordinate range `[a, b]`.
    pub window: (i64, i64),
    pub trunc_eps: f64,
    pub shift_margin: i64,
}

impl M3Config {
    /// Config with the default truncation and the smallest admissible margin.
    pub fn new(model: SpectralModel, window: (i64, i64)) -> Result<Self> {
        let margin = model.decay_lags(DEFAULT_TRUNC_EPS);
        let cfg = Self {
            model,
            window,
            trunc_eps: DEFAULT_TRUNC_EPS,
            shift_margin: margin,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Changes the truncation level and raises the margin if it became too small.
    pub fn with_trunc_eps(mut self, eps: f64) -> Result<Self> {
        self.trunc_eps = eps;
        if eps > 0.0 && eps < 1.0 {
            self.shift_margin = self.shift_margin.max(self.required_margin());
        }
        self.check()?;
        Ok(self)
    }

    pub fn with_shift_margin(mut self, margin: i64) -> Result<Self> {
        self.shift_margin = margin;
        self.check()?;
        Ok(self)
    }

    /// Lags beyond which truncated `Q` paths vanish.
    pub fn required_margin(&self) -> i64 {
        self.model.decay_lags(self.trunc_eps)
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    /// Inclusive range of the shifts `T_i`.
    pub fn shift_range(&self) -> (i64, i64) {
        (self.window.0 - self.shift_margin, self.window.1 + self.shift_margin)
    }

    pub fn check(&self) -> Result<()> {
        let (a, b) = self.window;
        if a > b {
            return Err(Error::InvalidArgument(format!("empty window [{a}, {b}]")));
        }
        if !(self.trunc_eps > 0.0 && self.trunc_eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "trunc_eps must lie in (0, 1), got {}",
                self.trunc_eps
            )));
        }
        if self.shift_margin < self.required_margin() {
            return Err(Error::InvalidArgument(format!(
                "shift_margin {} is below the {} lags needed at trunc_eps {}",
                self.shift_margin,
                self.required_margin(),
                self.trunc_eps
            )));
        }
        if !self.model.nonnegative() {
            return Err(Error::InvalidModel(format!(
                "{} has negative spectral paths; the M3 construction needs Θ ≥ 0",
                self.model
            )));
        }
        let theta = self.model.exact_theta();
        if !(theta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "{} has extremal index {theta}; the M3 construction needs ϑ > 0",
                self.model
            )));
        }
        Ok(())
    }
}

impl fmt::Display for M3Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model={} window={}..{} trunc_eps={} shift_margin={}",
            self.model, self.window.0, self.window.1, self.trunc_eps, self.shift_margin
        )
    }
}

/// One simulated path over the configured window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxStablePath {
    pub values: FiniteSeq,
    pub config: String,
    pub seed: u64,
}

struct M3Sampler<'a> {
    cfg: &'a M3Config,
    alpha: f64,
    intensity: f64,
    shifts: (i64, i64),
    fixed_q: Option<FiniteSeq>,
}

impl<'a> M3Sampler<'a> {
    fn new(cfg: &'a M3Config) -> Result<Self> {
        cfg.check()?;
        let shifts = cfg.shift_range();
        let len = (shifts.1 - shifts.0 + 1) as f64;
        Ok(Self {
            cfg,
            alpha: cfg.alpha(),
            intensity: cfg.model.exact_theta() * len,
            shifts,
            fixed_q: cfg.model.degenerate_q().map(|q| truncate_q(&q, cfg)),
        })
    }

    /// Next point `P_i = (ϑL / Γ_i)^{1/α}` of the decreasing sequence.
    fn next_point(&self, gamma: &mut f64, rng: &mut LaneRng) -> f64 {
        *gamma -= open_uniform(rng).ln();
        (self.intensity / *gamma).powf(1.0 / self.alpha)
    }

    fn draw_q(&self, rng: &mut LaneRng, budget: &mut Budget) -> Result<FiniteSeq> {
        if let Some(q) = &self.fixed_q {
            return Ok(q.clone());
        }
        let q = self
            .cfg
            .model
            .sample_conditioned(Condition::NoBackwardExceedance, rng, budget)?;
        Ok(truncate_q(&q, self.cfg))
    }

    fn path(&self, rng: &mut LaneRng) -> Result<FiniteSeq> {
        let (a, b) = self.cfg.window;
        let w = (b - a + 1) as usize;
        let mut z = vec![0.0_f64; w];
        let mut floor = 0.0_f64;
        let mut gamma = 0.0;
        let mut budget = Budget::default();
        // Refreshing the floor less often only adds points that cannot change z.
        let every = (w / 8).max(1);
        let mut step = 0usize;
        loop {
            let p = self.next_point(&mut gamma, rng);
            if p < floor {
                break;
            }
            step += 1;
            if step.is_multiple_of(every) {
                floor = z.iter().copied().fold(f64::INFINITY, f64::min);
                if p < floor {
                    break;
                }
            }
            let t = rng.random_range(self.shifts.0..=self.shifts.1);
            let q = self.draw_q(rng, &mut budget)?;
            for (j, v) in q.iter() {
                let k = j + t;
                if k >= a && k <= b {
                    let slot = &mut z[(k - a) as usize];
                    *slot = slot.max(p * v);
                }
            }
        }
        if let Some(k) = z.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Internal(format!(
                "coordinate {} of the M3 path is not positive",
                a + k as i64
            )));
        }
        Ok(FiniteSeq::new(a, z))
    }

    /// `max_{a ≤ j ≤ b} ζ_j` without building the path.
    fn block_max(&self, rng: &mut LaneRng) -> Result<f64> {
        let (a, b) = self.cfg.window;
        let mut m = 0.0_f64;
        let mut gamma = 0.0;
        let mut budget = Budget::default();
        loop {
            let p = self.next_point(&mut gamma, rng);
            if p < m {
                return Ok(m);
            }
            let t = rng.random_range(self.shifts.0..=self.shifts.1);
            let q = self.draw_q(rng, &mut budget)?;
            m = m.max(p * q.window_max(a - t..=b - t));
        }
    }
}

fn truncate_q(q: &FiniteSeq, cfg: &M3Config) -> FiniteSeq {
    let (eps, m) = (cfg.trunc_eps, cfg.shift_margin);
    q.map(|v| if v >= eps { v } else { 0.0 }).window(-m..=m).trim()
}

/// One M3 path over `cfg.window`.
pub fn simulate_m3(cfg: &M3Config, seed: u64) -> Result<MaxStablePath> {
    let sampler = M3Sampler::new(cfg)?;
    let values = sampler.path(&mut lane_rng(seed, 0))?;
    Ok(MaxStablePath {
        values,
        config: cfg.to_string(),
        seed,
    })
}

/// `s.n` independent M3 paths.
pub fn simulate_m3_paths(cfg: &M3Config, s: &Sampling) -> Result<Vec<FiniteSeq>> {
    let sampler = M3Sampler::new(cfg)?;
    collect_lanes(s, |rng| sampler.path(rng))
}

/// `s.n` independent draws of `max_{a ≤ j ≤ b} ζ_j`.
pub fn simulate_block_maxima(cfg: &M3Config, s: &Sampling) -> Result<Vec<f64>> {
    let sampler = M3Sampler::new(cfg)?;
    collect_lanes(s, |rng| sampler.block_max(rng))
}

/// Finite positive levels of `y`; coordinates outside its range are infinite.
fn finite_levels(y: &FiniteSeq) -> Result<Vec<(i64, f64)>> {
    let mut out = vec![];
    for (j, v) in y.iter() {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "level at coordinate {j} must be positive, got {v}"
            )));
        }
        if v.is_finite() {
            out.push((j, v));
        }
    }
    Ok(out)
}

/// `Σ_h y_h^{-α} 1{I(|θ_j| / y_{j+h}) = 0}` for one angular path.
pub fn infargmax_weight(theta: &FiniteSeq, levels: &[(i64, f64)], alpha: f64) -> f64 {
    let mut total = 0.0;
    for &(h, yh) in levels {
        let mut best = 0.0;
        let mut at = None;
        for &(k, yk) in levels {
            let r = theta.get(k - h).abs() / yk;
            if r > best {
                best = r;
                at = Some(k);
            }
        }
        if at == Some(h) {
            total += yh.powf(-alpha);
        }
    }
    total
}

/// `-log P(ζ_j ≤ y_j for all j)` by the infargmax formula.
///
/// Coordinates outside the stored range of `y`, and infinite entries, carry no
/// constraint.
pub fn fdd_log_survival(y: &FiniteSeq, model: &SpectralModel, s: &Sampling) -> Result<Estimate> {
    let levels = finite_levels(y)?;
    if levels.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let alpha = model.alpha();
    let m = run_lanes(s, 1, |rng, out| {
        out[0] = infargmax_weight(&model.sample_spectral(rng), &levels, alpha);
        Ok(())
    })?;
    Ok(m.estimate(0, s.seed))
}

/// `ν(max_{1 ≤ j ≤ n} |x_j| > 1) = Σ_{h=0}^{n-1} P(Y*_{-h,-1} ≤ 1)`.
///
/// Each term is `E[(1 - (Θ*_{-h,-1})^α)_+]`, computed from one angular draw by
/// a running maximum; once the window passes the support the term is constant.
pub fn block_max_measure(model: &SpectralModel, n: usize, s: &Sampling) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let alpha = model.alpha();
    let m = run_lanes(s, 1, |rng, out| {
        let theta = model.sample_spectral(rng);
        let lo = theta.support().map_or(0, |(lo, _)| lo);
        let mut back = 0.0_f64;
        let mut total = 1.0;
        for h in 1..n as i64 {
            back = back.max(theta.get(-h).abs());
            let w = (1.0 - back.powf(alpha)).max(0.0);
            if -h <= lo {
                total += w * (n as i64 - h) as f64;
                break;
            }
            total += w;
        }
        out[0] = total;
        Ok(())
    })?;
    Ok(m.estimate(0, s.seed))
}

/// `-log` of the empirical frequency of `{x_j ≤ y_j for all j}`, with a delta-method stderr.
pub fn empirical_log_survival<'a>(
    paths: impl IntoIterator<Item = &'a FiniteSeq>,
    y: &FiniteSeq,
    seed: u64,
) -> Result<Estimate> {
    let levels = finite_levels(y)?;
    let (mut hit, mut n) = (0u64, 0u64);
    for p in paths {
        n += 1;
        if levels.iter().all(|&(j, l)| p.get(j) <= l) {
            hit += 1;
        }
    }
    log_survival_from_counts(hit, n, seed)
}

fn log_survival_from_counts(hit: u64, n: u64, seed: u64) -> Result<Estimate> {
    if hit == 0 {
        return Err(Error::InvalidArgument(format!(
            "no path out of {n} stays below the levels"
        )));
    }
    let p = hit as f64 / n as f64;
    Ok(Estimate {
        value: -p.ln(),
        stderr: ((1.0 - p) / (n as f64 * p)).sqrt(),
        n_samples: n,
        seed,
    })
}

/// KS test of the marginal at the first window coordinate against α-Fréchet.
pub fn marginal_ks(paths: &[FiniteSeq], coordinate: i64, alpha: f64) -> KsResult {
    let xs: Vec<f64> = paths.iter().map(|p| p.get(coordinate)).collect();
    ks_test(&xs, |y| frechet_cdf(y, alpha))
}

/// Level vectors used by the finite-dimensional checks, all inside `[0, 2]`.
pub fn level_grid() -> Vec<FiniteSeq> {
    vec![
        FiniteSeq::new(0, vec![1.0, 1.0]),
        FiniteSeq::new(0, vec![0.6, 2.0]),
        FiniteSeq::new(0, vec![2.0, 0.8]),
        FiniteSeq::new(0, vec![1.0, f64::INFINITY, 1.0]),
        FiniteSeq::new(0, vec![1.0, 1.0, 1.0]),
        FiniteSeq::new(0, vec![1.5, 0.9, 2.5]),
    ]
}

fn levels_label(y: &FiniteSeq) -> String {
    let parts: Vec<String> = y
        .iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(j, v)| format!("{j}:{v}"))
        .collect();
    parts.join(";")
}

/// Empirical `-log P(ζ ≤ y)` from M3 paths against the infargmax formula.
pub fn fdd_check(
    paths: &[FiniteSeq],
    model: &SpectralModel,
    y: &FiniteSeq,
    s: &Sampling,
) -> Result<IdentityReport> {
    let emp = empirical_log_survival(paths, y, s.seed)?;
    let formula = fdd_log_survival(y, model, &s.derive(0xfdd))?;
    Ok(IdentityReport::independent(
        format!("fdd {} {model}", levels_label(y)),
        vec![
            ("m3 paths".into(), emp),
            ("infargmax formula".into(), formula),
        ],
        s.tolerance,
    ))
}

/// `max(ζ, ζ') / 2^{1/α}` against `ζ` on the level `y`, with the formula as a third side.
pub fn max_stability_check(
    paths: &[FiniteSeq],
    model: &SpectralModel,
    y: &FiniteSeq,
    s: &Sampling,
) -> Result<IdentityReport> {
    let half = paths.len() / 2;
    let (one, rest) = paths.split_at(half);
    let c = 2f64.powf(1.0 / model.alpha());
    let pooled: Vec<FiniteSeq> = rest
        .chunks_exact(2)
        .map(|w| w[0].max_with(&w[1]).div(c))
        .collect();
    let a = empirical_log_survival(one, y, s.seed)?;
    let b = empirical_log_survival(&pooled, y, s.seed)?;
    let formula = fdd_log_survival(y, model, &s.derive(0xfdd))?;
    Ok(IdentityReport::independent(
        format!("max-stability {} {model}", levels_label(y)),
        vec![
            ("one path".into(), a),
            ("max of two".into(), b),
            ("infargmax formula".into(), formula),
        ],
        s.tolerance,
    ))
}

/// Block maxima over `[1, n]` at level `y = x n^{1/α}`.
///
/// The sides are `-log P(M_n ≤ y) y^α / n` from simulated maxima and
/// `ν(max_{1..n} > 1) / n`, which tends to `ϑ`. With `compare_theta` the exact
/// `ϑ` is added as a side, which is only meaningful when `n` is large enough
/// for the `O(1/n)` edge term to vanish below the noise.
pub fn block_maxima_check(
    model: &SpectralModel,
    n: usize,
    x: f64,
    compare_theta: bool,
    s: &Sampling,
) -> Result<IdentityReport> {
    let alpha = model.alpha();
    let cfg = M3Config::new(model.clone(), (1, n as i64))?;
    let maxima = simulate_block_maxima(&cfg, s)?;
    let y = x * (n as f64).powf(1.0 / alpha);
    let hit = maxima.iter().filter(|m| **m <= y).count() as u64;
    let emp = log_survival_from_counts(hit, maxima.len() as u64, s.seed)?;
    let norm = y.powf(alpha) / n as f64;
    let emp = Estimate {
        value: emp.value * norm,
        stderr: emp.stderr * norm,
        ..emp
    };
    let nu = block_max_measure(model, n, &s.derive(0xb10c))?;
    let nu = Estimate {
        value: nu.value / n as f64,
        stderr: nu.stderr / n as f64,
        ..nu
    };
    let report = IdentityReport::independent(
        format!("block maxima n={n} x={x} {model}"),
        vec![("m3 block maxima".into(), emp), ("nu(max>1)/n".into(), nu)],
        s.tolerance,
    );
    Ok(if compare_theta {
        report.with_exact("theta", model.exact_theta(), s.tolerance)
    } else {
        report
    })
}

/// Outcome of the marginal KS check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub pass: bool,
}

/// Everything the max-stable suite checks for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxStableBattery {
    pub ks: Vec<KsReport>,
    pub reports: Vec<IdentityReport>,
}

impl MaxStableBattery {
    pub fn pass(&self) -> bool {
        self.ks.iter().all(|k| k.pass) && self.reports.iter().all(|r| r.pass)
    }
}

/// Block lengths of the extremal index check; the last one is compared with `ϑ`.
pub const BLOCK_LENGTHS: [usize; 3] = [10, 100, 1000];

/// Marginal KS, the level grid, max-stability, and block maxima.
pub fn battery(model: &SpectralModel, s: &Sampling) -> Result<MaxStableBattery> {
    let cfg = M3Config::new(model.clone(), (0, 2))?;
    let paths = simulate_m3_paths(&cfg, &s.derive(1))?;
    let ks = marginal_ks(&paths, 0, model.alpha());
    let ks = KsReport {
        name: format!("frechet marginal {model}"),
        statistic: ks.statistic,
        p_value: ks.p_value,
        n: ks.n,
        pass: ks.p_value >= KS_LEVEL,
    };
    let mut reports = vec![];
    for (i, y) in level_grid().iter().enumerate() {
        reports.push(fdd_check(&paths, model, y, &s.derive(10 + i as u64))?);
    }
    let doubled = simulate_m3_paths(&cfg, &s.derive(2).with_n(3 * s.n))?;
    for (i, y) in level_grid().iter().take(3).enumerate() {
        reports.push(max_stability_check(&doubled, model, y, &s.derive(20 + i as u64))?);
    }
    for (i, n) in BLOCK_LENGTHS.iter().enumerate() {
        let last = i + 1 == BLOCK_LENGTHS.len();
        reports.push(block_maxima_check(model, *n, 1.0, last, &s.derive(30 + i as u64))?);
    }
    Ok(MaxStableBattery {
        ks: vec![ks],
        reports,
    })
}

/// A path law for `Z` with `E[Z_j^α] = 1` at the coordinates in use.
pub trait ZSampler: Sync {
    fn sample(&self, rng: &mut LaneRng) -> FiniteSeq;
}

impl<F> ZSampler for F
where
    F: Fn(&mut LaneRng) -> FiniteSeq + Sync,
{
    fn sample(&self, rng: &mut LaneRng) -> FiniteSeq {
        self(rng)
    }
}

/// `κ B^T c` with `T` uniform on `[lo, hi]` and `κ^α = (hi - lo + 1) / Σ c_j^α`.
///
/// `E[Z_j^α] = 1` for every `j` with `j - c_k ∈ [lo, hi]` for all `k` in the
/// support of `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedPathZ {
    path: FiniteSeq,
    lo: i64,
    hi: i64,
    kappa: f64,
}

impl ShiftedPathZ {
    pub fn new(path: FiniteSeq, alpha: f64, lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty shift range [{lo}, {hi}]")));
        }
        if path.is_zero() || path.values().iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "Z path must be nonnegative, finite and not identically zero".into(),
            ));
        }
        let kappa = ((hi - lo + 1) as f64 / path.sum_abs_pow(alpha)).powf(1.0 / alpha);
        Ok(Self { path, lo, hi, kappa })
    }
}

impl ZSampler for ShiftedPathZ {
    fn sample(&self, rng: &mut LaneRng) -> FiniteSeq {
        let t = rng.random_range(self.lo..=self.hi);
        self.path.shift(t).scale(self.kappa)
    }
}

/// Importance-weighted `E[F(Θ)]` from a `Z` representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub estimate: Estimate,
    pub effective_sample_size: f64,
    pub warning: Option<String>,
}

/// `E[F(Θ)] = E[Z_{-h}^α F(B^h Z / Z_{-h}) 1{Z_{-h} ≠ 0}]`.
pub fn spectral_from_z(
    z: &dyn ZSampler,
    alpha: f64,
    h: i64,
    f: &crate::functional::FunctionalSpec,
    s: &Sampling,
) -> Result<ZReport> {
    f.check()?;
    let m = run_lanes(s, 3, |rng, out| {
        let path = z.sample(rng);
        let z0 = path.get(-h);
        if z0 == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        if z0 < 0.0 {
            return Err(Error::InvalidArgument(format!("Z path has negative value {z0}")));
        }
        let w = z0.powf(alpha);
        out[0] = w * f.eval(&path.shift(h).div(z0));
        out[1] = w;
        out[2] = w * w;
        Ok(())
    })?;
    let n = m.count() as f64;
    let ess = if m.mean(2) > 0.0 {
        n * m.mean(1) * m.mean(1) / m.mean(2)
    } else {
        0.0
    };
    let warning = (ess < n / 100.0).then(|| {
        format!("effective sample size {ess:.0} is below n/100 = {:.0}", n / 100.0)
    });
    Ok(ZReport {
        estimate: m.estimate(0, s.seed),
        effective_sample_size: ess,
        warning,
    })
}
