//! Clusters of extremes in simulated series: the empirical cluster measure,
//! its limit `ν*`, the law of normalised clusters and an anticlustering
//! diagnostic.
//!
//! Blocks are disjoint runs of `r_n` observations. A block contributes
//! `H(c_n^{-1} X_{block})`; the total is normalised by the number of
//! exceedances of `c_n`, so the estimate is
//! `Σ_blocks H / (k_n r_n P̂(|X_0| > c_n))`.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{run_lanes, Estimate, IdentityReport, LaneRng, Sampling};
use crate::functional::FunctionalSpec;
use crate::identities::q_weight;
use crate::models::SpectralModel;
use crate::seqspace::{canonical_anchor, FiniteSeq};
use crate::stats::quantile;
use crate::tailkernel::radial_given_angle;

/// Upper bound on `r_n P̂(|X_0| > c_n)` for an accepted scheme.
pub const MAX_LOAD: f64 = 0.05;

/// Blocks above `c_n` under the default scheme.
pub const DEFAULT_CLUSTER_BLOCKS: usize = 150;

/// Default block length is `⌊n^{BLOCK_EXPONENT}⌋`.
pub const BLOCK_EXPONENT: f64 = 0.35;

pub const MIN_BLOCKS: usize = 50;

/// Blocks needed by the conditional checks.
pub const MIN_QUALIFYING: usize = 100;

/// Bootstrap resamples for block standard errors.
pub const BOOTSTRAP_REPS: usize = 200;

/// Block length, scaling level and the levels `u` probed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockingScheme {
    pub n: usize,
    pub r_n: usize,
    pub c_n: f64,
    pub u_grid: Vec<f64>,
}

impl BlockingScheme {
    pub fn new(n: usize, r_n: usize, c_n: f64, u_grid: Vec<f64>) -> Result<Self> {
        let s = Self { n, r_n, c_n, u_grid };
        s.check()?;
        Ok(s)
    }

    /// `r_n = ⌊n^{BLOCK_EXPONENT}⌋` and `c_n` exceeded by exactly
    /// `DEFAULT_CLUSTER_BLOCKS` block maxima.
    pub fn default_for(series: &[f64]) -> Result<Self> {
        let r_n = (series.len() as f64).powf(BLOCK_EXPONENT).floor().max(1.0) as usize;
        Self::with_block_count(series, r_n, DEFAULT_CLUSTER_BLOCKS)
    }

    /// `c_n` the `(count + 1)`-th largest block maximum of `|X|`.
    pub fn with_block_count(series: &[f64], r_n: usize, count: usize) -> Result<Self> {
        if r_n == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        let k = series.len() / r_n;
        if count >= k {
            return Err(Error::InsufficientBlocks {
                found: k,
                required: count + 1,
            });
        }
        let mut maxima: Vec<f64> = series[..k * r_n]
            .chunks_exact(r_n)
            .map(|b| b.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
            .collect();
        maxima.sort_by(|a, b| b.total_cmp(a));
        Self::new(series.len(), r_n, maxima[count], vec![1.0, 2.0])
    }

    /// `r_n = ⌊n^{exponent}⌋` and `r_n P̂(|X_0| > c_n) ≈ load`.
    pub fn with_exponent(series: &[f64], exponent: f64, load: f64) -> Result<Self> {
        let r_n = (series.len() as f64).powf(exponent).floor().max(1.0) as usize;
        Self::with_load(series, r_n, load)
    }

    /// `c_n` chosen so that `r_n P̂(|X_0| > c_n) ≈ load`.
    pub fn with_load(series: &[f64], r_n: usize, load: f64) -> Result<Self> {
        if !(load > 0.0 && load < r_n as f64) {
            return Err(Error::InvalidArgument(format!("load {load} out of range")));
        }
        Self::with_quantile(series, r_n, 1.0 - load / r_n as f64)
    }

    /// `c_n` the empirical `q` quantile of `|X|`.
    pub fn with_quantile(series: &[f64], r_n: usize, q: f64) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InvalidArgument("empty series".into()));
        }
        let abs: Vec<f64> = series.iter().map(|x| x.abs()).collect();
        Self::new(series.len(), r_n, quantile(&abs, q), vec![1.0, 2.0])
    }

    pub fn with_u_grid(mut self, u_grid: Vec<f64>) -> Result<Self> {
        self.u_grid = u_grid;
        self.check()?;
        Ok(self)
    }

    pub fn k_n(&self) -> usize {
        self.n.checked_div(self.r_n).unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        if self.r_n == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        if !(self.c_n > 0.0 && self.c_n.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scaling level must be positive, got {}",
                self.c_n
            )));
        }
        if self.k_n() < MIN_BLOCKS {
            return Err(Error::InsufficientBlocks {
                found: self.k_n(),
                required: MIN_BLOCKS,
            });
        }
        if self.u_grid.iter().any(|u| !(*u > 0.0)) {
            return Err(Error::InvalidArgument("levels u must be positive".into()));
        }
        Ok(())
    }

    /// `r_n P̂(|X_0| > c_n)` over the full blocks of `series`.
    pub fn load(&self, series: &[f64]) -> f64 {
        let used = self.k_n() * self.r_n;
        let hits = series[..used.min(series.len())]
            .iter()
            .filter(|x| x.abs() > self.c_n)
            .count();
        self.r_n as f64 * hits as f64 / used as f64
    }

    fn check_series(&self, series: &[f64]) -> Result<()> {
        if series.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "scheme is for n = {}, series has {}",
                self.n,
                series.len()
            )));
        }
        let load = self.load(series);
        if load == 0.0 {
            return Err(Error::TooFewExceedances {
                found: 0,
                required: 1,
            });
        }
        if load > MAX_LOAD {
            return Err(Error::InvalidArgument(format!(
                "r_n P(|X_0| > c_n) = {load:.4} exceeds {MAX_LOAD}; raise c_n or shorten blocks"
            )));
        }
        Ok(())
    }

    fn block<'a>(&self, series: &'a [f64], i: usize) -> &'a [f64] {
        &series[i * self.r_n..(i + 1) * self.r_n]
    }
}

/// A block scaled by `c_n^{-1}` and shifted so its first maximum sits at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBlock {
    pub values: FiniteSeq,
    pub origin: usize,
}

/// Blocks whose maximum exceeds `c_n · level`.
pub fn extract_blocks(series: &[f64], scheme: &BlockingScheme, level: f64) -> Result<Vec<ClusterBlock>> {
    scheme.check()?;
    let cut = scheme.c_n * level;
    let mut out = vec![];
    for i in 0..scheme.k_n() {
        let b = scheme.block(series, i);
        if b.iter().any(|x| x.abs() > cut) {
            let seq = FiniteSeq::new(0, b.to_vec()).div(scheme.c_n);
            out.push(ClusterBlock {
                values: canonical_anchor(&seq)?,
                origin: i,
            });
        }
    }
    Ok(out)
}

fn require_cluster_functional(h: &FunctionalSpec) -> Result<f64> {
    h.check()?;
    if !h.shift_invariant() {
        return Err(Error::InvalidFunctional(format!("{h} is not shift invariant")));
    }
    h.support_floor().ok_or_else(|| {
        Error::InvalidFunctional(format!("{h} has no support bounded away from 0"))
    })
}

/// Standard error of `Σ a_i / Σ d_i` by resampling blocks with replacement.
fn bootstrap_ratio_stderr(a: &[f64], d: &[f64], k: usize, seed: u64) -> f64 {
    // Blocks absent from `a`/`d` contribute zero to both sums.
    let m = a.len();
    let mut rng = LaneRng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(BOOTSTRAP_REPS);
    for _ in 0..BOOTSTRAP_REPS {
        let (mut sa, mut sd) = (0.0, 0.0);
        for _ in 0..k {
            let i = rng.random_range(0..k);
            if i < m {
                sa += a[i];
                sd += d[i];
            }
        }
        if sd > 0.0 {
            stats.push(sa / sd);
        }
    }
    let n = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / n;
    (stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `Σ_blocks H(c_n^{-1} X_block) / (k_n r_n P̂(|X_0| > c_n))`, block bootstrap stderr.
pub fn empirical_cluster_measure(
    series: &[f64],
    scheme: &BlockingScheme,
    h: &FunctionalSpec,
    seed: u64,
) -> Result<Estimate> {
    let floor = require_cluster_functional(h)?;
    scheme.check()?;
    scheme.check_series(series)?;
    // Only blocks with an exceedance of c_n or of c_n·floor carry mass; the rest
    // are zero in both sums and are represented by their count.
    let cut = floor.min(1.0);
    let mut a = vec![];
    let mut d = vec![];
    for block in extract_blocks(series, scheme, cut)? {
        let raw = scheme.block(series, block.origin);
        a.push(h.eval(&block.values));
        d.push(raw.iter().filter(|x| x.abs() > scheme.c_n).count() as f64);
    }
    let total: f64 = d.iter().sum();
    if total == 0.0 {
        return Err(Error::TooFewExceedances {
            found: 0,
            required: 1,
        });
    }
    let value = a.iter().sum::<f64>() / total;
    if value.is_nan() {
        return Err(Error::NanValue(format!("cluster measure of {h}")));
    }
    Ok(Estimate {
        value,
        stderr: bootstrap_ratio_stderr(&a, &d, scheme.k_n(), seed),
        n_samples: scheme.k_n() as u64,
        seed,
    })
}

/// `ν*(H)` in its `Q` form and its infargmax form, on paired draws.
pub fn nu_star(h: &FunctionalSpec, model: &SpectralModel, s: &Sampling) -> Result<IdentityReport> {
    require_cluster_functional(h)?;
    let alpha = model.alpha();
    let m = run_lanes(s, 2, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, alpha);
        out[0] = if w > 0.0 {
            w * radial_given_angle(h, &theta.div(theta.supnorm()), 0.0, alpha, rng)?
        } else {
            0.0
        };
        out[1] = if theta.infargmax().is_at(0) {
            radial_given_angle(h, &theta, 0.0, alpha, rng)?
        } else {
            0.0
        };
        Ok(())
    })?;
    Ok(IdentityReport::paired(
        format!("nu* {h} {model}"),
        &["Q form", "infargmax form"],
        &m,
        s.seed,
        s.tolerance,
    ))
}

/// `E[h(Q)]`, exact when the law of `Θ` is finite or `Q` is degenerate.
pub fn q_expectation(h: &FunctionalSpec, model: &SpectralModel, s: &Sampling) -> Result<Estimate> {
    let alpha = model.alpha();
    if let Some(q) = model.degenerate_q() {
        return Ok(Estimate::exact(h.eval(&q)));
    }
    if let Some(paths) = model.enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for (theta, p) in &paths {
            let w = p * q_weight(theta, alpha);
            if w > 0.0 {
                num += w * h.eval(&theta.div(theta.supnorm()));
                den += w;
            }
        }
        return Ok(Estimate::exact(num / den));
    }
    let m = run_lanes(s, 2, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, alpha);
        out[0] = if w > 0.0 { w * h.eval(&theta.div(theta.supnorm())) } else { 0.0 };
        out[1] = w;
        Ok(())
    })?;
    let (a, b) = (m.mean(0), m.mean(1));
    let r = a / b;
    Ok(Estimate {
        value: r,
        stderr: m.stderr_of_combination(&[(0, 1.0 / b), (1, -r / b)]),
        n_samples: m.count(),
        seed: s.seed,
    })
}

/// Mean and stderr of i.i.d. values.
fn sample_mean(xs: &[f64], seed: u64) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
        n_samples: xs.len() as u64,
        seed,
    }
}

/// Radial multipliers `v` of the Pareto factorisation check.
pub const RADIAL_FACTORS: [f64; 2] = [1.5, 2.0];

/// Blocks with `block* > c_n u`: probe means of `block / block*` against `E[h(Q)]`,
/// and `P(block* > c_n u v | block* > c_n u)` against `v^{-α}`.
pub fn normalized_cluster_law(
    series: &[f64],
    scheme: &BlockingScheme,
    u: f64,
    probes: &[FunctionalSpec],
    model: &SpectralModel,
    s: &Sampling,
) -> Result<Vec<IdentityReport>> {
    scheme.check_series(series)?;
    let blocks = extract_blocks(series, scheme, u)?;
    if blocks.len() < MIN_QUALIFYING {
        return Err(Error::InsufficientBlocks {
            found: blocks.len(),
            required: MIN_QUALIFYING,
        });
    }
    let mut out = vec![];
    for (i, h) in probes.iter().enumerate() {
        h.check()?;
        if !h.shift_invariant() {
            return Err(Error::InvalidFunctional(format!("{h} is not shift invariant")));
        }
        let vals: Vec<f64> = blocks
            .iter()
            .map(|b| h.eval(&b.values.div(b.values.supnorm())))
            .collect();
        let emp = sample_mean(&vals, s.seed);
        let law = q_expectation(h, model, &s.derive(i as u64))?;
        out.push(IdentityReport::independent(
            format!("cluster law {h} u={u} {model}"),
            vec![("blocks".into(), emp), ("Q law".into(), law)],
            s.tolerance,
        ));
    }
    let alpha = model.alpha();
    for v in RADIAL_FACTORS {
        let vals: Vec<f64> = blocks
            .iter()
            .map(|b| if b.values.supnorm() > u * v { 1.0 } else { 0.0 })
            .collect();
        out.push(IdentityReport::independent(
            format!("cluster radius v={v} u={u} {model}"),
            vec![
                ("blocks".into(), sample_mean(&vals, s.seed)),
                ("v^-alpha".into(), Estimate::exact(v.powf(-alpha))),
            ],
            s.tolerance,
        ));
    }
    Ok(out)
}

/// One point of the anticlustering curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnticlusterPoint {
    pub m: usize,
    pub estimate: Estimate,
}

/// `P(max_{m ≤ |i| ≤ r_n} |X_i| > c_n u | |X_0| > c_n u)` for each `m`.
pub fn anticlustering_diagnostic(
    series: &[f64],
    scheme: &BlockingScheme,
    m_grid: &[usize],
    u: f64,
) -> Result<Vec<AnticlusterPoint>> {
    scheme.check()?;
    let r = scheme.r_n;
    let cut = scheme.c_n * u;
    let centers: Vec<usize> = (r..series.len().saturating_sub(r))
        .filter(|&t| series[t].abs() > cut)
        .collect();
    if centers.len() < MIN_QUALIFYING {
        return Err(Error::TooFewExceedances {
            found: centers.len(),
            required: MIN_QUALIFYING,
        });
    }
    let mut out = vec![];
    for &m in m_grid {
        if m == 0 || m > r {
            return Err(Error::InvalidArgument(format!("lag {m} outside 1..={r}")));
        }
        let vals: Vec<f64> = centers
            .iter()
            .map(|&t| {
                let far = (m..=r).any(|i| series[t - i].abs() > cut || series[t + i].abs() > cut);
                if far {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        out.push(AnticlusterPoint {
            m,
            estimate: sample_mean(&vals, 0),
        });
    }
    Ok(out)
}

/// Shift-invariant functionals compared across the series and the model.
pub fn probe_battery() -> Vec<FunctionalSpec> {
    vec![
        FunctionalSpec::exceeds_sup(1.0),
        FunctionalSpec::exceeds_sup(2.0),
        FunctionalSpec::CountExceed(1.0),
        FunctionalSpec::AtLeastExceed {
            level: 1.0,
            count: 2,
        },
    ]
}

/// Probes of the normalised cluster law, read next to the cluster maximum.
///
/// Probes that count secondary exceedances anywhere in a block also pick up
/// independent exceedances of `ℓ c_n` at rate `r_n P(|X_0| > ℓ c_n)`; local
/// probes pay that only once per lag. Levels keep clear of the atoms of
/// `|Q_j|`, which finite-level noise smears.
pub fn cluster_law_probes(model: &SpectralModel) -> Vec<FunctionalSpec> {
    let mut rng = LaneRng::seed_from_u64(0x9b0e);
    let anchored: Vec<FiniteSeq> = (0..PROBE_DRAWS)
        .map(|_| model.sample_spectral(&mut rng))
        .filter(|t| q_weight(t, model.alpha()) > 0.0)
        .map(|t| {
            let j = t.infargmax().index().unwrap_or(0);
            t.div(t.supnorm()).shift(-j)
        })
        .collect();
    [vec![1], vec![-1], vec![-1, 1]]
        .into_iter()
        .map(|coords| {
            let atoms: Vec<f64> = anchored
                .iter()
                .map(|q| coords.iter().fold(0.0_f64, |m, &j| m.max(q.get(j).abs())))
                .collect();
            FunctionalSpec::ThresholdIndicator {
                level: widest_gap(&atoms),
                coords: Some(coords),
            }
            .anchored()
        })
        .collect()
}

const PROBE_DRAWS: usize = 2000;

/// Level in `[0.15, 0.85]` farthest from every value in `atoms`.
fn widest_gap(atoms: &[f64]) -> f64 {
    let dist = |l: f64| atoms.iter().fold(f64::INFINITY, |m, a| m.min((a - l).abs()));
    (15..=85)
        .map(|i| i as f64 / 100.0)
        .fold((0.5, -1.0), |(bl, bd), l| {
            let d = dist(l);
            if d > bd {
                (l, d)
            } else {
                (bl, bd)
            }
        })
        .0
}

/// Everything the cluster suite checks for one model with a series construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterBattery {
    pub scheme: BlockingScheme,
    pub load: f64,
    pub reports: Vec<IdentityReport>,
    pub anticlustering: Vec<AnticlusterPoint>,
}

impl ClusterBattery {
    pub fn pass(&self) -> bool {
        self.load <= MAX_LOAD && self.reports.iter().all(|r| r.pass)
    }
}

/// Simulates a series of `series_len` points and compares its clusters with the model.
pub fn battery(model: &SpectralModel, series_len: usize, s: &Sampling) -> Result<ClusterBattery> {
    let mut rng = LaneRng::seed_from_u64(s.derive(0x5e7).seed);
    let series = model.simulate_series(series_len, &mut rng)?;
    let scheme = BlockingScheme::default_for(&series)?;
    battery_on(model, &series, scheme, s)
}

/// The cluster battery on a given series and scheme.
pub fn battery_on(
    model: &SpectralModel,
    series: &[f64],
    scheme: BlockingScheme,
    s: &Sampling,
) -> Result<ClusterBattery> {
    let load = scheme.load(series);
    let theta = model.exact_theta();
    let mut reports = vec![];
    for (i, h) in probe_battery().iter().enumerate() {
        let emp = empirical_cluster_measure(series, &scheme, h, s.derive(100 + i as u64).seed)?;
        let star = nu_star(h, model, &s.derive(200 + i as u64))?;
        let q_form = star.sides[0].1;
        let mut sides = vec![("series".to_string(), emp), ("nu* Q form".to_string(), q_form)];
        if let FunctionalSpec::ThresholdIndicator { coords: None, level } = h {
            sides.push(("theta u^-alpha".into(), Estimate::exact(theta * level.powf(-model.alpha()))));
        }
        reports.push(IdentityReport::independent(
            format!("cluster measure {h} {model}"),
            sides,
            s.tolerance,
        ));
        reports.push(star);
    }
    reports.extend(normalized_cluster_law(
        series,
        &scheme,
        1.0,
        &cluster_law_probes(model),
        model,
        &s.derive(300),
    )?);
    let m_grid: Vec<usize> = [1, 2, 3, 5, 10]
        .into_iter()
        .filter(|m| *m <= scheme.r_n)
        .collect();
    let anticlustering = anticlustering_diagnostic(series, &scheme, &m_grid, 1.0)?;
    Ok(ClusterBattery {
        scheme,
        load,
        reports,
        anticlustering,
    })
}
