//! Spectral tail process laws, stationary series simulators and the
//! empirical tail process.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Sampling;
use crate::seqspace::FiniteSeq;
use crate::stats::{open_uniform, pareto};

/// Forward geometric paths are cut once `ρ^j` drops below this.
pub const GEOMETRIC_CUTOFF: f64 = 1e-12;

/// Default rejection budget per conditioned draw.
pub const REJECTION_BUDGET: u64 = 10_000_000;

/// Law of the spectral tail process `Θ`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralLaw {
    /// `Θ = s·e_0` with `P(s = 1) = skew`.
    Iid { skew: f64 },
    /// A fixed path with `|θ_0| = 1`.
    Deterministic { path: FiniteSeq },
    /// One-big-jump law of `X_t = Σ_k c_k Z_{t-k}`.
    MovingAverage { coeffs: FiniteSeq, skew: f64 },
    /// `Θ_j = ρ^j` for `j ≥ -N`, zero before, with `P(N ≥ m) = ρ^{mα}`.
    Geometric { rho: f64 },
    /// Finitely many weighted paths; weights are normalised to sum to 1.
    Empirical { paths: Vec<(FiniteSeq, f64)> },
}

/// A spectral tail process law together with its tail index.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel {
    alpha: f64,
    law: SpectralLaw,
}

/// Conditioning events for [`SpectralModel::sample_conditioned`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `I(Θ) = 0`; returns `Θ`.
    InfargmaxZero,
    /// `Y*_{-∞,-1} ≤ 1`; returns `Y / Y*`, a draw of `Q`.
    NoBackwardExceedance,
}

/// Attempt counter shared by a sequence of rejection draws.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub limit: u64,
    pub attempts: u64,
    pub accepted: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            attempts: 0,
            accepted: 0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(REJECTION_BUDGET)
    }
}

fn sign<R: Rng + ?Sized>(rng: &mut R, skew: f64) -> f64 {
    if skew >= 1.0 || rng.random::<f64>() < skew {
        1.0
    } else {
        -1.0
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidModel(msg.into()))
}

impl SpectralModel {
    pub fn new(alpha: f64, law: SpectralLaw) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return invalid(format!("alpha must be positive and finite, got {alpha}"));
        }
        let law = match law {
            SpectralLaw::Iid { skew } => {
                check_skew(skew)?;
                SpectralLaw::Iid { skew }
            }
            SpectralLaw::Deterministic { path } => {
                check_anchor(&path)?;
                SpectralLaw::Deterministic { path: path.trim() }
            }
            SpectralLaw::MovingAverage { coeffs, skew } => {
                check_skew(skew)?;
                if coeffs.values().iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
                    return invalid("moving average coefficients must be finite and nonnegative");
                }
                if coeffs.is_zero() {
                    return invalid("moving average coefficients are all zero");
                }
                SpectralLaw::MovingAverage {
                    coeffs: coeffs.trim(),
                    skew,
                }
            }
            SpectralLaw::Geometric { rho } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return invalid(format!("rho must lie in (0, 1), got {rho}"));
                }
                SpectralLaw::Geometric { rho }
            }
            SpectralLaw::Empirical { paths } => {
                if paths.is_empty() {
                    return invalid("empirical model needs at least one path");
                }
                let total: f64 = paths.iter().map(|p| p.1).sum();
                if paths.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
                    return invalid("empirical path weights must be positive");
                }
                for (p, _) in &paths {
                    check_anchor(p)?;
                }
                SpectralLaw::Empirical {
                    paths: paths.into_iter().map(|(p, w)| (p.trim(), w / total)).collect(),
                }
            }
        };
        Ok(Self { alpha, law })
    }

    pub fn iid(alpha: f64) -> Result<Self> {
        Self::new(alpha, SpectralLaw::Iid { skew: 1.0 })
    }

    pub fn geometric(rho: f64, alpha: f64) -> Result<Self> {
        Self::new(alpha, SpectralLaw::Geometric { rho })
    }

    /// Moving average with coefficients `c_0, c_1, …` and nonnegative innovations.
    pub fn moving_average(coeffs: &[f64], alpha: f64) -> Result<Self> {
        Self::new(
            alpha,
            SpectralLaw::MovingAverage {
                coeffs: FiniteSeq::new(0, coeffs.to_vec()),
                skew: 1.0,
            },
        )
    }

    pub fn deterministic(path: FiniteSeq, alpha: f64) -> Result<Self> {
        Self::new(alpha, SpectralLaw::Deterministic { path })
    }

    pub fn empirical(paths: Vec<(FiniteSeq, f64)>, alpha: f64) -> Result<Self> {
        Self::new(alpha, SpectralLaw::Empirical { paths })
    }

    /// Runs the time change battery and rejects models that fail it.
    pub fn validated(self, sampling: &Sampling) -> Result<Self> {
        let failures: Vec<String> = crate::tailkernel::time_change_battery(&self, sampling)?
            .into_iter()
            .filter(|r| !r.pass)
            .map(|r| r.label)
            .collect();
        if failures.is_empty() {
            Ok(self)
        } else {
            invalid(format!(
                "{self} violates the time change formula: {}",
                failures.join(", ")
            ))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn law(&self) -> &SpectralLaw {
        &self.law
    }

    pub fn name(&self) -> &'static str {
        match self.law {
            SpectralLaw::Iid { .. } => "iid",
            SpectralLaw::Deterministic { .. } => "deterministic",
            SpectralLaw::MovingAverage { .. } => "ma",
            SpectralLaw::Geometric { .. } => "geometric",
            SpectralLaw::Empirical { .. } => "empirical",
        }
    }

    /// Same law with a different tail index.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.law.clone())
    }

    /// `true` when every path of `Θ` is nonnegative.
    pub fn nonnegative(&self) -> bool {
        let nonneg = |p: &FiniteSeq| p.values().iter().all(|v| *v >= 0.0);
        match &self.law {
            SpectralLaw::Iid { skew } | SpectralLaw::MovingAverage { skew, .. } => *skew >= 1.0,
            SpectralLaw::Deterministic { path } => nonneg(path),
            SpectralLaw::Geometric { .. } => true,
            SpectralLaw::Empirical { paths } => paths.iter().all(|(p, _)| nonneg(p)),
        }
    }

    /// `true` for laws with a stationary series construction.
    pub fn has_series(&self) -> bool {
        matches!(
            self.law,
            SpectralLaw::Iid { .. } | SpectralLaw::MovingAverage { .. }
        )
    }

    /// One draw of `Θ`.
    pub fn sample_spectral<R: Rng + ?Sized>(&self, rng: &mut R) -> FiniteSeq {
        match &self.law {
            SpectralLaw::Iid { skew } => FiniteSeq::spike(0, sign(rng, *skew)),
            SpectralLaw::Deterministic { path } => path.clone(),
            SpectralLaw::MovingAverage { coeffs, skew } => {
                let weights: Vec<f64> = coeffs.values().iter().map(|c| c.powf(self.alpha)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                // Rounding can land on a zero coefficient; fall back to the last positive one.
                while weights[pick] == 0.0 {
                    pick -= 1;
                }
                let j = coeffs.start() + pick as i64;
                let s = sign(rng, *skew) / coeffs.get(j);
                FiniteSeq::new(coeffs.start() - j, coeffs.values().iter().map(|c| s * c).collect())
            }
            SpectralLaw::Geometric { rho } => {
                let n = geometric_depth(rng, *rho, self.alpha);
                geometric_path(*rho, n)
            }
            SpectralLaw::Empirical { paths } => {
                let mut u = rng.random::<f64>();
                for (p, w) in paths {
                    if u < *w {
                        return p.clone();
                    }
                    u -= w;
                }
                paths[paths.len() - 1].0.clone()
            }
        }
    }

    /// One draw of `Θ` conditioned on `cond`, by rejection.
    pub fn sample_conditioned<R: Rng + ?Sized>(
        &self,
        cond: Condition,
        rng: &mut R,
        budget: &mut Budget,
    ) -> Result<FiniteSeq> {
        loop {
            if budget.attempts >= budget.limit {
                return Err(Error::RejectionBudget {
                    attempts: budget.attempts,
                    accepted: budget.accepted,
                    rate: budget.acceptance_rate(),
                });
            }
            budget.attempts += 1;
            let theta = self.sample_spectral(rng);
            match cond {
                Condition::InfargmaxZero => {
                    if theta.infargmax().is_at(0) {
                        budget.accepted += 1;
                        return Ok(theta);
                    }
                }
                Condition::NoBackwardExceedance => {
                    let y = theta.scale(pareto(rng, self.alpha));
                    if y.window_max(..=-1) <= 1.0 {
                        budget.accepted += 1;
                        let m = y.supnorm();
                        return Ok(y.div(m));
                    }
                }
            }
        }
    }

    /// Finite enumeration of the law of `Θ`, when it has finite support.
    pub fn enumerate(&self) -> Option<Vec<(FiniteSeq, f64)>> {
        let signed = |p: FiniteSeq, w: f64, skew: f64| {
            let mut out = vec![];
            if skew > 0.0 {
                out.push((p.clone(), w * skew));
            }
            if skew < 1.0 {
                out.push((p.scale(-1.0), w * (1.0 - skew)));
            }
            out
        };
        match &self.law {
            SpectralLaw::Iid { skew } => Some(signed(FiniteSeq::spike(0, 1.0), 1.0, *skew)),
            SpectralLaw::Deterministic { path } => Some(vec![(path.clone(), 1.0)]),
            SpectralLaw::MovingAverage { coeffs, skew } => {
                let total = coeffs.sum_abs_pow(self.alpha);
                let mut out = vec![];
                for (j, c) in coeffs.iter().filter(|(_, c)| *c > 0.0) {
                    let p = FiniteSeq::new(
                        coeffs.start() - j,
                        coeffs.values().iter().map(|v| v / c).collect(),
                    );
                    out.extend(signed(p, c.powf(self.alpha) / total, *skew));
                }
                Some(out)
            }
            SpectralLaw::Geometric { .. } => None,
            SpectralLaw::Empirical { paths } => Some(paths.clone()),
        }
    }

    /// `Q` when its law is a point mass.
    ///
    /// Under `Y*_{-∞,-1} ≤ 1` a geometric path cannot have a backward step, so
    /// `Q = (1, ρ, ρ², …)`; a nonnegative IID law gives the unit spike.
    pub fn degenerate_q(&self) -> Option<FiniteSeq> {
        match &self.law {
            SpectralLaw::Iid { skew } if *skew >= 1.0 => Some(FiniteSeq::spike(0, 1.0)),
            SpectralLaw::Geometric { rho } => Some(geometric_path(*rho, 0)),
            _ => None,
        }
    }

    /// The candidate extremal index `ϑ = P(I(Θ) = 0)` in closed form.
    pub fn exact_theta(&self) -> f64 {
        match &self.law {
            SpectralLaw::Geometric { rho } => 1.0 - rho.powf(self.alpha),
            _ => self
                .enumerate()
                .unwrap_or_default()
                .iter()
                .filter(|(p, _)| p.infargmax().is_at(0))
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Number of lags beyond which `|Θ_j| ≤ eps` on every path, in both directions
    /// relative to the path maximum.
    pub fn decay_lags(&self, eps: f64) -> i64 {
        match &self.law {
            SpectralLaw::Iid { .. } => 0,
            SpectralLaw::Geometric { rho } => (eps.ln() / rho.ln()).ceil().max(0.0) as i64,
            SpectralLaw::Deterministic { path } => path.span() as i64,
            SpectralLaw::MovingAverage { coeffs, .. } => coeffs.span() as i64,
            SpectralLaw::Empirical { paths } => {
                paths.iter().map(|(p, _)| p.span() as i64).max().unwrap_or(0)
            }
        }
    }

    /// A stationary series whose tail process has this spectral law.
    pub fn simulate_series<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Result<Vec<f64>> {
        if length == 0 {
            return Err(Error::InvalidArgument("series length must be positive".into()));
        }
        match &self.law {
            SpectralLaw::Iid { skew } => Ok((0..length)
                .map(|_| sign(rng, *skew) * pareto(rng, self.alpha))
                .collect()),
            SpectralLaw::MovingAverage { coeffs, skew } => {
                // X_t = Σ_k c_k Z_{t-k}; Z is stored from index t_min - (end - 1).
                let (cs, ce) = (coeffs.start(), coeffs.end());
                let warm = (ce - cs) as usize;
                let z: Vec<f64> = (0..length + warm)
                    .map(|_| sign(rng, *skew) * pareto(rng, self.alpha))
                    .collect();
                let c = coeffs.values();
                Ok((0..length)
                    .map(|t| {
                        // Z_{t-k} sits at offset t + (ce - 1) - k.
                        c.iter()
                            .enumerate()
                            .map(|(i, ck)| ck * z[t + warm - 1 - i])
                            .sum()
                    })
                    .collect())
            }
            _ => Err(Error::Unsupported(format!(
                "{} model has no series construction",
                self.name()
            ))),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        let vals = |p: &FiniteSeq| p.values().to_vec();
        match &self.law {
            SpectralLaw::Iid { skew } => ModelSpec::Iid {
                alpha: self.alpha,
                skew: *skew,
            },
            SpectralLaw::Deterministic { path } => ModelSpec::Deterministic {
                alpha: self.alpha,
                start: path.start(),
                path: vals(path),
            },
            SpectralLaw::MovingAverage { coeffs, skew } => ModelSpec::Ma {
                alpha: self.alpha,
                start: coeffs.start(),
                coeffs: vals(coeffs),
                skew: *skew,
            },
            SpectralLaw::Geometric { rho } => ModelSpec::Geometric {
                alpha: self.alpha,
                rho: *rho,
            },
            SpectralLaw::Empirical { paths } => ModelSpec::Empirical {
                alpha: self.alpha,
                paths: paths
                    .iter()
                    .map(|(p, w)| EmpiricalPath {
                        start: p.start(),
                        values: vals(p),
                        weight: *w,
                    })
                    .collect(),
            },
        }
    }
}

/// Backward depth `N` with `P(N ≥ m) = ρ^{mα}`.
pub fn geometric_depth<R: Rng + ?Sized>(rng: &mut R, rho: f64, alpha: f64) -> u64 {
    (open_uniform(rng).ln() / (alpha * rho.ln())).floor() as u64
}

/// `Θ_j = ρ^j` for `-n ≤ j`, cut where `ρ^j < GEOMETRIC_CUTOFF`.
pub fn geometric_path(rho: f64, n: u64) -> FiniteSeq {
    let fwd = (GEOMETRIC_CUTOFF.ln() / rho.ln()).ceil() as i64;
    let start = -(n as i64);
    FiniteSeq::new(start, (start..=fwd).map(|j| rho.powi(j as i32)).collect())
}

fn check_skew(skew: f64) -> Result<()> {
    if (0.0..=1.0).contains(&skew) {
        Ok(())
    } else {
        invalid(format!("skew must lie in [0, 1], got {skew}"))
    }
}

fn check_anchor(path: &FiniteSeq) -> Result<()> {
    if (path.get(0).abs() - 1.0).abs() > 1e-12 {
        return invalid(format!("spectral path needs |θ_0| = 1, got {}", path.get(0)));
    }
    if path.values().iter().any(|v| !v.is_finite()) {
        return invalid("spectral path has non-finite values");
    }
    Ok(())
}

/// `u^{-1} X_{t-m..t+m}` over every `t` with `|X_t| > u` and a full window.
pub fn empirical_tail_process(series: &[f64], u: f64, m: usize) -> Result<Vec<FiniteSeq>> {
    const REQUIRED: usize = 200;
    if !(u > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {u}")));
    }
    let mut out = vec![];
    if series.len() > 2 * m {
        for t in m..series.len() - m {
            if series[t].abs() > u {
                let w = series[t - m..=t + m].iter().map(|x| x / u).collect();
                out.push(FiniteSeq::new(-(m as i64), w));
            }
        }
    }
    if out.len() < REQUIRED {
        return Err(Error::TooFewExceedances {
            found: out.len(),
            required: REQUIRED,
        });
    }
    Ok(out)
}

/// Serializable description of a model, also used for the `name:key=value` grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        alpha: f64,
        #[serde(default = "one")]
        skew: f64,
    },
    Ma {
        alpha: f64,
        coeffs: Vec<f64>,
        #[serde(default)]
        start: i64,
        #[serde(default = "one")]
        skew: f64,
    },
    Geometric {
        alpha: f64,
        rho: f64,
    },
    Deterministic {
        alpha: f64,
        path: Vec<f64>,
        #[serde(default)]
        start: i64,
    },
    Empirical {
        alpha: f64,
        paths: Vec<EmpiricalPath>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalPath {
    #[serde(default)]
    pub start: i64,
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Model names accepted by the grammar, with their keys.
pub const MODEL_CATALOG: &[(&str, &str, &str)] = &[
    ("iid", "alpha, skew=1", "i.i.d. Pareto innovations; Θ is a single spike"),
    (
        "ma",
        "alpha, coeffs=c0;c1;..., start=0, skew=1",
        "moving average of Pareto innovations",
    ),
    (
        "geometric",
        "alpha, rho",
        "Θ_j = ρ^j after a geometric backward depth (AR(1) type)",
    ),
    (
        "deterministic",
        "alpha, path=v;v;..., start=0",
        "fixed spectral path with |θ_0| = 1",
    ),
    (
        "empirical",
        "alpha, paths=start/v;v;...@weight|...",
        "finite weighted family of spectral paths",
    ),
];

/// Models the batteries run on. Each satisfies the time change formula.
pub fn builtin_models() -> Vec<SpectralModel> {
    [
        "iid:alpha=1.5",
        "ma:alpha=1.5,coeffs=1;0.5",
        "ma:alpha=1,coeffs=0.3;1;0.5,skew=0.7",
        "geometric:alpha=1,rho=0.5",
        "deterministic:alpha=1.2,path=1",
        "empirical:alpha=1.5,paths=0/1;0.5@1|-1/2;1@0.3535533905932738",
    ]
    .iter()
    .map(|m| m.parse().expect("built-in model"))
    .collect()
}

impl TryFrom<ModelSpec> for SpectralModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Iid { alpha, skew } => Self::new(alpha, SpectralLaw::Iid { skew }),
            ModelSpec::Ma {
                alpha,
                coeffs,
                start,
                skew,
            } => Self::new(
                alpha,
                SpectralLaw::MovingAverage {
                    coeffs: FiniteSeq::new(start, coeffs),
                    skew,
                },
            ),
            ModelSpec::Geometric { alpha, rho } => Self::geometric(rho, alpha),
            ModelSpec::Deterministic { alpha, path, start } => {
                Self::deterministic(FiniteSeq::new(start, path), alpha)
            }
            ModelSpec::Empirical { alpha, paths } => Self::empirical(
                paths
                    .into_iter()
                    .map(|p| (FiniteSeq::new(p.start, p.values), p.weight))
                    .collect(),
                alpha,
            ),
        }
    }
}

impl Serialize for SpectralModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = ModelSpec::deserialize(d)?;
        SpectralModel::try_from(spec).map_err(serde::de::Error::custom)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

impl fmt::Display for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spec() {
            ModelSpec::Iid { alpha, skew } => write!(f, "iid:alpha={alpha},skew={skew}"),
            ModelSpec::Ma {
                alpha,
                coeffs,
                start,
                skew,
            } => write!(
                f,
                "ma:alpha={alpha},coeffs={},start={start},skew={skew}",
                join(&coeffs)
            ),
            ModelSpec::Geometric { alpha, rho } => write!(f, "geometric:alpha={alpha},rho={rho}"),
            ModelSpec::Deterministic { alpha, path, start } => {
                write!(f, "deterministic:alpha={alpha},path={},start={start}", join(&path))
            }
            ModelSpec::Empirical { alpha, paths } => {
                let p: Vec<String> = paths
                    .iter()
                    .map(|p| format!("{}/{}@{}", p.start, join(&p.values), p.weight))
                    .collect();
                write!(f, "empirical:alpha={alpha},paths={}", p.join("|"))
            }
        }
    }
}

impl FromStr for SpectralModel {
    type Err = Error;

    /// Parses `name:key=value,...`, e.g. `geometric:rho=0.5,alpha=1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidModel(format!("expected key=value, got '{part}'")))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return invalid(format!("duplicate key '{}'", k.trim()));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        let num = |key: &str, v: Option<String>| -> Result<Option<f64>> {
            v.map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidModel(format!("{key}: not a number: '{v}'")))
            })
            .transpose()
        };
        let int = |key: &str, v: Option<String>| -> Result<i64> {
            v.map_or(Ok(0), |v| {
                v.parse::<i64>()
                    .map_err(|_| Error::InvalidModel(format!("{key}: not an integer: '{v}'")))
            })
        };
        let alpha = num("alpha", take("alpha"))?
            .ok_or_else(|| Error::InvalidModel(format!("{name}: missing alpha")))?;
        let spec = match name.to_ascii_lowercase().as_str() {
            "iid" => ModelSpec::Iid {
                alpha,
                skew: num("skew", take("skew"))?.unwrap_or(1.0),
            },
            "ma" | "moving-average" => ModelSpec::Ma {
                alpha,
                coeffs: parse_list(
                    "coeffs",
                    &take("coeffs").ok_or_else(|| Error::InvalidModel("ma: missing coeffs".into()))?,
                )?,
                start: int("start", take("start"))?,
                skew: num("skew", take("skew"))?.unwrap_or(1.0),
            },
            "geometric" => ModelSpec::Geometric {
                alpha,
                rho: num("rho", take("rho"))?
                    .ok_or_else(|| Error::InvalidModel("geometric: missing rho".into()))?,
            },
            "deterministic" => ModelSpec::Deterministic {
                alpha,
                path: parse_list(
                    "path",
                    &take("path")
                        .ok_or_else(|| Error::InvalidModel("deterministic: missing path".into()))?,
                )?,
                start: int("start", take("start"))?,
            },
            "empirical" => {
                let raw = take("paths")
                    .ok_or_else(|| Error::InvalidModel("empirical: missing paths".into()))?;
                let paths = raw
                    .split('|')
                    .map(parse_weighted_path)
                    .collect::<Result<Vec<_>>>()?;
                ModelSpec::Empirical { alpha, paths }
            }
            other => {
                let names: Vec<&str> = MODEL_CATALOG.iter().map(|m| m.0).collect();
                return invalid(format!(
                    "unknown model '{other}' (expected one of {})",
                    names.join(", ")
                ));
            }
        };
        if let Some(k) = kv.keys().next() {
            return invalid(format!("{name}: unknown key '{k}'"));
        }
        SpectralModel::try_from(spec)
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(';')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidModel(format!("{key}: not a number: '{x}'")))
        })
        .collect()
}

fn parse_weighted_path(p: &str) -> Result<EmpiricalPath> {
    let (body, weight) = match p.split_once('@') {
        Some((b, w)) => (
            b,
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidModel(format!("bad path weight '{w}'")))?,
        ),
        None => (p, 1.0),
    };
    let (start, values) = match body.split_once('/') {
        Some((s, v)) => (
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidModel(format!("bad path start '{s}'")))?,
            v,
        ),
        None => (0, body),
    };
    Ok(EmpiricalPath {
        start,
        values: parse_list("paths", values)?,
        weight,
    })
}
