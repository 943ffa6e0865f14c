//! The extremal index formulas, `Q`/`Θ` identities, forward identities,
//! the `α = 1` log identities and cluster indices.
//!
//! Expectations under the law of `Q` are taken without rejection: for a draw
//! of `Θ`, `ϑ E[f(Q)] = E[w(Θ) f(Θ/Θ*)]` with `w(θ) = (1 - (θ*_{-∞,-1})^α)_+`,
//! the probability that `RΘ` has no exceedance before time 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{collect_lanes, run_lanes, Estimate, IdentityReport, Sampling};
use crate::functional::FunctionalSpec;
use crate::models::{Budget, Condition, SpectralModel};
use crate::seqspace::FiniteSeq;
use crate::stats::pareto;

pub use crate::estimate::PairCheck;

/// Probability that `RΘ` stays below 1 strictly before time 0.
pub fn q_weight(theta: &FiniteSeq, alpha: f64) -> f64 {
    (1.0 - theta.window_max(..=-1).powf(alpha)).max(0.0)
}

/// The six expressions of the candidate extremal index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThetaMethod {
    /// `P(Y*_{1,∞} ≤ 1)`.
    ForwardDef,
    /// `P(Y*_{-∞,-1} ≤ 1)`.
    BackwardDef,
    /// `P(I(Θ) = 0)`.
    InfargmaxProb,
    /// `E[(Θ*)^α / Σ|Θ_j|^α]`.
    RatioSupToAlphaSum,
    /// `E[(Θ*_{0,∞})^α - (Θ*_{1,∞})^α]`.
    ForwardDiff,
    /// `E[1 / Σ_j 1{|Y_j| > 1}]`.
    HarmonicCount,
}

impl ThetaMethod {
    pub const ALL: [ThetaMethod; 6] = [
        ThetaMethod::ForwardDef,
        ThetaMethod::BackwardDef,
        ThetaMethod::InfargmaxProb,
        ThetaMethod::RatioSupToAlphaSum,
        ThetaMethod::ForwardDiff,
        ThetaMethod::HarmonicCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThetaMethod::ForwardDef => "forward_def",
            ThetaMethod::BackwardDef => "backward_def",
            ThetaMethod::InfargmaxProb => "infargmax_prob",
            ThetaMethod::RatioSupToAlphaSum => "ratio_sup_alpha_sum",
            ThetaMethod::ForwardDiff => "forward_diff",
            ThetaMethod::HarmonicCount => "harmonic_count",
        }
    }

    /// Conditional expectation of the method's integrand given `Θ = θ`.
    ///
    /// The radial variable is integrated out in closed form, so the estimator
    /// is a function of the angular draw only.
    pub fn integrand(self, theta: &FiniteSeq, alpha: f64) -> f64 {
        let p = |x: f64| x.powf(alpha);
        match self {
            ThetaMethod::ForwardDef => (1.0 - p(theta.window_max(1..))).max(0.0),
            ThetaMethod::BackwardDef => q_weight(theta, alpha),
            ThetaMethod::InfargmaxProb => {
                if theta.infargmax().is_at(0) {
                    1.0
                } else {
                    0.0
                }
            }
            ThetaMethod::RatioSupToAlphaSum => p(theta.supnorm()) / theta.sum_abs_pow(alpha),
            ThetaMethod::ForwardDiff => p(theta.window_max(0..)) - p(theta.window_max(1..)),
            ThetaMethod::HarmonicCount => {
                // With a_1 ≥ a_2 ≥ … the moduli of θ, exactly m coordinates of rθ
                // exceed 1 for r ∈ (1/a_m, 1/a_{m+1}].
                let mut a: Vec<f64> = theta
                    .values()
                    .iter()
                    .map(|v| v.abs())
                    .filter(|v| *v > 0.0)
                    .collect();
                a.sort_by(|x, y| y.total_cmp(x));
                let c = |x: f64| p(x).min(1.0);
                let mut s = 0.0;
                for m in 0..a.len() {
                    let next = a.get(m + 1).copied().unwrap_or(0.0);
                    s += (c(a[m]) - c(next)) / (m + 1) as f64;
                }
                s
            }
        }
    }
}

/// Monte Carlo estimate of `ϑ` by one of the six formulas.
pub fn theta_candidate(model: &SpectralModel, method: ThetaMethod, s: &Sampling) -> Result<Estimate> {
    let alpha = model.alpha();
    let m = run_lanes(s, 1, |rng, out| {
        out[0] = method.integrand(&model.sample_spectral(rng), alpha);
        Ok(())
    })?;
    Ok(m.estimate(0, s.seed))
}

/// All six formulas on independent streams, compared pairwise and against the closed form.
pub fn extremal_index_report(model: &SpectralModel, s: &Sampling) -> Result<IdentityReport> {
    let mut sides = vec![];
    for (i, method) in ThetaMethod::ALL.iter().enumerate() {
        let e = theta_candidate(model, *method, &s.derive(100 + i as u64))?;
        sides.push((method.name().to_string(), e));
    }
    Ok(IdentityReport::independent(format!("extremal index {model}"), sides, s.tolerance)
        .with_exact("exact", model.exact_theta(), s.tolerance))
}

fn require_shift_invariant(h: &FunctionalSpec) -> Result<()> {
    h.check()?;
    if !h.shift_invariant() {
        return Err(Error::InvalidFunctional(format!("{h} is not shift invariant")));
    }
    Ok(())
}

/// `ϑ E[H(Q)] = E[H(Θ) 1{I(Θ) = 0}]`, plus `E[H(Θ) / ‖Θ‖_α^α]` when `H` is α-homogeneous.
pub fn check_q_theta_identity(
    h: &FunctionalSpec,
    model: &SpectralModel,
    s: &Sampling,
) -> Result<IdentityReport> {
    require_shift_invariant(h)?;
    let alpha = model.alpha();
    let third = h.homogeneity().is_some_and(|b| (b - alpha).abs() < 1e-12);
    let dim = if third { 3 } else { 2 };
    let m = run_lanes(s, dim, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, alpha);
        out[0] = if w > 0.0 {
            w * h.eval(&theta.div(theta.supnorm()))
        } else {
            0.0
        };
        out[1] = if theta.infargmax().is_at(0) {
            h.eval(&theta)
        } else {
            0.0
        };
        if third {
            out[2] = h.eval(&theta) / theta.sum_abs_pow(alpha);
        }
        Ok(())
    })?;
    let labels = ["theta*E[H(Q)]", "E[H(Theta)1{I=0}]", "E[H(Theta)/|Theta|_a^a]"];
    Ok(IdentityReport::paired(
        format!("Q-Theta {h} {model}"),
        &labels[..dim],
        &m,
        s.seed,
        s.tolerance,
    ))
}

/// `ϑ Σ_j E|Q_j|^α = 1`, and `ϑ E[(Σ|Q_j|)^α] = E[(Σ|Θ_j|)^{α-1}]` when the right side has finite variance.
pub fn qsum_alpha_identity(model: &SpectralModel, s: &Sampling) -> Result<Vec<IdentityReport>> {
    let alpha = model.alpha();
    let m = run_lanes(s, 3, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, alpha);
        let star = theta.supnorm();
        let l1 = theta.sum_abs_pow(1.0);
        out[0] = if w > 0.0 {
            w * theta.sum_abs_pow(alpha) / star.powf(alpha)
        } else {
            0.0
        };
        out[1] = if w > 0.0 { w * (l1 / star).powf(alpha) } else { 0.0 };
        out[2] = l1.powf(alpha - 1.0);
        Ok(())
    })?;
    let sum_q = IdentityReport::paired(
        format!("sum Q^alpha {model}"),
        &["theta*sum E|Q_j|^a"],
        &m,
        s.seed,
        s.tolerance,
    )
    .with_exact("one", 1.0, s.tolerance);
    let mut out = vec![sum_q];
    if equivalence3_has_finite_variance(model) {
        out.push(IdentityReport::paired_columns(
            format!("l1 Q^alpha {model}"),
            &[("theta*E[|Q|_1^a]", 1), ("E[|Theta|_1^(a-1)]", 2)],
            &m,
            s.seed,
            s.tolerance,
        ));
    }
    Ok(out)
}

// (Σ|Θ_j|)^{α-1} is bounded for finitely enumerable laws; under the geometric
// law it has tail index α/(α-1), so its variance is finite only for α < 2.
fn equivalence3_has_finite_variance(model: &SpectralModel) -> bool {
    model.enumerate().is_some() || model.alpha() < 2.0
}

/// `ϑ E[H(Q)] = E[H(Θ_{0,∞}) - H(Θ_{1,∞})]` for shift invariant α-homogeneous `H`.
pub fn check_forward_identity(
    h: &FunctionalSpec,
    model: &SpectralModel,
    s: &Sampling,
) -> Result<IdentityReport> {
    require_shift_invariant(h)?;
    let alpha = model.alpha();
    if !h.homogeneity().is_some_and(|b| (b - alpha).abs() < 1e-12) {
        return Err(Error::InvalidFunctional(format!(
            "{h} is not {alpha}-homogeneous"
        )));
    }
    let m = run_lanes(s, 2, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, alpha);
        out[0] = if w > 0.0 {
            w * h.eval(&theta.div(theta.supnorm()))
        } else {
            0.0
        };
        out[1] = h.eval(&theta.window(0..)) - h.eval(&theta.window(1..));
        Ok(())
    })?;
    Ok(IdentityReport::paired(
        format!("forward {h} {model}"),
        &["theta*E[H(Q)]", "E[H(Theta_0..)-H(Theta_1..)]"],
        &m,
        s.seed,
        s.tolerance,
    ))
}

/// Shift invariant α-homogeneous functionals used by the `Q`/`Θ` and forward batteries.
pub fn homogeneous_battery(alpha: f64) -> Vec<FunctionalSpec> {
    vec![
        FunctionalSpec::SupPow(alpha),
        FunctionalSpec::SumAbsPow { p: 1.0, power: alpha },
        FunctionalSpec::PosPartSumPow(alpha),
        FunctionalSpec::RunningMaxSumPow(alpha),
    ]
}

/// `x log x` with `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// The two `α = 1` log identities for nonnegative models.
///
/// First: `ϑ Σ_j E[Q_j log(‖Q‖₁/Q_j)] = E[Σ_j Θ_j log(‖Θ‖₁/Θ_j) 1{I(Θ) = 0}] = E[log ‖Θ‖₁]`.
/// Second: `ϑ (E[S_Q log S_Q] - Σ_j E[Q_j log Q_j]) = E[S_0 log S_0 - S_1 log S_1]`
/// with `S_i = Σ_{j ≥ i} Θ_j`.
pub fn log_identities_alpha1(model: &SpectralModel, s: &Sampling) -> Result<Vec<IdentityReport>> {
    if model.alpha() != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "log identities need alpha = 1, got {}",
            model.alpha()
        )));
    }
    if !model.nonnegative() {
        return Err(Error::InvalidModel(format!("{model} is not nonnegative")));
    }
    let entropy = |x: &FiniteSeq| -> f64 {
        let l1 = x.sum_abs_pow(1.0);
        x.values()
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| v.abs() * (l1 / v.abs()).ln())
            .sum()
    };
    let m = run_lanes(s, 5, |rng, out| {
        let theta = model.sample_spectral(rng);
        let w = q_weight(&theta, 1.0);
        let q = theta.div(theta.supnorm());
        out[0] = if w > 0.0 { w * entropy(&q) } else { 0.0 };
        out[1] = if theta.infargmax().is_at(0) {
            entropy(&theta)
        } else {
            0.0
        };
        out[2] = theta.sum_abs_pow(1.0).ln();
        out[3] = if w > 0.0 {
            w * (xlogx(q.sum()) - q.values().iter().map(|v| xlogx(*v)).sum::<f64>())
        } else {
            0.0
        };
        out[4] = xlogx(theta.window(0..).sum()) - xlogx(theta.window(1..).sum());
        Ok(())
    })?;
    let first = IdentityReport::paired(
        format!("log l1 {model}"),
        &["theta*sum E[Q log(|Q|_1/Q)]", "E[sum Theta log(|Theta|_1/Theta) 1{I=0}]", "E[log |Theta|_1]"],
        &m,
        s.seed,
        s.tolerance,
    );
    let second = IdentityReport::paired_columns(
        format!("slogs {model}"),
        &[
            ("theta*E[S_Q log S_Q - sum Q log Q]", 3),
            ("E[S_0 log S_0 - S_1 log S_1]", 4),
        ],
        &m,
        s.seed,
        s.tolerance,
    );
    Ok(vec![first, second])
}

/// Outcome of the deterministic slog bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlogBoundReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest observed `|g(S(x)) - g(S(y))| / (2 + log₊(‖x‖₁ ∨ ‖y‖₁))`.
    pub max_ratio: f64,
}

/// Checks `|S(x) log|S(x)| - S(y) log|S(y)|| ≤ 2 + log₊(‖x‖₁ ∨ ‖y‖₁)` on random
/// pairs with `|S(x) - S(y)| ≤ 1`.
pub fn slog_bound_check<R: Rng + ?Sized>(pairs: usize, rng: &mut R) -> SlogBoundReport {
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for i in 0..pairs {
        let len = rng.random_range(1..8);
        // Mix small, moderate and heavy-tailed magnitudes.
        let scale = [1e-3, 0.3, 1.0, 50.0][i % 4];
        let x: Vec<f64> = (0..len)
            .map(|_| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * scale * pareto(rng, 0.8)
            })
            .collect();
        let x = FiniteSeq::new(0, x);
        let mut y: Vec<f64> = x.values().to_vec();
        let target = rng.random_range(-1.0..=1.0);
        let k = rng.random_range(0..len);
        y[k] += target;
        // Redistribute part of the mass without changing the sum.
        if len > 1 {
            let j = (k + 1) % len;
            let d = rng.random_range(-scale..scale);
            y[k] += d;
            y[j] -= d;
        }
        let y = FiniteSeq::new(0, y);
        let (sx, sy) = (x.sum(), y.sum());
        if (sx - sy).abs() > 1.0 {
            continue;
        }
        let lhs = (xlogx(sx) - xlogx(sy)).abs();
        let rhs = 2.0 + x.sum_abs_pow(1.0).max(y.sum_abs_pow(1.0)).ln().max(0.0);
        max_ratio = max_ratio.max(lhs / rhs);
        if lhs > rhs {
            violations += 1;
        }
    }
    SlogBoundReport {
        pairs,
        violations,
        max_ratio,
    }
}

/// One point of the cluster index sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterIndexPoint {
    pub k: usize,
    pub b_k: Estimate,
    /// `b_k - b_{k-1}`.
    pub diff: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterIndexReport {
    pub points: Vec<ClusterIndexPoint>,
    /// `ϑ E[H_+^α(Q)]`.
    pub limit: Estimate,
    /// The last increment compared with the limit, paired.
    pub slope: IdentityReport,
}

/// `b_k(H)` for `k = 1..=k_max` by accumulating the increments
/// `E[H_+^α(Θ_{0,k}) - H_+^α(Θ_{1,k})]`, and the limit `ϑ E[H_+^α(Q)]`.
pub fn cluster_index(
    h: &FunctionalSpec,
    model: &SpectralModel,
    k_max: usize,
    s: &Sampling,
) -> Result<ClusterIndexReport> {
    require_shift_invariant(h)?;
    if h.homogeneity() != Some(1.0) {
        return Err(Error::InvalidFunctional(format!("{h} is not 1-homogeneous")));
    }
    if h.lipschitz_l1().is_none() {
        return Err(Error::InvalidFunctional(format!(
            "{h} has no declared l1 Lipschitz bound"
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    let alpha = model.alpha();
    let hp = |x: &FiniteSeq| h.eval(x).max(0.0).powf(alpha);
    let m = run_lanes(s, k_max + 1, |rng, out| {
        let theta = model.sample_spectral(rng);
        for i in 0..k_max {
            let i = i as i64;
            out[i as usize] = hp(&theta.window(0..=i)) - hp(&theta.window(1..=i));
        }
        let w = q_weight(&theta, alpha);
        out[k_max] = if w > 0.0 {
            w * hp(&theta.div(theta.supnorm()))
        } else {
            0.0
        };
        Ok(())
    })?;
    let n = m.count();
    let mut points = vec![];
    let mut acc = 0.0;
    for k in 1..=k_max {
        acc += m.mean(k - 1);
        let terms: Vec<(usize, f64)> = (0..k).map(|i| (i, 1.0)).collect();
        points.push(ClusterIndexPoint {
            k,
            b_k: Estimate {
                value: acc,
                stderr: m.stderr_of_combination(&terms),
                n_samples: n,
                seed: s.seed,
            },
            diff: m.estimate(k - 1, s.seed),
        });
    }
    // Compare the last increment with the limit on shared draws.
    let last = format!("b_{k_max} - b_{}", k_max - 1);
    let slope = IdentityReport::paired_columns(
        format!("cluster index {h} {model}"),
        &[(last.as_str(), k_max - 1), ("theta*E[H+^a(Q)]", k_max)],
        &m,
        s.seed,
        s.tolerance,
    );
    Ok(ClusterIndexReport {
        points,
        limit: m.estimate(k_max, s.seed),
        slope,
    })
}

/// Draws of `Y*` conditioned on `Y*_{-∞,-1} ≤ 1`; these are Pareto(α).
pub fn conditioned_ystar_sample(model: &SpectralModel, s: &Sampling) -> Result<Vec<f64>> {
    let alpha = model.alpha();
    collect_lanes(s, |rng| {
        let mut budget = Budget::default();
        loop {
            let theta = model.sample_spectral(rng);
            let y = theta.scale(pareto(rng, alpha));
            budget.attempts += 1;
            if y.window_max(..=-1) <= 1.0 {
                return Ok(y.supnorm());
            }
            if budget.attempts >= budget.limit {
                return Err(Error::RejectionBudget {
                    attempts: budget.attempts,
                    accepted: 0,
                    rate: 0.0,
                });
            }
        }
    })
}

/// Draws of `Q` by rejection, for cross-checking the weighted estimators.
pub fn sample_q(model: &SpectralModel, s: &Sampling) -> Result<Vec<FiniteSeq>> {
    collect_lanes(s, |rng| {
        model.sample_conditioned(Condition::NoBackwardExceedance, rng, &mut Budget::default())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrands_on_fixed_paths() {
        let a = 1.5;
        let th = FiniteSeq::new(0, vec![1.0, 0.5]);
        for m in ThetaMethod::ALL {
            let v = m.integrand(&th, a);
            let expect = match m {
                ThetaMethod::ForwardDef => 1.0 - 0.5f64.powf(a),
                ThetaMethod::BackwardDef | ThetaMethod::InfargmaxProb => 1.0,
                ThetaMethod::RatioSupToAlphaSum => 1.0 / (1.0 + 0.5f64.powf(a)),
                ThetaMethod::ForwardDiff => 1.0 - 0.5f64.powf(a),
                // r ∈ (1, 2]: one exceedance, r > 2: two.
                ThetaMethod::HarmonicCount => (1.0 - 0.5f64.powf(a)) + 0.5f64.powf(a) / 2.0,
            };
            assert!((v - expect).abs() < 1e-14, "{m:?}: {v} vs {expect}");
        }
    }

    #[test]
    fn slog_bound_holds() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let r = slog_bound_check(20_000, &mut rng);
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.max_ratio > 0.1);
    }

    #[test]
    fn xlogx_convention() {
        assert_eq!(xlogx(0.0), 0.0);
        assert_eq!(xlogx(1.0), 0.0);
        assert!((xlogx(-2.0) + 2.0 * 2f64.ln()).abs() < 1e-15);
    }
}
