//! Tail measure engine: radial integrals, the tail process, the time change
//! formula and the infargmax and `Q` representations of `ν`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{run_lanes, Estimate, IdentityReport, Sampling};
use crate::functional::FunctionalSpec;
use crate::models::SpectralModel;
use crate::seqspace::FiniteSeq;
use crate::stats::pareto;

/// `Y = R Θ` with `R` Pareto(α) independent of `Θ`.
pub fn sample_tail_process<R: Rng + ?Sized>(model: &SpectralModel, rng: &mut R) -> FiniteSeq {
    let theta = model.sample_spectral(rng);
    theta.scale(pareto(rng, model.alpha()))
}

/// `∫_{r0}^∞ H(r θ) α r^{-α-1} dr` for one angular path `θ`.
///
/// Threshold kinds and homogeneous kinds are integrated in closed form. Other
/// kinds with a support floor use one Pareto importance draw above the floor,
/// which is exact in expectation.
pub fn radial_given_angle<R: Rng + ?Sized>(
    h: &FunctionalSpec,
    theta: &FiniteSeq,
    r0: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<f64> {
    use FunctionalSpec::*;
    let tail = |level: f64, g: f64| -> f64 {
        if g <= 0.0 {
            0.0
        } else {
            r0.max(level / g).powf(-alpha)
        }
    };
    let v = match h {
        ThresholdIndicator { coords, level } => {
            let g = match coords {
                None => theta.supnorm(),
                Some(c) => c.iter().fold(0.0_f64, |m, &j| m.max(theta.get(j).abs())),
            };
            tail(*level, g)
        }
        CountExceed(level) => theta
            .values()
            .iter()
            .map(|v| tail(*level, v.abs()))
            .sum(),
        AtLeastExceed { level, count } => {
            let mut a: Vec<f64> = theta.values().iter().map(|v| v.abs()).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            tail(*level, a.get(count - 1).copied().unwrap_or(0.0))
        }
        ClusterProbe { level, probe } => {
            let m = theta.supnorm();
            if m == 0.0 {
                0.0
            } else {
                let p = probe.eval(&theta.div(m));
                if p == 0.0 {
                    0.0
                } else {
                    p * tail(*level, m)
                }
            }
        }
        Shifted { inner, k } => radial_given_angle(inner, &theta.shift(*k), r0, alpha, rng)?,
        Anchored(inner) => match theta.infargmax().index() {
            Some(j) => radial_given_angle(inner, &theta.shift(-j), r0, alpha, rng)?,
            None => 0.0,
        },
        Scaled { inner, c } => c.powf(alpha) * radial_given_angle(inner, theta, c * r0, alpha, rng)?,
        _ => {
            if let Some(beta) = h.homogeneity() {
                let hv = h.eval(theta);
                if hv == 0.0 {
                    0.0
                } else if beta >= alpha {
                    return Err(Error::DivergentIntegral(format!(
                        "{h} has degree {beta} ≥ α = {alpha}"
                    )));
                } else if r0 <= 0.0 {
                    return Err(Error::DivergentIntegral(format!(
                        "{h} is homogeneous and nonzero near the origin"
                    )));
                } else {
                    hv * alpha / (alpha - beta) * r0.powf(beta - alpha)
                }
            } else if let Some(eps) = h.support_floor() {
                let m = theta.supnorm();
                if m == 0.0 {
                    0.0
                } else {
                    let r1 = r0.max(eps / m);
                    let r = r1 * pareto(rng, alpha);
                    r1.powf(-alpha) * h.eval(&theta.scale(r))
                }
            } else {
                return Err(Error::DivergentIntegral(format!(
                    "{h} has neither a homogeneity degree nor a support floor"
                )));
            }
        }
    };
    if v.is_nan() {
        return Err(Error::NanValue(format!("radial integral of {h}")));
    }
    Ok(v)
}

/// `E ∫_0^∞ H(rΘ) α r^{-α-1} dr`, i.e. `ν(H 1{y_0 ≠ 0})`.
pub fn radial_integral(h: &FunctionalSpec, model: &SpectralModel, s: &Sampling) -> Result<Estimate> {
    h.check()?;
    let alpha = model.alpha();
    let m = run_lanes(s, 1, |rng, out| {
        let theta = model.sample_spectral(rng);
        out[0] = radial_given_angle(h, &theta, 0.0, alpha, rng)?;
        Ok(())
    })?;
    Ok(m.estimate(0, s.seed))
}

/// Outcome of one time change comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeReport {
    pub label: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub sigmas: f64,
    /// Angular form, present for degree-0 functionals; compared with the
    /// `Y` form at a vanishing threshold.
    pub angular: Option<IdentityReport>,
    pub pass: bool,
}

/// Threshold used to compare the `Y` form with the angular form.
const ANGULAR_T: f64 = 1e-6;

/// Compares `E[H(B^k Y) 1{|Y_{-k}| > t}]` with `t^{-α} E[H(tY) 1{|Y_k| > 1/t}]`
/// on shared draws of `Θ`.
pub fn check_time_change(
    model: &SpectralModel,
    h: &FunctionalSpec,
    k: i64,
    t: f64,
    s: &Sampling,
) -> Result<TimeChangeReport> {
    h.check()?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let alpha = model.alpha();
    let degree0 = h.homogeneity() == Some(0.0);
    let hk = h.clone().shifted(k);
    let dim = if degree0 { 6 } else { 2 };
    let y_form = |theta: &FiniteSeq, t: f64, rng: &mut crate::estimate::LaneRng| -> Result<(f64, f64)> {
        let back = theta.get(-k).abs();
        let lhs = if back > 0.0 {
            radial_given_angle(&hk, theta, (t / back).max(1.0), alpha, rng)?
        } else {
            0.0
        };
        let fwd = theta.get(k).abs();
        let rhs = if fwd > 0.0 {
            let r0 = (1.0 / (t * fwd)).max(1.0);
            let ht = h.clone().scaled(t);
            t.powf(-alpha) * radial_given_angle(&ht, theta, r0, alpha, rng)?
        } else {
            0.0
        };
        Ok((lhs, rhs))
    };
    let m = run_lanes(s, dim, |rng, out| {
        let theta = model.sample_spectral(rng);
        let (l, r) = y_form(&theta, t, rng)?;
        out[0] = l;
        out[1] = r;
        if degree0 {
            let back = theta.get(-k).abs();
            let fwd = theta.get(k).abs();
            out[2] = if back > 0.0 { hk.eval(&theta) } else { 0.0 };
            out[3] = if fwd > 0.0 {
                h.eval(&theta.div(fwd)) * fwd.powf(alpha)
            } else {
                0.0
            };
            let (l0, r0) = y_form(&theta, ANGULAR_T, rng)?;
            out[4] = l0;
            out[5] = r0;
        }
        Ok(())
    })?;
    let label = format!("{h} k={k} t={t}");
    let lhs = m.estimate(0, s.seed);
    let rhs = m.estimate(1, s.seed);
    let sigmas = crate::estimate::sigmas(
        lhs.value - rhs.value,
        m.diff_stderr(0, 1),
        lhs.value.abs().max(rhs.value.abs()),
    );
    let mut pass = sigmas <= s.tolerance;
    let angular = degree0.then(|| {
        let r = IdentityReport::paired(
            format!("angular {label}"),
            &["y_lhs", "y_rhs", "theta_lhs", "theta_rhs", "y_lhs_small_t", "y_rhs_small_t"],
            &m,
            s.seed,
            s.tolerance,
        );
        // Only the angular pair and its small-t counterparts are identities here.
        let keep = |a: usize, b: usize| matches!((a, b), (2, 3) | (2, 4) | (3, 5) | (4, 5));
        let pairs: Vec<_> = r.pairs.iter().filter(|p| keep(p.a, p.b)).cloned().collect();
        let max = pairs.iter().map(|p| p.sigmas).fold(0.0, f64::max);
        IdentityReport {
            pass: pairs.iter().all(|p| p.pass),
            max_discrepancy_sigmas: max,
            pairs,
            ..r
        }
    });
    if let Some(a) = &angular {
        pass &= a.pass;
    }
    Ok(TimeChangeReport {
        label,
        lhs,
        rhs,
        sigmas,
        angular,
        pass,
    })
}

/// The functionals used by [`time_change_battery`] for a given tail index.
///
/// `Sup` has infinite mean under the tail process when `α ≤ 1`, so it is
/// replaced by `(x*)^{α/2}` there.
pub fn time_change_functionals(alpha: f64) -> Vec<FunctionalSpec> {
    let sup = if alpha > 1.0 {
        FunctionalSpec::Sup
    } else {
        FunctionalSpec::SupPow(alpha / 2.0)
    };
    vec![FunctionalSpec::One, sup, FunctionalSpec::CountExceed(1.0)]
}

/// Every `(H, k, t)` with `H` from [`time_change_functionals`], `k ∈ -2..=2`, `t ∈ {0.5, 1, 2}`.
pub fn time_change_battery(model: &SpectralModel, s: &Sampling) -> Result<Vec<TimeChangeReport>> {
    let mut out = vec![];
    let mut tag = 0;
    for h in time_change_functionals(model.alpha()) {
        for k in -2..=2 {
            for t in [0.5, 1.0, 2.0] {
                tag += 1;
                out.push(check_time_change(model, &h, k, t, &s.derive(tag))?);
            }
        }
    }
    Ok(out)
}

/// How the shift sum of `ν(H)` is anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    /// `Σ_j ∫ E[H(r B^j Θ) 1{I(Θ) = 0}] α r^{-α-1} dr`.
    InfargmaxAnchored,
    /// `ϑ Σ_j ∫ E[H(r B^j Q)] α r^{-α-1} dr`.
    QAnchored,
}

/// `ν(H)` for a functional with a finite footprint.
///
/// Both anchors are sampled without rejection: the infargmax form keeps
/// `1{I(Θ) = 0}` as a factor, and the `Q` form weights `Θ/Θ*` by
/// `P(R Θ*_{-∞,-1} ≤ 1) = (1 - (Θ*_{-∞,-1})^α)_+`, which equals `ϑ` times the
/// law of `Q`.
pub fn tail_measure_eval(
    h: &FunctionalSpec,
    model: &SpectralModel,
    anchor: Anchor,
    s: &Sampling,
) -> Result<Estimate> {
    h.check()?;
    if h.shift_invariant() {
        return Err(Error::NonConvergentSum(format!(
            "{h} is shift invariant, so every shift contributes the same mass; \
             use the cluster measure instead"
        )));
    }
    let (a, b) = h.footprint().ok_or_else(|| {
        Error::Unsupported(format!("{h} has no finite footprint for the shift sum"))
    })?;
    let alpha = model.alpha();
    let m = run_lanes(s, 1, |rng, out| {
        let theta = model.sample_spectral(rng);
        let (path, weight) = match anchor {
            Anchor::InfargmaxAnchored => {
                let w = if theta.infargmax().is_at(0) { 1.0 } else { 0.0 };
                (theta, w)
            }
            Anchor::QAnchored => {
                let back = theta.window_max(..=-1);
                let w = (1.0 - back.powf(alpha)).max(0.0);
                let m = theta.supnorm();
                (theta.div(m), w)
            }
        };
        out[0] = 0.0;
        if weight == 0.0 {
            return Ok(());
        }
        let Some((lo, hi)) = path.support() else {
            return Ok(());
        };
        let mut total = 0.0;
        for j in (a - hi)..=(b - lo) {
            total += radial_given_angle(h, &path.shift(j), 0.0, alpha, rng)?;
        }
        out[0] = weight * total;
        Ok(())
    })?;
    Ok(m.estimate(0, s.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_radials() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let th = FiniteSeq::new(0, vec![1.0, 0.5]);
        let r = |h: &FunctionalSpec, r0: f64, rng: &mut ChaCha8Rng| {
            radial_given_angle(h, &th, r0, 1.5, rng).unwrap()
        };
        assert!((r(&FunctionalSpec::exceeds_at(0, 2.0), 0.0, &mut rng) - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!((r(&FunctionalSpec::exceeds_at(1, 1.0), 0.0, &mut rng) - 0.5f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(r(&FunctionalSpec::One, 2.0, &mut rng), 2f64.powf(-1.5));
        // ∫_1^∞ r·1 · 1.5 r^{-2.5} dr = 3.
        assert!((r(&FunctionalSpec::Sup, 1.0, &mut rng) - 3.0).abs() < 1e-12);
        assert!(radial_given_angle(&FunctionalSpec::Sup, &th, 1.0, 1.0, &mut rng).is_err());
        assert!(radial_given_angle(&FunctionalSpec::One, &th, 0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn scaled_and_shifted_radials() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let th = FiniteSeq::new(-1, vec![0.3, 1.0, 0.5]);
        let h = FunctionalSpec::CountExceed(1.0);
        for (c, k, r0) in [(2.0, 1, 1.0f64), (0.5, -1, 0.7), (3.0, 0, 0.0)] {
            let comp = h.clone().shifted(k).scaled(c);
            let direct: f64 = th
                .shift(k)
                .values()
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| r0.max(1.0 / (c * v.abs())).powf(-1.2))
                .sum();
            let got = radial_given_angle(&comp, &th, r0, 1.2, &mut rng).unwrap();
            assert!((got - direct).abs() < 1e-12, "{c} {k} {r0}: {got} vs {direct}");
        }
    }

    #[test]
    fn importance_radial_is_unbiased() {
        // A table functional on the spike: H(x) = 1 iff x ~ spike of height within 0.5 of 2,
        // i.e. r ∈ [1.5, 2.5]; integral = 1.5^{-α} - 2.5^{-α}.
        let h = FunctionalSpec::TableLookup {
            entries: vec![(FiniteSeq::spike(0, 2.0), 1.0)],
            tolerance: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let th = FiniteSeq::spike(0, 1.0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| radial_given_angle(&h, &th, 0.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let exact = 1.0 / 1.5 - 1.0 / 2.5;
        assert!((mean - exact).abs() < 0.01, "{mean} vs {exact}");
    }
}
