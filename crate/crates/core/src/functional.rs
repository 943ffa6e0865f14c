//! Test functionals `H : ℓ0 → ℝ` with declared homogeneity and shift invariance.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqspace::{tilde_distance, FiniteSeq};

/// A declarative functional on finitely supported sequences.
///
/// Homogeneity degree, shift invariance and the `ℓ1`-Lipschitz constant are
/// derived from the structure; [`FunctionalSpec::validate`] spot-checks them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalSpec {
    /// `H ≡ 1`.
    One,
    /// `x*`.
    Sup,
    /// `(x*)^p`.
    SupPow(f64),
    /// `(Σ |x_j|^p)^{power/p}`, i.e. `‖x‖_p^power`.
    SumAbsPow { p: f64, power: f64 },
    /// `Σ x_j^{⟨a⟩}` with `x^{⟨a⟩} = sign(x)|x|^a`.
    SignedPowSum(f64),
    /// `(Σ x_j)_+^p`.
    PosPartSumPow(f64),
    /// `(sup_k Σ_{j ≤ k} x_j)_+^p`.
    RunningMaxSumPow(f64),
    /// `1{max_{j ∈ coords} |x_j| > level}`; `coords = None` means all of `ℤ`.
    ThresholdIndicator { coords: Option<Vec<i64>>, level: f64 },
    /// `|x_j|^p`.
    CoordAbsPow { j: i64, p: f64 },
    /// `Σ_j 1{|x_j| > level}`.
    CountExceed(f64),
    /// `1{#{j : |x_j| > level} ≥ count}`.
    AtLeastExceed { level: f64, count: usize },
    /// `1{x* > level} · probe(x / x*)`.
    ClusterProbe { level: f64, probe: Box<FunctionalSpec> },
    /// `inner(x / x*)`, zero at the zero sequence.
    Normalized(Box<FunctionalSpec>),
    /// `inner(B^{-I(x)} x)`: `inner` read with the first maximum moved to 0.
    Anchored(Box<FunctionalSpec>),
    /// Value of the first entry within `tolerance` of `x` in the shift-minimised metric, else 0.
    TableLookup {
        entries: Vec<(FiniteSeq, f64)>,
        tolerance: f64,
    },
    /// `inner(B^k x)`.
    Shifted { inner: Box<FunctionalSpec>, k: i64 },
    /// `inner(c x)`.
    Scaled { inner: Box<FunctionalSpec>, c: f64 },
}

impl FunctionalSpec {
    pub fn exceeds_sup(level: f64) -> Self {
        Self::ThresholdIndicator {
            coords: None,
            level,
        }
    }

    pub fn exceeds_at(j: i64, level: f64) -> Self {
        Self::ThresholdIndicator {
            coords: Some(vec![j]),
            level,
        }
    }

    pub fn shifted(self, k: i64) -> Self {
        Self::Shifted {
            inner: Box::new(self),
            k,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::Scaled {
            inner: Box::new(self),
            c,
        }
    }

    pub fn normalized(self) -> Self {
        Self::Normalized(Box::new(self))
    }

    pub fn anchored(self) -> Self {
        Self::Anchored(Box::new(self))
    }

    pub fn eval(&self, x: &FiniteSeq) -> f64 {
        use FunctionalSpec::*;
        match self {
            One => 1.0,
            Sup => x.supnorm(),
            SupPow(p) => pow0(x.supnorm(), *p),
            SumAbsPow { p, power } => pow0(x.sum_abs_pow(*p), power / p),
            SignedPowSum(a) => x
                .values()
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| v.signum() * v.abs().powf(*a))
                .sum(),
            PosPartSumPow(p) => pow0(x.sum().max(0.0), *p),
            RunningMaxSumPow(p) => {
                let mut acc = 0.0;
                let mut best: f64 = 0.0;
                for &v in x.values() {
                    acc += v;
                    best = best.max(acc);
                }
                pow0(best, *p)
            }
            ThresholdIndicator { coords, level } => {
                indicator(coord_max(x, coords.as_deref()) > *level)
            }
            CoordAbsPow { j, p } => pow0(x.get(*j).abs(), *p),
            CountExceed(level) => x.values().iter().filter(|v| v.abs() > *level).count() as f64,
            AtLeastExceed { level, count } => {
                indicator(x.values().iter().filter(|v| v.abs() > *level).count() >= *count)
            }
            ClusterProbe { level, probe } => {
                let m = x.supnorm();
                if m > *level {
                    probe.eval(&x.div(m))
                } else {
                    0.0
                }
            }
            Normalized(inner) => {
                let m = x.supnorm();
                if m > 0.0 {
                    inner.eval(&x.div(m))
                } else {
                    0.0
                }
            }
            Anchored(inner) => match x.infargmax().index() {
                Some(j) => inner.eval(&x.shift(-j)),
                None => inner.eval(x),
            },
            TableLookup { entries, tolerance } => entries
                .iter()
                .find(|(e, _)| tilde_distance(x, e) <= *tolerance)
                .map_or(0.0, |(_, v)| *v),
            Shifted { inner, k } => inner.eval(&x.shift(*k)),
            Scaled { inner, c } => inner.eval(&x.scale(*c)),
        }
    }

    /// Declared homogeneity degree `β` with `H(t x) = t^β H(x)` for `t > 0`.
    pub fn homogeneity(&self) -> Option<f64> {
        use FunctionalSpec::*;
        match self {
            One | Normalized(_) => Some(0.0),
            Sup => Some(1.0),
            SupPow(p) | PosPartSumPow(p) | RunningMaxSumPow(p) | SignedPowSum(p) => Some(*p),
            SumAbsPow { power, .. } => Some(*power),
            CoordAbsPow { p, .. } => Some(*p),
            ThresholdIndicator { .. }
            | CountExceed(_)
            | AtLeastExceed { .. }
            | ClusterProbe { .. }
            | TableLookup { .. } => None,
            Anchored(inner) | Shifted { inner, .. } | Scaled { inner, .. } => inner.homogeneity(),
        }
    }

    pub fn shift_invariant(&self) -> bool {
        use FunctionalSpec::*;
        match self {
            ThresholdIndicator { coords, .. } => coords.is_none(),
            CoordAbsPow { .. } => false,
            ClusterProbe { probe, .. } => probe.shift_invariant(),
            Anchored(_) => true,
            Normalized(inner) | Shifted { inner, .. } | Scaled { inner, .. } => {
                inner.shift_invariant()
            }
            _ => true,
        }
    }

    /// Constant `C` with `|H(x) - H(y)| ≤ C ‖x - y‖₁`, when known.
    pub fn lipschitz_l1(&self) -> Option<f64> {
        use FunctionalSpec::*;
        match self {
            Sup => Some(1.0),
            SumAbsPow { p, power } if *p == 1.0 && *power == 1.0 => Some(1.0),
            SignedPowSum(a) | PosPartSumPow(a) | RunningMaxSumPow(a) if *a == 1.0 => Some(1.0),
            Shifted { inner, .. } => inner.lipschitz_l1(),
            Scaled { inner, c } => inner.lipschitz_l1().map(|l| l * c.abs()),
            _ => None,
        }
    }

    /// A level `ε > 0` such that `H(x) = 0` whenever `x* ≤ ε`.
    pub fn support_floor(&self) -> Option<f64> {
        use FunctionalSpec::*;
        match self {
            ThresholdIndicator { level, .. }
            | CountExceed(level)
            | AtLeastExceed { level, .. }
            | ClusterProbe { level, .. } => (*level > 0.0).then_some(*level),
            TableLookup { entries, tolerance } => {
                let m = entries
                    .iter()
                    .map(|(e, _)| e.supnorm() - tolerance)
                    .fold(f64::INFINITY, f64::min);
                (m > 0.0 && m.is_finite()).then_some(m)
            }
            Anchored(inner) | Shifted { inner, .. } => inner.support_floor(),
            Scaled { inner, c } => inner.support_floor().map(|f| f / c.abs()),
            _ => None,
        }
    }

    /// Index range `[a, b]` such that `H(x)` depends only on `x_a, …, x_b`.
    pub fn footprint(&self) -> Option<(i64, i64)> {
        use FunctionalSpec::*;
        match self {
            One => Some((0, -1)),
            ThresholdIndicator {
                coords: Some(c), ..
            } => Some((*c.iter().min()?, *c.iter().max()?)),
            CoordAbsPow { j, .. } => Some((*j, *j)),
            Shifted { inner, k } => inner.footprint().map(|(a, b)| (a - k, b - k)),
            Scaled { inner, .. } => inner.footprint(),
            _ => None,
        }
    }

    /// `true` when `H ≥ 0` on all of `ℓ0`.
    pub fn nonnegative(&self) -> bool {
        use FunctionalSpec::*;
        match self {
            SignedPowSum(_) => false,
            ClusterProbe { probe, .. } => probe.nonnegative(),
            Normalized(inner) | Anchored(inner) | Shifted { inner, .. } | Scaled { inner, .. } => {
                inner.nonnegative()
            }
            TableLookup { entries, .. } => entries.iter().all(|(_, v)| *v >= 0.0),
            _ => true,
        }
    }

    /// Rejects malformed parameters.
    pub fn check(&self) -> Result<()> {
        use FunctionalSpec::*;
        let bad = |m: String| Err(Error::InvalidFunctional(m));
        match self {
            SupPow(p) | PosPartSumPow(p) | RunningMaxSumPow(p) | SignedPowSum(p)
                if !(*p > 0.0 && p.is_finite()) =>
            {
                bad(format!("power must be positive, got {p}"))
            }
            CoordAbsPow { p, .. } if !(*p > 0.0 && p.is_finite()) => {
                bad(format!("power must be positive, got {p}"))
            }
            SumAbsPow { p, power } if !(*p > 0.0 && *power > 0.0) => {
                bad(format!("p and power must be positive, got p={p} power={power}"))
            }
            ThresholdIndicator { level, coords } => {
                if !(*level >= 0.0) {
                    return bad(format!("level must be nonnegative, got {level}"));
                }
                if coords.as_ref().is_some_and(|c| c.is_empty()) {
                    return bad("empty coordinate set".into());
                }
                Ok(())
            }
            CountExceed(level) if !(*level > 0.0) => {
                bad(format!("level must be positive, got {level}"))
            }
            AtLeastExceed { level, count } if !(*level > 0.0) || *count == 0 => {
                bad(format!("need level > 0 and count ≥ 1, got {level}, {count}"))
            }
            ClusterProbe { level, probe } => {
                if !(*level > 0.0) {
                    return bad(format!("level must be positive, got {level}"));
                }
                probe.check()
            }
            TableLookup { tolerance, .. } if !(*tolerance >= 0.0) => {
                bad(format!("tolerance must be nonnegative, got {tolerance}"))
            }
            Normalized(inner) | Anchored(inner) | Shifted { inner, .. } => inner.check(),
            Scaled { inner, c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("scale must be positive, got {c}"));
                }
                inner.check()
            }
            _ => Ok(()),
        }
    }

    /// Spot-checks the declared homogeneity and shift invariance on random inputs.
    pub fn validate<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> Result<()> {
        self.check()?;
        for _ in 0..trials {
            let len = rng.random_range(1..6);
            let start = rng.random_range(-3..3);
            let x = FiniteSeq::new(
                start,
                (0..len).map(|_| rng.random_range(-3.0..3.0)).collect(),
            );
            let hx = self.eval(&x);
            if hx.is_nan() {
                return Err(Error::NanValue(format!("{self} at {x}")));
            }
            if let Some(beta) = self.homogeneity() {
                let t: f64 = rng.random_range(0.2..5.0);
                let lhs = self.eval(&x.scale(t));
                let rhs = t.powf(beta) * hx;
                if (lhs - rhs).abs() > 1e-9 * (1.0 + rhs.abs()) {
                    return Err(Error::InvalidFunctional(format!(
                        "{self} is not {beta}-homogeneous: H(tx)={lhs}, t^β H(x)={rhs}"
                    )));
                }
            }
            if self.shift_invariant() {
                let k = rng.random_range(-10..10);
                let hk = self.eval(&x.shift(k));
                if (hk - hx).abs() > 1e-9 * (1.0 + hx.abs()) {
                    return Err(Error::InvalidFunctional(format!(
                        "{self} is not shift invariant: H(B^k x)={hk}, H(x)={hx}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn pow0(base: f64, p: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        base.powf(p)
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn coord_max(x: &FiniteSeq, coords: Option<&[i64]>) -> f64 {
    match coords {
        None => x.supnorm(),
        Some(c) => c.iter().fold(0.0_f64, |m, &j| m.max(x.get(j).abs())),
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FunctionalSpec::*;
        match self {
            One => write!(f, "one"),
            Sup => write!(f, "sup"),
            SupPow(p) => write!(f, "sup^{p}"),
            SumAbsPow { p, power } => write!(f, "l{p}^{power}"),
            SignedPowSum(a) => write!(f, "signed_sum^{a}"),
            PosPartSumPow(p) => write!(f, "possum^{p}"),
            RunningMaxSumPow(p) => write!(f, "runmax^{p}"),
            ThresholdIndicator { coords: None, level } => write!(f, "1[sup>{level}]"),
            ThresholdIndicator {
                coords: Some(c),
                level,
            } => {
                let c: Vec<String> = c.iter().map(i64::to_string).collect();
                write!(f, "1[max|x_{{{}}}|>{level}]", c.join(";"))
            }
            CoordAbsPow { j, p } => write!(f, "|x_{j}|^{p}"),
            CountExceed(level) => write!(f, "count>{level}"),
            AtLeastExceed { level, count } => write!(f, "1[count>{level}>={count}]"),
            ClusterProbe { level, probe } => write!(f, "1[sup>{level}]*{probe}(x/sup)"),
            Normalized(inner) => write!(f, "{inner}(x/sup)"),
            Anchored(inner) => write!(f, "{inner}@argmax"),
            TableLookup { entries, tolerance } => {
                write!(f, "table[{}]@{tolerance}", entries.len())
            }
            Shifted { inner, k } => write!(f, "{inner}(B^{k})"),
            Scaled { inner, c } => write!(f, "{inner}({c}x)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(start: i64, v: &[f64]) -> FiniteSeq {
        FiniteSeq::new(start, v.to_vec())
    }

    #[test]
    fn basic_values() {
        let x = seq(-1, &[1.0, -3.0, 2.0]);
        assert_eq!(FunctionalSpec::Sup.eval(&x), 3.0);
        assert_eq!(FunctionalSpec::SignedPowSum(1.0).eval(&x), 0.0);
        assert_eq!(FunctionalSpec::PosPartSumPow(1.0).eval(&x), 0.0);
        assert_eq!(FunctionalSpec::RunningMaxSumPow(1.0).eval(&x), 1.0);
        assert_eq!(FunctionalSpec::CountExceed(1.5).eval(&x), 2.0);
        assert_eq!(FunctionalSpec::exceeds_at(1, 1.9).eval(&x), 1.0);
        assert_eq!(FunctionalSpec::exceeds_at(1, 1.9).eval(&x.shift(1)), 1.0);
        assert_eq!(FunctionalSpec::exceeds_at(1, 1.9).eval(&x.shift(2)), 0.0);
        let l2 = FunctionalSpec::SumAbsPow { p: 2.0, power: 2.0 };
        assert!((l2.eval(&x) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn declared_properties_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let battery = [
            FunctionalSpec::One,
            FunctionalSpec::Sup,
            FunctionalSpec::SupPow(1.5),
            FunctionalSpec::SumAbsPow { p: 1.0, power: 0.7 },
            FunctionalSpec::SignedPowSum(1.5),
            FunctionalSpec::PosPartSumPow(2.3),
            FunctionalSpec::RunningMaxSumPow(1.0),
            FunctionalSpec::exceeds_sup(1.0),
            FunctionalSpec::exceeds_at(0, 1.0),
            FunctionalSpec::CountExceed(1.0),
            FunctionalSpec::AtLeastExceed {
                level: 0.5,
                count: 2,
            },
            FunctionalSpec::CountExceed(0.4).normalized(),
            FunctionalSpec::Sup.shifted(3).scaled(2.0),
            FunctionalSpec::exceeds_at(1, 0.45).anchored(),
        ];
        for h in &battery {
            h.validate(&mut rng, 200).unwrap_or_else(|e| panic!("{h}: {e}"));
        }
    }

    #[test]
    fn malformed_parameters_rejected() {
        assert!(FunctionalSpec::SupPow(-1.0).check().is_err());
        assert!(FunctionalSpec::CountExceed(0.0).check().is_err());
        assert!(FunctionalSpec::Sup.scaled(0.0).check().is_err());
        let empty = FunctionalSpec::ThresholdIndicator {
            coords: Some(vec![]),
            level: 1.0,
        };
        assert!(empty.check().is_err());
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(FunctionalSpec::SignedPowSum(1.0).lipschitz_l1(), Some(1.0));
        assert_eq!(FunctionalSpec::SignedPowSum(1.5).lipschitz_l1(), None);
        assert_eq!(
            FunctionalSpec::RunningMaxSumPow(1.0).scaled(2.0).lipschitz_l1(),
            Some(2.0)
        );
    }

    #[test]
    fn footprint_follows_shifts() {
        let h = FunctionalSpec::exceeds_at(1, 1.0).shifted(2);
        assert_eq!(h.footprint(), Some((-1, -1)));
        assert_eq!(h.eval(&FiniteSeq::spike(-1, 2.0)), 1.0);
    }

    #[test]
    fn anchored_reads_relative_to_first_max() {
        let h = FunctionalSpec::exceeds_at(1, 0.45).anchored();
        assert_eq!(h.eval(&seq(7, &[0.2, 1.0, 0.5])), 1.0);
        assert_eq!(h.eval(&seq(7, &[0.5, 1.0, 0.2])), 0.0);
        // Ties go to the first maximum.
        assert_eq!(h.eval(&seq(0, &[1.0, 1.0])), 1.0);
        assert!(h.shift_invariant());
        assert_eq!(h.support_floor(), Some(0.45));
    }

    #[test]
    fn table_lookup_is_shift_invariant() {
        let h = FunctionalSpec::TableLookup {
            entries: vec![(seq(0, &[1.0, 0.5]), 7.0)],
            tolerance: 0.01,
        };
        assert_eq!(h.eval(&seq(5, &[1.0, 0.5])), 7.0);
        assert_eq!(h.eval(&seq(5, &[0.5, 1.0])), 0.0);
        assert_eq!(h.support_floor(), Some(0.99));
    }
}
