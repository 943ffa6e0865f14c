//! Small distribution helpers: Pareto and Fréchet draws, Kolmogorov–Smirnov.

use rand::Rng;

/// Uniform on `(0, 1]`.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Pareto draw with `P(R > y) = y^{-α}`, `y ≥ 1`.
pub fn pareto<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    open_uniform(rng).powf(-1.0 / alpha)
}

/// α-Fréchet draw, `P(ζ ≤ y) = exp(-y^{-α})`.
pub fn frechet<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    (-open_uniform(rng).ln()).powf(-1.0 / alpha)
}

pub fn pareto_cdf(y: f64, alpha: f64) -> f64 {
    if y <= 1.0 {
        0.0
    } else {
        1.0 - y.powf(-alpha)
    }
}

pub fn frechet_cdf(y: f64, alpha: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-y.powf(-alpha)).exp()
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let p_value = if n == 0 {
        1.0
    } else {
        kolmogorov_survival((nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d)
    };
    KsResult {
        statistic: d,
        p_value,
        n,
    }
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Empirical `q`-quantile (lower order statistic) of an unsorted sample.
pub fn quantile(sample: &[f64], q: f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let i = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1;
    xs[i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_known_values() {
        // Classical critical values: P(K > 1.358) ≈ 0.05, P(K > 1.949) ≈ 0.001.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.949) - 0.001).abs() < 1e-4);
    }

    #[test]
    fn pareto_sample_passes_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..20_000).map(|_| pareto(&mut rng, 1.5)).collect();
        assert!(xs.iter().all(|&x| x >= 1.0));
        let r = ks_test(&xs, |y| pareto_cdf(y, 1.5));
        assert!(r.p_value > 1e-3, "{r:?}");
        // Wrong index is rejected.
        let r = ks_test(&xs, |y| pareto_cdf(y, 2.0));
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn frechet_sample_passes_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs: Vec<f64> = (0..20_000).map(|_| frechet(&mut rng, 0.7)).collect();
        assert!(ks_test(&xs, |y| frechet_cdf(y, 0.7)).p_value > 1e-3);
    }

    #[test]
    fn quantile_picks_order_statistic() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
    }
}
