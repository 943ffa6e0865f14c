//! One line per acceptance criterion. Closed forms are computed here by
//! enumeration, independently of the library.

use rand::SeedableRng;
use tailproc::clusterlab::{self, BlockingScheme};
use tailproc::estimate::LaneRng;
use tailproc::identities::{self, homogeneous_battery, ThetaMethod};
use tailproc::maxstable::{self, M3Config};
use tailproc::models::builtin_models;
use tailproc::suites::{run_suite, to_csv, Suite, SuiteConfig};
use tailproc::tailkernel::{check_time_change, time_change_battery};
use tailproc::{Estimate, FiniteSeq, FunctionalSpec, Sampling, SpectralModel};

const TOL: f64 = 3.0;

fn slack(exact: f64) -> f64 {
    1e-12 * exact.abs().max(1.0)
}

fn within(e: &Estimate, exact: f64) -> bool {
    (e.value - exact).abs() <= TOL * e.stderr + slack(exact)
}

/// Distance in standard errors beyond rounding slack.
fn z(e: &Estimate, exact: f64) -> f64 {
    let d = ((e.value - exact).abs() - slack(exact)).max(0.0);
    if d == 0.0 {
        0.0
    } else {
        d / e.stderr
    }
}

/// Spectral paths of the moving average `Σ c_k Z_{t-k}` with their probabilities.
fn ma_paths(c: &[f64], alpha: f64) -> Vec<(Vec<(i64, f64)>, f64)> {
    let total: f64 = c.iter().map(|x| x.powf(alpha)).sum();
    (0..c.len())
        .filter(|&j| c[j] > 0.0)
        .map(|j| {
            let path = (0..c.len())
                .map(|k| (k as i64 - j as i64, c[k] / c[j]))
                .collect();
            (path, c[j].powf(alpha) / total)
        })
        .collect()
}

/// `ϑ = P(the first maximum of Θ sits at 0)`.
fn ma_theta(c: &[f64], alpha: f64) -> f64 {
    ma_paths(c, alpha)
        .into_iter()
        .filter(|(path, _)| {
            let m = path.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
            path.iter().find(|p| p.1.abs() == m).unwrap().0 == 0
        })
        .map(|(_, p)| p)
        .sum()
}

/// The law of `Q` for a moving average: paths weighted by `(1 - (Θ*_{<0})^α)_+`, scaled to sup 1.
fn ma_q(c: &[f64], alpha: f64) -> Vec<(FiniteSeq, f64)> {
    let mut out: Vec<(FiniteSeq, f64)> = ma_paths(c, alpha)
        .into_iter()
        .filter_map(|(path, p)| {
            let back = path.iter().filter(|q| q.0 < 0).map(|q| q.1.abs()).fold(0.0, f64::max);
            let w = p * (1.0 - back.powf(alpha)).max(0.0);
            let m = path.iter().map(|q| q.1.abs()).fold(0.0, f64::max);
            let scaled: Vec<(i64, f64)> = path.iter().map(|&(j, v)| (j, v / m)).collect();
            (w > 0.0).then(|| (FiniteSeq::from_pairs(&scaled), w))
        })
        .collect();
    let total: f64 = out.iter().map(|q| q.1).sum();
    for q in &mut out {
        q.1 /= total;
    }
    out
}

/// `-log P(ζ_0 ≤ y0, ζ_1 ≤ y1)` for the M3 process of Geometric(ρ, α), summed over shifts of Q = (1, ρ, ρ², …).
fn geometric_fdd(rho: f64, alpha: f64, y0: f64, y1: f64) -> f64 {
    let ra = rho.powf(alpha);
    (1.0 - ra) * y1.powf(-alpha) + y0.powf(-alpha).max(ra * y1.powf(-alpha))
}

fn empirical_ma(alpha: f64) -> SpectralModel {
    let paths = ma_paths(&[1.0, 0.5], alpha)
        .into_iter()
        .map(|(p, w)| (FiniteSeq::from_pairs(&p), w))
        .collect();
    SpectralModel::empirical(paths, alpha).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let cases = [
        (SpectralModel::geometric(0.5, 1.0).unwrap(), 1.0 - 0.5f64.powf(1.0)),
        (
            SpectralModel::moving_average(&[1.0, 0.5], 1.5).unwrap(),
            ma_theta(&[1.0, 0.5], 1.5),
        ),
    ];
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for (i, (model, exact)) in cases.iter().enumerate() {
        let s = Sampling::new(100_000, 11 + i as u64);
        let r = identities::extremal_index_report(model, &s).unwrap();
        pass &= r.pass;
        for (j, m) in ThetaMethod::ALL.iter().enumerate() {
            let e = identities::theta_candidate(model, *m, &s.derive(500 + j as u64)).unwrap();
            pass &= within(&e, *exact);
            worst = worst.max(z(&e, *exact));
        }
        worst = worst.max(r.max_discrepancy_sigmas);
    }
    Outcome {
        pass,
        detail: format!("six formulas on geometric and MA, worst {worst:.2} sigma"),
    }
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for (i, model) in builtin_models().iter().enumerate() {
        for r in time_change_battery(model, &Sampling::new(100_000, 20 + i as u64)).unwrap() {
            pass &= r.pass;
            worst = worst.max(r.sigmas);
            count += 1;
        }
    }
    let geo = SpectralModel::geometric(0.5, 1.0).unwrap();
    let r = check_time_change(&geo, &FunctionalSpec::One, 1, 1.0, &Sampling::new(100_000, 29)).unwrap();
    // P(|Y_1| > 1) = E[|Θ_1|^α ∧ 1] = ρ^α.
    let exact = 0.5f64.powf(1.0);
    let hit = within(&r.lhs, exact) && within(&r.rhs, exact);
    Outcome {
        pass: pass && hit,
        detail: format!(
            "{count} cases on {} models, worst {worst:.2} sigma; geometric k=1 t=1 lhs {:.4} rhs {:.4} vs {exact}",
            builtin_models().len(),
            r.lhs.value,
            r.rhs.value
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for alpha in [0.7, 1.0, 1.5, 2.3] {
        let models = [
            SpectralModel::iid(alpha).unwrap(),
            SpectralModel::moving_average(&[1.0, 0.5], alpha).unwrap(),
            "ma:alpha=1,coeffs=0.3;1;0.5,skew=0.7"
                .parse::<SpectralModel>()
                .unwrap()
                .with_alpha(alpha)
                .unwrap(),
            SpectralModel::geometric(0.5, alpha).unwrap(),
            SpectralModel::deterministic(FiniteSeq::spike(0, 1.0), alpha).unwrap(),
            empirical_ma(alpha),
        ];
        for (i, m) in models.iter().enumerate() {
            let s = Sampling::new(100_000, 300 + 10 * i as u64 + (alpha * 10.0) as u64);
            let r = &identities::qsum_alpha_identity(m, &s).unwrap()[0];
            let est = r.sides[0].1;
            pass &= r.pass && within(&est, 1.0);
            worst = worst.max(z(&est, 1.0));
            count += 1;
        }
    }
    Outcome {
        pass,
        detail: format!("theta * sum E|Q_j|^alpha = 1 on {count} model/alpha pairs, worst {worst:.2} sigma"),
    }
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, model) in builtin_models().iter().enumerate() {
        for (j, h) in homogeneous_battery(model.alpha()).iter().enumerate() {
            let s = Sampling::new(100_000, 400 + 10 * i as u64 + j as u64);
            let three = identities::check_q_theta_identity(h, model, &s).unwrap();
            let two = identities::check_forward_identity(h, model, &s.derive(1)).unwrap();
            pass &= three.pass && two.pass && three.sides.len() == 3;
            worst = worst.max(three.max_discrepancy_sigmas).max(two.max_discrepancy_sigmas);
            count += 2;
        }
    }
    Outcome {
        pass,
        detail: format!("{count} three-way and forward reports, worst {worst:.2} sigma"),
    }
}

fn criterion_5() -> Outcome {
    let geo = SpectralModel::geometric(0.5, 1.0).unwrap();
    let reports = identities::log_identities_alpha1(&geo, &Sampling::new(100_000, 51)).unwrap();
    let finite = reports
        .iter()
        .all(|r| r.sides.iter().all(|(_, e)| e.value.is_finite() && e.stderr.is_finite()));
    let mut rng = LaneRng::seed_from_u64(52);
    let b = identities::slog_bound_check(100_000, &mut rng);
    let worst = reports.iter().map(|r| r.max_discrepancy_sigmas).fold(0.0, f64::max);
    Outcome {
        pass: finite && reports.iter().all(|r| r.pass) && b.violations == 0,
        detail: format!(
            "log identities worst {worst:.2} sigma; slog bound {} violations on {} pairs, max ratio {:.3}",
            b.violations, b.pairs, b.max_ratio
        ),
    }
}

fn criterion_6() -> Outcome {
    let sum = FunctionalSpec::SignedPowSum(1.0);
    let iid = SpectralModel::iid(1.5).unwrap();
    let r = identities::cluster_index(&sum, &iid, 30, &Sampling::new(20_000, 61)).unwrap();
    let exact_k = r.points.iter().all(|p| p.b_k.value == p.k as f64);
    let geo = SpectralModel::geometric(0.5, 1.0).unwrap();
    let g = identities::cluster_index(&sum, &geo, 30, &Sampling::new(100_000, 62)).unwrap();
    // ϑ E[(Σ Q_j)^α] with Q = (1, ρ, ρ², …) and α = 1 is (1 - ρ) / (1 - ρ) = 1.
    let slope = &g.points[29].diff;
    Outcome {
        pass: exact_k && g.slope.pass && within(slope, 1.0) && within(&g.limit, 1.0),
        detail: format!(
            "iid b_k = k for k <= 30: {exact_k}; geometric b_30 - b_29 = {:.4} +- {:.4}, limit {:.4}",
            slope.value, slope.stderr, g.limit.value
        ),
    }
}

fn criterion_7() -> Outcome {
    let c = [1.0, 0.5];
    let alpha = 1.5;
    let model = SpectralModel::moving_average(&c, alpha).unwrap();
    let theta = ma_theta(&c, alpha);
    let mut rng = LaneRng::seed_from_u64(71);
    let series = model.simulate_series(1_000_000, &mut rng).unwrap();
    let scheme = BlockingScheme::default_for(&series).unwrap();
    let mut pass = scheme.load(&series) <= clusterlab::MAX_LOAD;
    let mut parts = vec![format!("r_n={} load={:.4}", scheme.r_n, scheme.load(&series))];
    for (i, u) in [1.0, 2.0].into_iter().enumerate() {
        let h = FunctionalSpec::exceeds_sup(u);
        let e = clusterlab::empirical_cluster_measure(&series, &scheme, &h, 72 + i as u64).unwrap();
        let exact = theta * u.powf(-alpha);
        pass &= within(&e, exact);
        parts.push(format!("u={u}: {:.4} vs {exact:.4} ({:.2} sigma)", e.value, z(&e, exact)));
    }
    let mut probes = vec![
        FunctionalSpec::exceeds_at(1, 0.3).anchored(),
        FunctionalSpec::exceeds_at(-1, 0.3).anchored(),
        FunctionalSpec::exceeds_at(1, 0.7).anchored(),
    ];
    probes.extend(clusterlab::cluster_law_probes(&model));
    let q = ma_q(&c, alpha);
    let reports = clusterlab::normalized_cluster_law(
        &series,
        &scheme,
        1.0,
        &probes,
        &model,
        &Sampling::new(100_000, 74),
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    for (h, r) in probes.iter().zip(&reports) {
        let exact: f64 = q.iter().map(|(path, w)| w * h.eval(path)).sum();
        let e = r.sides[0].1;
        pass &= within(&e, exact);
        worst = worst.max(z(&e, exact));
    }
    parts.push(format!("{} probes vs Q enumeration, worst {worst:.2} sigma", probes.len()));
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let (rho, alpha) = (0.5, 1.0);
    let geo = SpectralModel::geometric(rho, alpha).unwrap();
    let cfg = M3Config::new(geo.clone(), (0, 1)).unwrap();
    let paths = maxstable::simulate_m3_paths(&cfg, &Sampling::new(100_000, 81)).unwrap();
    let ks0 = maxstable::marginal_ks(&paths, 0, alpha);
    let ks1 = maxstable::marginal_ks(&paths, 1, alpha);
    let mut pass = ks0.p_value >= 1e-3 && ks1.p_value >= 1e-3;
    let mut worst: f64 = 0.0;
    for (i, (y0, y1)) in [(1.0, 1.0), (0.6, 2.0), (2.0, 0.8), (0.8, 0.8), (1.5, 1.0)]
        .into_iter()
        .enumerate()
    {
        let y = FiniteSeq::new(0, vec![y0, y1]);
        let exact = geometric_fdd(rho, alpha, y0, y1);
        let emp = maxstable::empirical_log_survival(&paths, &y, 0).unwrap();
        let formula =
            maxstable::fdd_log_survival(&y, &geo, &Sampling::new(100_000, 82 + i as u64)).unwrap();
        let joint = (emp.value - formula.value).abs() <= TOL * emp.stderr.hypot(formula.stderr);
        pass &= joint && within(&emp, exact) && within(&formula, exact);
        worst = worst.max(z(&emp, exact)).max(z(&formula, exact));
    }
    let n = 1000;
    let b = maxstable::block_maxima_check(&geo, n, 1.0, true, &Sampling::new(100_000, 89)).unwrap();
    let theta = 1.0 - rho.powf(alpha);
    // ν(max_{1..n} > 1) = ϑ n + ρ^α for the geometric law.
    let finite_n = theta + rho.powf(alpha) / n as f64;
    let bm = b.sides[0].1;
    pass &= b.pass && within(&bm, finite_n) && within(&bm, theta);
    Outcome {
        pass,
        detail: format!(
            "KS p {:.3} / {:.3}; fdd worst {worst:.2} sigma; block maxima n={n} {:.4} +- {:.4} vs theta {theta}",
            ks0.p_value, ks1.p_value, bm.value, bm.stderr
        ),
    }
}

fn criterion_9() -> Outcome {
    let model = SpectralModel::moving_average(&[1.0, 0.5], 1.5).unwrap();
    let cfg = SuiteConfig {
        sampling: Sampling::new(20_000, 91),
        series_len: 300_000,
    };
    let run = || {
        let outcomes: Vec<_> = Suite::ALL.iter().map(|s| run_suite(*s, &model, &cfg)).collect();
        to_csv(&outcomes).unwrap()
    };
    let (a, b) = (run(), run());
    Outcome {
        pass: a == b && a.lines().count() > Suite::ALL.len(),
        detail: format!("{} CSV bytes over {} suites, identical: {}", a.len(), Suite::ALL.len(), a == b),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("extremal index hexagon", criterion_1),
        ("time change battery", criterion_2),
        ("theta sum E|Q|^alpha = 1", criterion_3),
        ("Q-Theta three-way and forward identities", criterion_4),
        ("alpha = 1 log identities and slog bound", criterion_5),
        ("cluster index", criterion_6),
        ("cross-world cluster convergence", criterion_7),
        ("max-stable M3", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {tag} ({}) [{:.1}s]", i + 1, o.detail, t.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
