//! Named groups of checks, flattened into rows of one CSV schema.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::clusterlab;
use crate::error::{Error, Result};
use crate::estimate::{IdentityReport, LaneRng, Sampling};
use crate::functional::FunctionalSpec;
use crate::identities::{self, homogeneous_battery};
use crate::maxstable::{self, KsReport, KS_LEVEL};
use crate::models::{SpectralLaw, SpectralModel};
use crate::tailkernel::{time_change_battery, TimeChangeReport};

/// Horizon of the cluster index suite.
pub const CLUSTER_INDEX_K: usize = 30;

/// Random pairs for the deterministic slog bound.
pub const SLOG_PAIRS: usize = 100_000;

/// Default length of the simulated series in the cluster suite.
pub const DEFAULT_SERIES_LEN: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    TimeChange,
    ExtremalIndex,
    QIdentities,
    ClusterIndex,
    LogAlpha1,
    Maxstable,
    Clusterlab,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::TimeChange,
        Suite::ExtremalIndex,
        Suite::QIdentities,
        Suite::ClusterIndex,
        Suite::LogAlpha1,
        Suite::Maxstable,
        Suite::Clusterlab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TimeChange => "time-change",
            Suite::ExtremalIndex => "extremal-index",
            Suite::QIdentities => "q-identities",
            Suite::ClusterIndex => "cluster-index",
            Suite::LogAlpha1 => "log-alpha1",
            Suite::Maxstable => "maxstable",
            Suite::Clusterlab => "clusterlab",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::TimeChange => "time change formula, Y form against shifted form and angular form",
            Suite::ExtremalIndex => "six formulas for the candidate extremal index against the closed form",
            Suite::QIdentities => "sum of E|Q_j|^alpha, Q against Theta and forward identities",
            Suite::ClusterIndex => "cluster index b_k of the sum and its slope",
            Suite::LogAlpha1 => "log identities at alpha = 1 and the slog bound",
            Suite::Maxstable => "max-stable process from Q: marginals, fdd, max-stability, block maxima",
            Suite::Clusterlab => "clusters of a simulated series against nu* and the law of Q",
        }
    }

    fn tag(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::InvalidArgument(format!("unknown suite '{s}' (expected one of {}, all)", names.join(", ")))
            })
    }
}

/// Parses a suite name, with `all` expanding to every suite.
pub fn parse_selection(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        Ok(Suite::ALL.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

/// One comparison, in the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub side_a: f64,
    pub side_b: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub sigmas: f64,
    pub pass: bool,
}

/// Rows of one suite on one model, with free-form notes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub model: String,
    pub rows: Vec<CheckRow>,
    pub notes: Vec<String>,
    /// Set when the suite does not apply to the model.
    pub skipped: Option<String>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Settings shared by all suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub sampling: Sampling,
    pub series_len: usize,
}

impl SuiteConfig {
    pub fn new(sampling: Sampling) -> Self {
        Self {
            sampling,
            series_len: DEFAULT_SERIES_LEN,
        }
    }
}

struct Rows {
    suite: Suite,
    model: String,
    tolerance: f64,
    rows: Vec<CheckRow>,
    notes: Vec<String>,
}

impl Rows {
    fn identity(&mut self, r: &IdentityReport) {
        for p in &r.pairs {
            let (la, a) = &r.sides[p.a];
            let (lb, b) = &r.sides[p.b];
            self.rows.push(CheckRow {
                suite: self.suite.name().into(),
                check: format!("{}: {la} vs {lb}", r.name),
                side_a: a.value,
                side_b: b.value,
                stderr_a: a.stderr,
                stderr_b: b.stderr,
                sigmas: p.sigmas,
                pass: p.pass,
            });
        }
    }

    fn time_change(&mut self, r: &TimeChangeReport) {
        self.rows.push(CheckRow {
            suite: self.suite.name().into(),
            check: format!("time change {} {}", r.label, self.model),
            side_a: r.lhs.value,
            side_b: r.rhs.value,
            stderr_a: r.lhs.stderr,
            stderr_b: r.rhs.stderr,
            sigmas: r.sigmas,
            pass: r.sigmas <= self.tolerance,
        });
        if let Some(a) = &r.angular {
            let mut a = a.clone();
            a.name = format!("{} {}", a.name, self.model);
            self.identity(&a);
        }
    }

    // p-value against the level; sigmas carries sqrt(n) D.
    fn ks(&mut self, k: &KsReport) {
        self.rows.push(CheckRow {
            suite: self.suite.name().into(),
            check: format!("{}: KS p-value vs level", k.name),
            side_a: k.p_value,
            side_b: KS_LEVEL,
            stderr_a: 0.0,
            stderr_b: 0.0,
            sigmas: k.statistic * (k.n as f64).sqrt(),
            pass: k.pass,
        });
    }

    fn bound(&mut self, check: String, value: f64, limit: f64, pass: bool) {
        self.rows.push(CheckRow {
            suite: self.suite.name().into(),
            check,
            side_a: value,
            side_b: limit,
            stderr_a: 0.0,
            stderr_b: 0.0,
            sigmas: 0.0,
            pass,
        });
    }
}

/// Runs one suite on one model. Errors inside the suite become a failing row.
pub fn run_suite(suite: Suite, model: &SpectralModel, cfg: &SuiteConfig) -> SuiteOutcome {
    let mut rows = Rows {
        suite,
        model: model.to_string(),
        tolerance: cfg.sampling.tolerance,
        rows: vec![],
        notes: vec![],
    };
    let s = cfg.sampling.derive(suite.tag());
    let skipped = match fill(suite, model, cfg, &s, &mut rows) {
        Ok(skip) => skip,
        Err(e) => {
            rows.bound(format!("error {model}: {e}"), 0.0, 0.0, false);
            None
        }
    };
    SuiteOutcome {
        suite,
        model: model.to_string(),
        rows: rows.rows,
        notes: rows.notes,
        skipped,
    }
}

fn fill(
    suite: Suite,
    model: &SpectralModel,
    cfg: &SuiteConfig,
    s: &Sampling,
    out: &mut Rows,
) -> Result<Option<String>> {
    match suite {
        Suite::TimeChange => {
            for r in time_change_battery(model, s)? {
                out.time_change(&r);
            }
        }
        Suite::ExtremalIndex => out.identity(&identities::extremal_index_report(model, s)?),
        Suite::QIdentities => {
            for r in identities::qsum_alpha_identity(model, &s.derive(1))? {
                out.identity(&r);
            }
            for (i, h) in homogeneous_battery(model.alpha()).iter().enumerate() {
                let i = i as u64;
                out.identity(&identities::check_q_theta_identity(h, model, &s.derive(10 + i))?);
                out.identity(&identities::check_forward_identity(h, model, &s.derive(20 + i))?);
            }
        }
        Suite::ClusterIndex => {
            let h = FunctionalSpec::SignedPowSum(1.0);
            let r = identities::cluster_index(&h, model, CLUSTER_INDEX_K, s)?;
            out.identity(&r.slope);
            if matches!(model.law(), SpectralLaw::Iid { skew } if *skew >= 1.0) {
                for p in r.points.iter().filter(|p| [1, 2, 5, 10, 30].contains(&p.k)) {
                    let exact = p.k as f64;
                    out.bound(
                        format!("cluster index b_{} {h} {model}: estimate vs k", p.k),
                        p.b_k.value,
                        exact,
                        p.b_k.value == exact,
                    );
                }
            }
            for p in &r.points {
                out.notes.push(format!("b_{} = {} ± {}", p.k, p.b_k.value, p.b_k.stderr));
            }
        }
        Suite::LogAlpha1 => {
            if !model.nonnegative() {
                return Ok(Some(format!("{model} is not nonnegative")));
            }
            let fixed = matches!(
                model.law(),
                SpectralLaw::Deterministic { .. } | SpectralLaw::Empirical { .. }
            );
            let m1 = if model.alpha() == 1.0 {
                model.clone()
            } else if fixed {
                return Ok(Some(format!("{model} has a fixed path table and alpha != 1")));
            } else {
                out.notes.push(format!("alpha set to 1 from {}", model.alpha()));
                model.with_alpha(1.0)?
            };
            for r in identities::log_identities_alpha1(&m1, s)? {
                out.identity(&r);
            }
            let mut rng = LaneRng::seed_from_u64(s.derive(1).seed);
            let b = identities::slog_bound_check(SLOG_PAIRS, &mut rng);
            out.bound(
                format!("slog bound on {} pairs: violations vs 0", b.pairs),
                b.violations as f64,
                0.0,
                b.violations == 0,
            );
            out.notes.push(format!("slog bound max ratio {}", b.max_ratio));
        }
        Suite::Maxstable => {
            if !model.nonnegative() {
                return Ok(Some(format!("{model} is not nonnegative")));
            }
            let b = maxstable::battery(model, s)?;
            for k in &b.ks {
                out.ks(k);
            }
            for r in &b.reports {
                out.identity(r);
            }
        }
        Suite::Clusterlab => {
            if !model.has_series() {
                return Ok(Some(format!("{model} has no series construction")));
            }
            let b = clusterlab::battery(model, cfg.series_len, s)?;
            out.bound(
                format!(
                    "block load r_n={} c_n={} {model}: load vs max",
                    b.scheme.r_n, b.scheme.c_n
                ),
                b.load,
                clusterlab::MAX_LOAD,
                b.load <= clusterlab::MAX_LOAD,
            );
            for r in &b.reports {
                out.identity(r);
            }
            for a in &b.anticlustering {
                out.notes.push(format!(
                    "anticlustering m={}: {} ± {}",
                    a.m, a.estimate.value, a.estimate.stderr
                ));
            }
        }
    }
    Ok(None)
}

/// Writes rows under the fixed header.
pub fn write_csv<W: Write>(rows: &[CheckRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        wr.write_record(CSV_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    }
    wr.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub const CSV_HEADER: [&str; 8] = [
    "suite", "check", "side_a", "side_b", "stderr_a", "stderr_b", "sigmas", "pass",
];

/// Rows of several outcomes as one CSV string.
pub fn to_csv(outcomes: &[SuiteOutcome]) -> Result<String> {
    let rows: Vec<CheckRow> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    let mut buf = vec![];
    write_csv(&rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}
