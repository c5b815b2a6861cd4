//! Experiment drivers behind the `exsuff` CLI.
//!
//! Each command turns an [`ExperimentConfig`] into a serializable report.
//! Reports embed the tool version and a config echo, contain no timestamps,
//! and draw all randomness from streams derived from `(seed, index)`, so
//! identical configs give byte-identical output.

pub mod catalog;
pub mod chi2;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{self, DiscrepancyReport};
use crate::perm::{self, factorial, Perm};
use crate::symcore::{self, Point};
use crate::symmetrize::{self, Estimand, McEstimate, RbComparison, DEFAULT_MC_DRAWS};
use crate::{stream, MAX_ENUM_DIM};

pub use catalog::{negative_control, Fixture};
pub use chi2::chi_square_sf;

pub const TOOL: &str = "exsuff";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "EXSUFF_SEED";

/// Tolerance for every exact-path comparison.
pub const EXACT_TOLERANCE: f64 = 1e-12;
/// Fuzzed point sets per fixture in `verify-conditional`.
pub const FUZZED_SETS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyConditional,
    RankUniformity,
    RaoBlackwell,
    Symmetrize,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::VerifyConditional => "verify-conditional",
            Command::RankUniformity => "rank-uniformity",
            Command::RaoBlackwell => "rao-blackwell",
            Command::Symmetrize => "symmetrize",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?}"))),
        }
    }
}

/// Everything that determines a run. `samples` is the draw count for
/// `rank-uniformity` and `rao-blackwell` and the Monte Carlo permutation
/// count for `symmetrize`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub n: usize,
    pub samples: u64,
    pub sampler: String,
    pub estimand: String,
    pub replicates: u64,
    pub alpha: f64,
    pub input: Option<String>,
    pub pmf: Vec<String>,
    pub output_path: Option<String>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Defaults for `command`.
    pub fn new(command: Command) -> Self {
        let samples = match command {
            Command::RankUniformity => 60_000,
            Command::RaoBlackwell => 100_000,
            Command::Symmetrize => DEFAULT_MC_DRAWS,
            Command::VerifyConditional => 0,
        };
        ExperimentConfig {
            command,
            seed: 0,
            n: 3,
            samples,
            sampler: "uniform".into(),
            estimand: "proj:0".into(),
            replicates: 1,
            alpha: 0.001,
            input: None,
            pmf: Vec::new(),
            output_path: None,
            format: Format::Json,
        }
    }
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    VerificationFailure,
    UsageError,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::VerificationFailure => 1,
            Status::UsageError => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::VerificationFailure
        }
    }
}

/// Envelope shared by all reports.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    status: Status,
    result: &'a T,
}

/// A rendered report and the exit status it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub rendered: String,
}

fn render<T: Serialize>(cfg: &ExperimentConfig, status: Status, result: &T) -> Result<Outcome> {
    let report = Report {
        tool: TOOL,
        version: VERSION,
        config: cfg,
        status,
        result,
    };
    let rendered = match cfg.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            to_csv(&serde_json::to_value(&report).map_err(|e| Error::Io(e.to_string()))?)?
        }
    };
    Ok(Outcome { status, rendered })
}

/// Flattens a JSON value into `path,value` rows.
fn to_csv(value: &serde_json::Value) -> Result<String> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        use serde_json::Value;
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&join(k), v, out)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(&join(&i.to_string()), v, out)),
            Value::Null => out.push((prefix.into(), String::new())),
            Value::String(s) => out.push((prefix.into(), s.clone())),
            other => out.push((prefix.into(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for (k, v) in rows {
        w.write_record([k, v])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Runs the configured command. `Err` means a usage or input problem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command {
        Command::VerifyConditional => {
            let fixtures = if cfg.pmf.is_empty() {
                catalog::default_fixtures(&mut stream(cfg.seed, 0))
            } else {
                catalog::fixtures_from_files(&cfg.pmf)?
            };
            let report = run_conditional_verify_fixtures(&fixtures, cfg.seed)?;
            render(cfg, Status::from_ok(report.all_ok), &report)
        }
        Command::RankUniformity => {
            if cfg.replicates <= 1 {
                let r = run_rank_uniformity(cfg)?;
                let ok = !r.degenerate && r.p_value >= cfg.alpha;
                render(cfg, Status::from_ok(ok), &r)
            } else {
                let study = run_rank_uniformity_replicates(cfg)?;
                let ok = study.degenerate_replicates == 0;
                render(cfg, Status::from_ok(ok), &study)
            }
        }
        Command::RaoBlackwell => {
            let r = run_rao_blackwell(cfg)?;
            render(
                cfg,
                Status::from_ok(r.means_agree && r.variance_dominated),
                &r,
            )
        }
        Command::Symmetrize => {
            let path = cfg
                .input
                .as_deref()
                .ok_or_else(|| Error::InvalidParameter("symmetrize needs --input".into()))?;
            let text = std::fs::read_to_string(path)?;
            let r = run_symmetrize(cfg, &text)?;
            let status = if r.error_rows > 0 {
                Status::UsageError
            } else {
                Status::Pass
            };
            render(cfg, status, &r)
        }
    }
}

// ---------------------------------------------------------------------------
// verify-conditional

#[derive(Debug, Clone, Serialize)]
pub struct FixtureResult {
    pub name: String,
    pub dim: usize,
    pub atoms: usize,
    pub exchangeable: bool,
    pub expected: &'static str,
    pub checks: Vec<DiscrepancyReport>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalVerifyReport {
    pub fixtures: Vec<FixtureResult>,
    pub all_ok: bool,
}

/// Conditional-law, integrated-identity and event-equivalence checks for
/// one fixture. Fuzzed sets and the indicator estimand come from
/// `stream(seed, 1 + index)`.
fn verify_fixture(fx: &Fixture, index: u64, seed: u64) -> Result<FixtureResult> {
    let mut rng = stream(seed, 1 + index);
    let mut sets = catalog::fuzz_point_sets(&fx.pmf, FUZZED_SETS, &mut rng);
    if fx.negative_control {
        // The whole symmetric support, where the identity visibly breaks.
        sets.push(symcore::symmetric_closure(&fx.pmf.support())?);
    }
    let estimands = catalog::catalog_estimands(&fx.pmf, &sets[0]);
    let conditional = oracle::compare_conditional(&fx.pmf, EXACT_TOLERANCE);
    let identity = oracle::integrated_identity_report(&fx.pmf, &estimands, &sets, EXACT_TOLERANCE)?;
    let events = oracle::event_equivalence_report(&fx.pmf, &sets)?;
    let exchangeable = crate::dist::is_exchangeable(&fx.pmf, EXACT_TOLERANCE);
    let ok = events.within_tolerance
        && if fx.negative_control {
            !conditional.within_tolerance
        } else {
            conditional.within_tolerance && identity.within_tolerance
        };
    Ok(FixtureResult {
        name: fx.name.clone(),
        dim: fx.pmf.dim(),
        atoms: fx.pmf.len(),
        exchangeable,
        expected: if fx.negative_control {
            "expected-fail"
        } else {
            "pass"
        },
        checks: vec![conditional, identity, events],
        ok,
    })
}

pub fn run_conditional_verify_fixtures(
    fixtures: &[Fixture],
    seed: u64,
) -> Result<ConditionalVerifyReport> {
    if fixtures.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let results = fixtures
        .par_iter()
        .enumerate()
        .map(|(i, fx)| verify_fixture(fx, i as u64, seed))
        .collect::<Result<Vec<_>>>()?;
    let all_ok = results.iter().all(|r| r.ok);
    Ok(ConditionalVerifyReport {
        fixtures: results,
        all_ok,
    })
}

/// The default catalog for `cfg.seed`.
pub fn run_conditional_verify(cfg: &ExperimentConfig) -> Result<ConditionalVerifyReport> {
    let fixtures = catalog::default_fixtures(&mut stream(cfg.seed, 0));
    run_conditional_verify_fixtures(&fixtures, cfg.seed)
}

// ---------------------------------------------------------------------------
// rank-uniformity

#[derive(Debug, Clone, Serialize)]
pub struct CellCount {
    pub perm: Perm,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankUniformityReport {
    pub sampler: String,
    pub n: usize,
    pub samples: u64,
    pub cell_counts: Vec<CellCount>,
    pub kept: u64,
    pub excluded_ties: u64,
    pub chi2: f64,
    pub df: u64,
    pub p_value: f64,
    /// No untied draws: the statistic is undefined.
    pub degenerate: bool,
}

fn check_rank_config(cfg: &ExperimentConfig) -> Result<()> {
    if !(2..=6).contains(&cfg.n) {
        return Err(Error::InvalidParameter(format!(
            "rank-uniformity needs 2 <= n <= 6, got {}",
            cfg.n
        )));
    }
    let min = 20 * factorial(cfg.n);
    if cfg.samples < min {
        return Err(Error::InvalidParameter(format!(
            "rank-uniformity needs at least 20 * n! = {min} samples, got {}",
            cfg.samples
        )));
    }
    Ok(())
}

fn rank_uniformity_replicate(
    cfg: &ExperimentConfig,
    sampler: &dyn crate::dist::Sampler,
    index: u64,
) -> Result<RankUniformityReport> {
    let cells = perm::enumerate_permutations_lex(cfg.n)?;
    let mut counts: BTreeMap<Perm, u64> = cells.iter().map(|p| (p.clone(), 0)).collect();
    let mut rng = stream(cfg.seed, index);
    let mut excluded = 0;
    for _ in 0..cfg.samples {
        let x = sampler.draw(&mut rng);
        let r = perm::rank_vector(x.coords())?;
        if r.tie_flag {
            excluded += 1;
        } else {
            *counts.get_mut(&r.perm).expect("all cells present") += 1;
        }
    }
    let kept = cfg.samples - excluded;
    let df = factorial(cfg.n) - 1;
    let (chi2, p_value) = if kept == 0 {
        (0.0, 1.0)
    } else {
        let expected = kept as f64 / cells.len() as f64;
        let chi2 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum::<f64>();
        (chi2, chi_square_sf(chi2, df)?)
    };
    Ok(RankUniformityReport {
        sampler: sampler.name(),
        n: cfg.n,
        samples: cfg.samples,
        cell_counts: counts
            .into_iter()
            .map(|(perm, count)| CellCount { perm, count })
            .collect(),
        kept,
        excluded_ties: excluded,
        chi2,
        df,
        p_value,
        degenerate: kept == 0,
    })
}

/// Chi-square test that the sorting permutation of a draw is uniform over
/// all `n!` cells. Draws with ties are excluded and counted.
pub fn run_rank_uniformity(cfg: &ExperimentConfig) -> Result<RankUniformityReport> {
    check_rank_config(cfg)?;
    let sampler = catalog::parse_sampler(&cfg.sampler, cfg.n)?;
    rank_uniformity_replicate(cfg, sampler.as_ref(), 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateSummary {
    pub index: u64,
    pub chi2: f64,
    pub p_value: f64,
    pub excluded_ties: u64,
    pub rejected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankUniformityStudy {
    pub sampler: String,
    pub n: usize,
    pub samples: u64,
    pub alpha: f64,
    pub replicates: Vec<ReplicateSummary>,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub degenerate_replicates: u64,
}

/// `cfg.replicates` independent rank-uniformity runs on streams
/// `(seed, 0..replicates)`, merged in index order.
pub fn run_rank_uniformity_replicates(cfg: &ExperimentConfig) -> Result<RankUniformityStudy> {
    check_rank_config(cfg)?;
    let sampler = catalog::parse_sampler(&cfg.sampler, cfg.n)?;
    let reports = (0..cfg.replicates.max(1))
        .into_par_iter()
        .map(|i| rank_uniformity_replicate(cfg, sampler.as_ref(), i).map(|r| (i, r)))
        .collect::<Result<Vec<_>>>()?;
    let replicates: Vec<ReplicateSummary> = reports
        .iter()
        .map(|(i, r)| ReplicateSummary {
            index: *i,
            chi2: r.chi2,
            p_value: r.p_value,
            excluded_ties: r.excluded_ties,
            rejected: !r.degenerate && r.p_value < cfg.alpha,
        })
        .collect();
    let rejections = replicates.iter().filter(|r| r.rejected).count() as u64;
    Ok(RankUniformityStudy {
        sampler: sampler.name(),
        n: cfg.n,
        samples: cfg.samples,
        alpha: cfg.alpha,
        rejection_rate: rejections as f64 / replicates.len() as f64,
        rejections,
        degenerate_replicates: reports.iter().filter(|(_, r)| r.degenerate).count() as u64,
        replicates,
    })
}

// ---------------------------------------------------------------------------
// rao-blackwell

#[derive(Debug, Clone, Serialize)]
pub struct RaoBlackwellReport {
    pub sampler: String,
    pub estimand: String,
    pub comparison: RbComparison,
    /// `var_rb / var_raw`; `null` when the raw variance is zero.
    pub variance_ratio: Option<f64>,
    pub means_agree: bool,
    pub variance_dominated: bool,
}

pub fn run_rao_blackwell(cfg: &ExperimentConfig) -> Result<RaoBlackwellReport> {
    let sampler = catalog::parse_sampler(&cfg.sampler, cfg.n)?;
    let g = catalog::parse_estimand(&cfg.estimand, cfg.n)?;
    let comparison = symmetrize::rao_blackwell_compare(
        sampler.as_ref(),
        &g,
        cfg.samples,
        &mut stream(cfg.seed, 0),
    )?;
    Ok(RaoBlackwellReport {
        sampler: sampler.name(),
        estimand: cfg.estimand.clone(),
        variance_ratio: comparison.variance_ratio(),
        means_agree: comparison.means_agree(),
        variance_dominated: comparison.variance_dominated(),
        comparison,
    })
}

// ---------------------------------------------------------------------------
// symmetrize

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizeRecord {
    /// One-based line number in the input.
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_statistics: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", flatten)]
    pub estimate: Option<McEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizeReport {
    pub estimand: String,
    pub records: Vec<SymmetrizeRecord>,
    pub error_rows: usize,
}

/// Splits comma- and/or whitespace-separated numeric rows, skipping blank
/// lines and `#` comments. Yields `(line_number, parsed_row)`.
pub fn parse_rows(text: &str) -> Vec<(usize, std::result::Result<Vec<f64>, String>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| !v.is_nan())
                        .ok_or_else(|| format!("bad number {t:?}"))
                })
                .collect::<std::result::Result<Vec<f64>, String>>();
            Some((i + 1, row))
        })
        .collect()
}

/// Symmetrizes `g` at each input row: exact for rows of dimension at most
/// 10, Monte Carlo with `cfg.samples` permutations (stream `(seed, row)`)
/// above. The first valid row fixes the dimension.
pub fn run_symmetrize(cfg: &ExperimentConfig, input: &str) -> Result<SymmetrizeReport> {
    let mut dim: Option<usize> = None;
    let mut estimand: Option<Estimand> = None;
    let mut records = Vec::new();
    for (row, parsed) in parse_rows(input) {
        let result = parsed.and_then(|coords| {
            let n = coords.len();
            match dim {
                Some(d) if d != n => return Err(format!("row has {n} values, expected {d}")),
                None => {
                    let g = catalog::parse_estimand(&cfg.estimand, n).map_err(|e| e.to_string())?;
                    dim = Some(n);
                    estimand = Some(g);
                }
                _ => {}
            }
            let g = estimand.as_ref().expect("set with dim");
            let x = Point::new(coords).map_err(|e| e.to_string())?;
            let y = symcore::order_statistics(&x);
            let est = if n <= MAX_ENUM_DIM {
                McEstimate::exact(
                    symmetrize::symmetrize_exact(g, y.point()).map_err(|e| e.to_string())?,
                    n,
                )
            } else {
                symmetrize::symmetrize_mc(
                    g,
                    y.point(),
                    cfg.samples,
                    &mut stream(cfg.seed, row as u64),
                )
                .map_err(|e| e.to_string())?
            };
            Ok((y, est))
        });
        records.push(match result {
            Ok((y, est)) => SymmetrizeRecord {
                row,
                order_statistics: Some(y.coords().to_vec()),
                estimate: Some(est),
                error: None,
            },
            Err(error) => SymmetrizeRecord {
                row,
                order_statistics: None,
                estimate: None,
                error: Some(error),
            },
        });
    }
    let error_rows = records.iter().filter(|r| r.error.is_some()).count();
    Ok(SymmetrizeReport {
        estimand: cfg.estimand.clone(),
        records,
        error_rows,
    })
}
