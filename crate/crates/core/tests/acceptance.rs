//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use exsuff::dist::FinitePmf;
use exsuff::harness::{self, catalog, Command, ExperimentConfig};
use exsuff::oracle::{self, ConditionalLaw};
use exsuff::perm;
use exsuff::stats::Moments;
use exsuff::stream;
use exsuff::symcore::{self, Point, PointSet, SortedPoint};
use exsuff::symmetrize::{self, Estimand};

const TOL: f64 = 1e-12;
const SEED: u64 = 20240611;
/// p-value of the seeded Gaussian rank-uniformity run, pinned after the
/// first run as a regression anchor.
const GAUSSIAN_P_ANCHOR: f64 = 0.44115367194117316;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within_time(v: Verdict, elapsed: Duration, limit_secs: f64) -> Verdict {
    let secs = elapsed.as_secs_f64();
    let ok = secs < limit_secs;
    verdict(
        v.pass && ok,
        format!("{}; {secs:.2} s (limit {limit_secs} s)", v.detail),
    )
}

fn exchangeable_fixtures() -> Vec<catalog::Fixture> {
    catalog::default_fixtures(&mut stream(SEED, 0))
        .into_iter()
        .filter(|f| !f.negative_control)
        .collect()
}

fn conditional_exactness() -> Verdict {
    let start = Instant::now();
    let fixtures = exchangeable_fixtures();
    let mut worst = (0.0f64, String::new());
    for fx in &fixtures {
        let r = oracle::compare_conditional(&fx.pmf, TOL);
        if r.max_abs_discrepancy >= worst.0 {
            worst = (r.max_abs_discrepancy, fx.name.clone());
        }
    }
    within_time(
        verdict(
            worst.0 <= TOL,
            format!(
                "max discrepancy {:.3e} ({}) over {} fixtures",
                worst.0,
                worst.1,
                fixtures.len()
            ),
        ),
        start.elapsed(),
        5.0,
    )
}

fn distribution_independence() -> Verdict {
    let fixtures = exchangeable_fixtures();
    let mut by_y: BTreeMap<Point, Vec<(String, ConditionalLaw)>> = BTreeMap::new();
    for fx in &fixtures {
        for (y, _) in oracle::order_statistics_pmf(&fx.pmf).iter() {
            let sorted = SortedPoint::new(y.clone()).expect("order statistics are sorted");
            let law = oracle::conditional_law_bruteforce(&fx.pmf, &sorted).expect("positive mass");
            by_y.entry(y.clone())
                .or_default()
                .push((fx.name.clone(), law));
        }
    }
    let mut worst = 0.0f64;
    let mut pairs = 0u64;
    for (y, laws) in &by_y {
        let formula =
            oracle::conditional_law_formula(&SortedPoint::new(y.clone()).unwrap()).unwrap();
        for (i, (_, a)) in laws.iter().enumerate() {
            worst = worst.max(a.max_abs_difference(&formula).0);
            for (_, b) in &laws[i + 1..] {
                worst = worst.max(a.max_abs_difference(b).0);
                pairs += 1;
            }
        }
    }
    verdict(
        worst <= TOL && pairs > 0,
        format!(
            "max discrepancy {worst:.3e} over {pairs} fixture pairs at {} shared atoms",
            by_y.values().filter(|v| v.len() > 1).count()
        ),
    )
}

fn integrated_identity() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0u64;
    for (i, fx) in exchangeable_fixtures().iter().enumerate() {
        assert!(fx.pmf.dim() <= 4);
        let sets = catalog::fuzz_point_sets(
            &fx.pmf,
            harness::FUZZED_SETS,
            &mut stream(SEED, 100 + i as u64),
        );
        let estimands = catalog::catalog_estimands(&fx.pmf, &sets[0]);
        assert_eq!(estimands.len(), 6);
        for g in &estimands {
            for b in &sets {
                worst = worst.max(oracle::verify_integrated_identity(&fx.pmf, g, b).unwrap());
                cases += 1;
            }
        }
    }
    let control = catalog::negative_control();
    let full = symcore::symmetric_closure(&control.support()).unwrap();
    let d = oracle::verify_integrated_identity(&control, &Estimand::projection(0), &full).unwrap();
    verdict(
        worst <= TOL && (d - 0.1).abs() <= TOL,
        format!("max discrepancy {worst:.3e} over {cases} cases; negative control {d:.15}"),
    )
}

fn negative_control_detection() -> Verdict {
    let r = oracle::compare_conditional(&catalog::negative_control(), TOL);
    verdict(
        (r.max_abs_discrepancy - 0.1).abs() <= TOL && !r.within_tolerance,
        format!(
            "discrepancy {:.15} at {}",
            r.max_abs_discrepancy, r.worst_case
        ),
    )
}

fn rao_blackwell() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Command::RaoBlackwell);
    cfg.seed = SEED;
    cfg.n = 2;
    cfg.samples = 1_000_000;
    cfg.sampler = "uniform".into();
    cfg.estimand = "proj:0".into();
    let r = harness::run_rao_blackwell(&cfg).unwrap().comparison;
    let raw_ok = (0.0825..=0.0842).contains(&r.var_raw);
    let rb_ok = (0.0408..=0.0425).contains(&r.var_rb);

    let samplers = [
        "uniform",
        "gaussian:0.5",
        "exponential",
        "urn:1,2,3,4,5",
        "mixture:0.5@0.1,0.5@0.9",
        "dirac:2",
    ];
    let mut violations = Vec::new();
    let mut cells = 0;
    for (i, spec) in samplers.iter().enumerate() {
        let sampler = catalog::parse_sampler(spec, 3).unwrap();
        // Estimand catalog built against a unit atom at (0,1,2), so the
        // threshold sits at 0.
        let pmf_like =
            FinitePmf::new(3, [(Point::new(vec![0.0, 1.0, 2.0]).unwrap(), 1.0)]).unwrap();
        let b = PointSet::from_rows(3, &[vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 2.0]]).unwrap();
        for (j, g) in catalog::catalog_estimands(&pmf_like, &b).iter().enumerate() {
            let c = symmetrize::rao_blackwell_compare_parallel(
                sampler.as_ref(),
                g,
                100_000,
                SEED + (i * 10 + j) as u64,
                8,
            )
            .unwrap();
            cells += 1;
            if c.var_rb > c.var_raw {
                violations.push(format!("{spec}/{}: {} > {}", g.name(), c.var_rb, c.var_raw));
            }
        }
    }
    within_time(
        verdict(
            raw_ok && rb_ok && violations.is_empty(),
            format!(
                "var raw {:.5}, var symmetrized {:.5}; dominance on {}/{cells} grid cells{}",
                r.var_raw,
                r.var_rb,
                cells - violations.len(),
                if violations.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", violations.join("; "))
                }
            ),
        ),
        start.elapsed(),
        30.0,
    )
}

fn rank_uniformity() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(Command::RankUniformity);
    cfg.seed = SEED;
    cfg.n = 3;
    cfg.samples = 60_000;
    cfg.sampler = "gaussian:0.5".into();
    let single = harness::run_rank_uniformity(&cfg).unwrap();
    let anchored = (single.p_value - GAUSSIAN_P_ANCHOR).abs() <= 1e-12;

    let mut study_cfg = ExperimentConfig::new(Command::RankUniformity);
    study_cfg.seed = SEED;
    study_cfg.n = 3;
    study_cfg.samples = 30_000;
    study_cfg.sampler = "uniform".into();
    study_cfg.replicates = 200;
    study_cfg.alpha = 0.05;
    let study = harness::run_rank_uniformity_replicates(&study_cfg).unwrap();
    within_time(
        verdict(
            single.p_value > 0.001
                && !single.degenerate
                && anchored
                && (0.02..=0.09).contains(&study.rejection_rate),
            format!(
                "gaussian p = {:.17} (anchor {}); uniform rejection rate {:.3} over {} replicates",
                single.p_value,
                if anchored { "ok" } else { "MISMATCH" },
                study.rejection_rate,
                study.replicates.len()
            ),
        ),
        start.elapsed(),
        60.0,
    )
}

fn enumerator_cross_check() -> Verdict {
    let start = Instant::now();
    let mut sizes = Vec::new();
    let mut ok = true;
    for n in 1..=8 {
        let mut lex = perm::enumerate_permutations_lex(n).unwrap();
        let mut heap = perm::enumerate_permutations_heap(n).unwrap();
        let expected = perm::factorial(n) as usize;
        lex.sort();
        heap.sort();
        lex.dedup();
        heap.dedup();
        ok &= lex.len() == expected && heap.len() == expected && lex == heap;
        sizes.push(lex.len().to_string());
    }
    within_time(
        verdict(ok, format!("set sizes {}", sizes.join(","))),
        start.elapsed(),
        10.0,
    )
}

fn mc_unbiasedness() -> Verdict {
    let y = Point::new(vec![0.0, 1.0, 2.0]).unwrap();
    let g = Estimand::projection(0);
    let exact = symmetrize::symmetrize_exact(&g, &y).unwrap();
    let mut rng = stream(SEED, 0);
    let mut grand = Moments::new();
    for _ in 0..10_000 {
        grand.push(
            symmetrize::symmetrize_mc(&g, &y, 8, &mut rng)
                .unwrap()
                .value,
        );
    }
    let gap = (grand.mean() - exact).abs();
    verdict(
        gap <= 3.0 * grand.std_error(),
        format!(
            "grand mean {:.5} vs exact {exact}; gap {gap:.2e} <= 3 SE = {:.2e}",
            grand.mean(),
            3.0 * grand.std_error()
        ),
    )
}

fn chi_square() -> Verdict {
    let mut worst = 0.0f64;
    for k in 1..=100 {
        let x = k as f64 / 10.0;
        let got = harness::chi_square_sf(x, 2).unwrap();
        worst = worst.max((got - (-x / 2.0).exp()).abs());
    }
    let df1 = harness::chi_square_sf(3.8414588, 1).unwrap();
    verdict(
        worst <= 1e-10 && (df1 - 0.05).abs() <= 1e-6,
        format!("df=2 max error {worst:.2e}; df=1 at 3.8414588 = {df1:.10}"),
    )
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let rows = dir.path().join("rows.txt");
    std::fs::write(&rows, "2,0,1\n0.5 0.25 0.75\n1,2,3,4,5,6,7,8,9,10,11\n").unwrap();
    let rows = rows.to_str().unwrap();
    let runs: [&[&str]; 5] = [
        &["verify-conditional"],
        &["rank-uniformity", "--samples", "6000"],
        &["rank-uniformity", "--samples", "3000", "--replicates", "4"],
        &[
            "rao-blackwell",
            "--samples",
            "20000",
            "--estimand",
            "wsum:1,2,3",
        ],
        &["symmetrize", "--input", rows, "--samples", "64"],
    ];
    let mut failures = Vec::new();
    for args in runs {
        let outputs: Vec<_> = (0..2)
            .map(|_| {
                Process::new(env!("CARGO_BIN_EXE_exsuff"))
                    .args(["--seed", "7"])
                    .args(args)
                    .env_remove(harness::SEED_ENV)
                    .output()
                    .unwrap()
            })
            .collect();
        let valid = serde_json::from_slice::<serde_json::Value>(&outputs[0].stdout).is_ok();
        if !valid
            || outputs[0].stdout != outputs[1].stdout
            || outputs[0].status != outputs[1].status
        {
            failures.push(args[0]);
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} command configurations byte-identical across runs",
                runs.len()
            )
        } else {
            format!("differing output: {}", failures.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("conditional-law exactness", conditional_exactness),
        ("distribution independence", distribution_independence),
        ("integrated identity", integrated_identity),
        ("negative control detection", negative_control_detection),
        ("rao-blackwell variance", rao_blackwell),
        ("rank uniformity", rank_uniformity),
        ("enumerator cross-check", enumerator_cross_check),
        ("monte carlo unbiasedness", mc_unbiasedness),
        ("chi-square tail", chi_square),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "[{}] {:>2} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
