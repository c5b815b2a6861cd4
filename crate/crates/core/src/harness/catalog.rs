//! Named samplers, estimands and pmf fixtures reachable from the CLI.
//!
//! Sampler specs (dimension comes from `--n`):
//!
//! | spec                  | law                                        |
//! |-----------------------|--------------------------------------------|
//! | `uniform[:a,b]`       | iid Uniform(a, b), default (0, 1)          |
//! | `normal[:mean,sd]`    | iid Normal, default (0, 1)                 |
//! | `exponential[:rate]`  | iid Exponential, default rate 1            |
//! | `bernoulli:p`         | iid Bernoulli(p)                           |
//! | `gaussian:rho`        | equicorrelated standard Gaussian           |
//! | `urn:v1,v2,...`       | ordered draws without replacement          |
//! | `dirac:c`             | the point (c, ..., c)                      |
//! | `mixture:w@p,...`     | mixture of iid Bernoulli(p) with weights w |
//!
//! Estimand specs: `proj:k` (zero-based), `wsum:w1,...,wn`, `sum`, `product`,
//! `max`, `threshold:t` (1{x_0 <= t}), `constant:c`,
//! `indicator:x1,x2;y1,y2;...`.

use rand::Rng;

use crate::dist::{self, FinitePmf, Marginal, Sampler};
use crate::error::{Error, Result};
use crate::symcore::{self, Point, PointSet};
use crate::symmetrize::Estimand;

fn bad(spec: &str, why: &str) -> Error {
    Error::InvalidParameter(format!("{spec:?}: {why}"))
}

fn numbers(spec: &str, args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| bad(spec, "expected numbers"))?;
            if v.is_nan() {
                Err(bad(spec, "NaN parameter"))
            } else {
                Ok(v)
            }
        })
        .collect()
}

fn split(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((head, args)) => (head.trim(), Some(args)),
        None => (spec.trim(), None),
    }
}

fn exact<const N: usize>(
    spec: &str,
    args: Option<&str>,
    default: Option<[f64; N]>,
) -> Result<[f64; N]> {
    match (args, default) {
        (None, Some(d)) => Ok(d),
        (None, None) => Err(bad(spec, "missing parameters")),
        (Some(a), _) => numbers(spec, a)?
            .try_into()
            .map_err(|_| bad(spec, &format!("expected {N} parameter(s)"))),
    }
}

pub fn parse_sampler(spec: &str, n: usize) -> Result<Box<dyn Sampler>> {
    let (head, args) = split(spec);
    Ok(match head {
        "uniform" => {
            let [low, high] = exact(spec, args, Some([0.0, 1.0]))?;
            Box::new(dist::sampler_iid(Marginal::Uniform { low, high }, n)?)
        }
        "normal" => {
            let [mean, sd] = exact(spec, args, Some([0.0, 1.0]))?;
            Box::new(dist::sampler_iid(Marginal::Normal { mean, sd }, n)?)
        }
        "exponential" => {
            let [rate] = exact(spec, args, Some([1.0]))?;
            Box::new(dist::sampler_iid(Marginal::Exponential { rate }, n)?)
        }
        "bernoulli" => {
            let [p] = exact(spec, args, None)?;
            check_unit(spec, p)?;
            Box::new(dist::sampler_iid(Marginal::bernoulli(p), n)?)
        }
        "gaussian" => {
            let [rho] = exact(spec, args, None)?;
            Box::new(dist::sampler_equicorrelated_gaussian(n, rho)?)
        }
        "urn" => {
            let values = numbers(spec, args.ok_or_else(|| bad(spec, "missing values"))?)?;
            Box::new(dist::sampler_urn(values, n)?)
        }
        "dirac" => {
            let [c] = exact(spec, args, None)?;
            Box::new(dist::sampler_dirac_diagonal(c, n)?)
        }
        "mixture" => {
            let args = args.ok_or_else(|| bad(spec, "missing components"))?;
            let mut components = Vec::new();
            for part in args.split(',') {
                let (w, p) = part
                    .split_once('@')
                    .ok_or_else(|| bad(spec, "components are weight@p"))?;
                let w: f64 = w.trim().parse().map_err(|_| bad(spec, "bad weight"))?;
                let p: f64 = p.trim().parse().map_err(|_| bad(spec, "bad probability"))?;
                check_unit(spec, p)?;
                components.push((w, Marginal::bernoulli(p)));
            }
            Box::new(dist::sampler_mixture_iid(components, n)?)
        }
        _ => return Err(bad(spec, "unknown sampler")),
    })
}

fn check_unit(spec: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(bad(spec, "probability outside [0, 1]"));
    }
    Ok(())
}

/// Parses an estimand and checks it against dimension `n`.
pub fn parse_estimand(spec: &str, n: usize) -> Result<Estimand> {
    let (head, args) = split(spec);
    let no_args = |e: Estimand| match args {
        None => Ok(e),
        Some(_) => Err(bad(spec, "takes no parameters")),
    };
    let g = match head {
        "proj" => {
            let [k] = exact(spec, args, None)?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(bad(spec, "index must be a nonnegative integer"));
            }
            Estimand::projection(k as usize)
        }
        "wsum" => Estimand::weighted_sum(numbers(
            spec,
            args.ok_or_else(|| bad(spec, "missing weights"))?,
        )?),
        "sum" => no_args(Estimand::sum())?,
        "product" => no_args(Estimand::product())?,
        "max" => no_args(Estimand::maximum())?,
        "threshold" => Estimand::threshold(exact::<1>(spec, args, None)?[0]),
        "constant" => Estimand::constant(exact::<1>(spec, args, None)?[0]),
        "indicator" => {
            let args = args.ok_or_else(|| bad(spec, "missing points"))?;
            let mut set = PointSet::empty(n);
            for row in args.split(';').filter(|r| !r.trim().is_empty()) {
                set.insert(Point::new(numbers(spec, row)?)?)?;
            }
            Estimand::indicator(&set)
        }
        _ => return Err(bad(spec, "unknown estimand")),
    };
    g.check_dimension(n)?;
    Ok(g)
}

/// A named pmf and whether it is meant to be exchangeable.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub pmf: FinitePmf,
    pub negative_control: bool,
}

impl Fixture {
    fn new(name: impl Into<String>, pmf: FinitePmf) -> Self {
        Fixture {
            name: name.into(),
            pmf,
            negative_control: false,
        }
    }
}

/// The non-exchangeable pmf `{(0,1): 0.6, (1,0): 0.4}`.
pub fn negative_control() -> FinitePmf {
    FinitePmf::new(
        2,
        [
            (Point::from_ordered(vec![0.0, 1.0]), 0.6),
            (Point::from_ordered(vec![1.0, 0.0]), 0.4),
        ],
    )
    .expect("valid fixture")
}

/// A random pmf on `{0,1,2}^n` with 1 to 6 atoms (at most `3^n`) and
/// integer weights, not exchangeable in general.
pub fn random_pmf<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FinitePmf {
    let grid = 3usize.saturating_pow(n.min(u32::MAX as usize) as u32);
    let atoms = rng.random_range(1..=grid.min(6));
    let mut points = Vec::with_capacity(atoms);
    while points.len() < atoms {
        let p = Point::from_ordered((0..n).map(|_| rng.random_range(0..3) as f64).collect());
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let weights: Vec<f64> = points
        .iter()
        .map(|_| rng.random_range(1..=8) as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    FinitePmf::new(
        n,
        points
            .into_iter()
            .zip(weights.into_iter().map(|w| w / total)),
    )
    .expect("normalized by construction")
}

/// Exchangeable fixtures plus the negative control. Random members are
/// drawn from `rng`.
pub fn default_fixtures<R: Rng + ?Sized>(rng: &mut R) -> Vec<Fixture> {
    let mut out = Vec::new();
    for n in [2, 3, 4] {
        out.push(Fixture::new(
            format!("iid-bernoulli(0.3) n={n}"),
            dist::make_iid_pmf(&dist::bernoulli(0.3), n).expect("fixture"),
        ));
    }
    for n in [2, 3] {
        out.push(Fixture::new(
            format!("mixture(0.5*bernoulli(0.1)+0.5*bernoulli(0.9)) n={n}"),
            dist::make_mixture_pmf(
                &[(0.5, dist::bernoulli(0.1)), (0.5, dist::bernoulli(0.9))],
                n,
            )
            .expect("fixture"),
        ));
    }
    for urn in [[1.0, 1.0, 2.0], [1.0, 2.0, 3.0]] {
        out.push(Fixture::new(
            format!("urn{urn:?} n=2"),
            dist::make_urn_pmf(&urn, 2).expect("fixture"),
        ));
    }
    for i in 0..20 {
        let n = 2 + i % 2;
        let raw = random_pmf(n, rng);
        out.push(Fixture::new(
            format!("symmetrized-random#{i} n={n}"),
            dist::symmetrize_pmf(&raw).expect("fixture"),
        ));
    }
    out.push(Fixture::new(
        "dirac(2) n=3",
        dist::make_iid_pmf(&[(2.0, 1.0)], 3).expect("fixture"),
    ));
    out.push(Fixture {
        name: "negative-control".into(),
        pmf: negative_control(),
        negative_control: true,
    });
    out
}

/// Fixtures loaded from text files; non-exchangeable laws are treated as
/// negative controls.
pub fn fixtures_from_files(paths: &[String]) -> Result<Vec<Fixture>> {
    paths
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)?;
            let pmf = FinitePmf::from_text(&text).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{path}: {message}"),
                },
                other => other,
            })?;
            let negative_control = !dist::is_exchangeable(&pmf, 1e-12);
            Ok(Fixture {
                name: path.clone(),
                pmf,
                negative_control,
            })
        })
        .collect()
}

/// Random point sets built from support atoms, their sorted versions and
/// values just outside the support.
pub fn fuzz_point_sets<R: Rng + ?Sized>(
    pmf: &FinitePmf,
    count: usize,
    rng: &mut R,
) -> Vec<PointSet> {
    let atoms: Vec<&Point> = pmf.iter().map(|(x, _)| x).collect();
    let mut values: Vec<f64> = atoms
        .iter()
        .flat_map(|x| x.coords().iter().copied())
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values.push(values.last().copied().unwrap_or(0.0) + 1.0);
    let n = pmf.dim();
    (0..count)
        .map(|_| {
            let size = rng.random_range(1..=4usize);
            let mut set = PointSet::empty(n);
            for _ in 0..size {
                let p = match rng.random_range(0..4) {
                    0 | 1 => atoms[rng.random_range(0..atoms.len())].clone(),
                    2 => symcore::order_statistics(atoms[rng.random_range(0..atoms.len())])
                        .into_point(),
                    _ => Point::from_ordered(
                        (0..n)
                            .map(|_| values[rng.random_range(0..values.len())])
                            .collect(),
                    ),
                };
                set.insert(p).expect("dimension matches");
            }
            set
        })
        .collect()
}

/// One of each catalog estimand, adapted to `pmf`: projection, weighted sum,
/// product, maximum, indicator of `b`, threshold at the smallest support value.
pub fn catalog_estimands(pmf: &FinitePmf, b: &PointSet) -> Vec<Estimand> {
    let n = pmf.dim();
    let min = pmf
        .iter()
        .flat_map(|(x, _)| x.coords().iter().copied())
        .fold(f64::INFINITY, f64::min);
    vec![
        Estimand::projection(0),
        Estimand::weighted_sum((1..=n).map(|i| i as f64).collect()),
        Estimand::product(),
        Estimand::maximum(),
        Estimand::indicator(b),
        Estimand::threshold(min),
    ]
}
