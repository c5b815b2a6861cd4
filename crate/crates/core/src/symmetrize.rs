//! The symmetrization operator
//!
//! ```text
//! E[g(X) | Y] = (1/n!) * sum over permutations p of g(apply(p, Y))
//! ```
//!
//! for exchangeable `X` with order statistics `Y`. Three evaluation routes are
//! provided: full enumeration ([`symmetrize_exact`]), enumeration of distinct
//! rearrangements only ([`symmetrize_multiset`]) and random permutations
//! ([`symmetrize_mc`]). [`rao_blackwell_compare`] measures the variance
//! reduction obtained by replacing `g(X)` with its symmetrization.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::dist::Sampler;
use crate::error::{Error, Result};
use crate::perm::{self, check_enum_dim, factorial};
use crate::stats::{Moments, NeumaierSum};
use crate::symcore::{self, lex_cmp, Point, PointSet};

/// Default number of random permutations for [`symmetrize_mc`].
pub const DEFAULT_MC_DRAWS: u64 = 1024;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Projection(usize),
    WeightedSum(Vec<f64>),
    Sum,
    Product,
    Maximum,
    Indicator {
        rows: Arc<Vec<Vec<f64>>>,
        symmetric: bool,
    },
    Threshold(f64),
    Constant(f64),
    Custom {
        f: EvalFn,
        symmetric: bool,
    },
}

/// A named real-valued function of an n-vector.
///
/// The built-in catalog covers the estimands reachable from the CLI; library
/// callers can wrap any closure with [`Estimand::from_fn`].
#[derive(Clone)]
pub struct Estimand {
    name: String,
    params: Vec<f64>,
    dim: Option<usize>,
    kind: Kind,
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

impl Estimand {
    /// `g(x) = x[k]` (zero-based).
    pub fn projection(k: usize) -> Self {
        Estimand {
            name: "proj".into(),
            params: vec![k as f64],
            dim: None,
            kind: Kind::Projection(k),
        }
    }

    /// `g(x) = sum_i w[i] x[i]`; the dimension is fixed by `w`.
    pub fn weighted_sum(weights: Vec<f64>) -> Self {
        Estimand {
            name: "wsum".into(),
            params: weights.clone(),
            dim: Some(weights.len()),
            kind: Kind::WeightedSum(weights),
        }
    }

    pub fn sum() -> Self {
        Self::simple("sum", Kind::Sum)
    }

    pub fn product() -> Self {
        Self::simple("product", Kind::Product)
    }

    pub fn maximum() -> Self {
        Self::simple("max", Kind::Maximum)
    }

    /// `g(x) = 1{x in b}`.
    pub fn indicator(b: &PointSet) -> Self {
        let symmetric = symcore::is_symmetric_set(b).unwrap_or(false);
        let rows: Vec<Vec<f64>> = b.iter().map(|p| p.coords().to_vec()).collect();
        Estimand {
            name: "indicator".into(),
            params: rows.iter().flatten().copied().collect(),
            dim: Some(b.dim()),
            kind: Kind::Indicator {
                rows: Arc::new(rows),
                symmetric,
            },
        }
    }

    /// `g(x) = 1{x[0] <= t}`.
    pub fn threshold(t: f64) -> Self {
        Estimand {
            name: "threshold".into(),
            params: vec![t],
            dim: None,
            kind: Kind::Threshold(t),
        }
    }

    pub fn constant(c: f64) -> Self {
        Estimand {
            name: "constant".into(),
            params: vec![c],
            dim: None,
            kind: Kind::Constant(c),
        }
    }

    /// Wraps an arbitrary deterministic function. `symmetric` declares that
    /// `f` is invariant under coordinate permutations, which lets the exact
    /// symmetrizers return `f(y)` without enumeration.
    pub fn from_fn<F>(name: impl Into<String>, params: Vec<f64>, symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Estimand {
            name: name.into(),
            params,
            dim: None,
            kind: Kind::Custom {
                f: Arc::new(f),
                symmetric,
            },
        }
    }

    /// `a * g1 + b * g2`.
    pub fn linear_combination(a: f64, g1: &Estimand, b: f64, g2: &Estimand) -> Self {
        let (g1c, g2c) = (g1.clone(), g2.clone());
        let mut e = Estimand::from_fn(
            format!("{a}*{}+{b}*{}", g1.name, g2.name),
            vec![a, b],
            g1.is_symmetric() && g2.is_symmetric(),
            move |x| a * g1c.eval(x) + b * g2c.eval(x),
        );
        e.dim = g1.dim.or(g2.dim);
        e
    }

    fn simple(name: &str, kind: Kind) -> Self {
        Estimand {
            name: name.into(),
            params: Vec::new(),
            dim: None,
            kind,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Whether `g` is known to be invariant under coordinate permutations.
    /// Symmetric catalog members evaluate in an order-independent way, so
    /// their values agree bit for bit across rearrangements.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            Kind::Sum | Kind::Product | Kind::Maximum | Kind::Constant(_) => true,
            Kind::WeightedSum(w) => w.windows(2).all(|p| p[0] == p[1]),
            Kind::Indicator { symmetric, .. } | Kind::Custom { symmetric, .. } => *symmetric,
            Kind::Projection(_) | Kind::Threshold(_) => false,
        }
    }

    /// Fails unless `g` is defined on points of dimension `n`.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if let Some(d) = self.dim {
            if d != n {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: n,
                });
            }
        }
        if let Kind::Projection(k) = self.kind {
            if k >= n {
                return Err(Error::InvalidParameter(format!(
                    "projection index {k} out of range for dimension {n}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Projection(k) => x[*k],
            Kind::WeightedSum(w) => {
                if self.is_symmetric() {
                    w.first().copied().unwrap_or(0.0) * sorted_copy(x).iter().sum::<f64>()
                } else {
                    w.iter().zip(x).map(|(a, b)| a * b).sum()
                }
            }
            Kind::Sum => sorted_copy(x).iter().sum(),
            Kind::Product => sorted_copy(x).iter().product(),
            Kind::Maximum => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Kind::Indicator { rows, .. } => {
                if rows.binary_search_by(|r| lex_cmp(r, x)).is_ok() {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Threshold(t) => {
                if x[0] <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Constant(c) => *c,
            Kind::Custom { f, .. } => f(x),
        }
    }

    pub fn eval_point(&self, x: &Point) -> f64 {
        self.eval(x.coords())
    }
}

impl fmt::Debug for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Estimand")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

/// Result of a symmetrization, exact or Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: u64,
    pub exact: bool,
}

impl McEstimate {
    pub fn exact(value: f64, n: usize) -> Self {
        McEstimate {
            value,
            std_error: 0.0,
            draws: factorial(n),
            exact: true,
        }
    }
}

/// Raw versus symmetrized estimator statistics over one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbComparison {
    pub mean_raw: f64,
    pub var_raw: f64,
    pub mean_rb: f64,
    pub var_rb: f64,
    pub samples: u64,
    pub se_mean_raw: f64,
    pub se_mean_rb: f64,
    pub se_var_raw: f64,
    pub se_var_rb: f64,
}

impl RbComparison {
    fn from_moments(raw: &Moments, rb: &Moments) -> Self {
        RbComparison {
            mean_raw: raw.mean(),
            var_raw: raw.variance(),
            mean_rb: rb.mean(),
            var_rb: rb.variance(),
            samples: raw.count(),
            se_mean_raw: raw.std_error(),
            se_mean_rb: rb.std_error(),
            se_var_raw: raw.variance_std_error(),
            se_var_rb: rb.variance_std_error(),
        }
    }

    /// `var_rb / var_raw`, undefined when the raw variance is zero.
    pub fn variance_ratio(&self) -> Option<f64> {
        (self.var_raw > 0.0).then(|| self.var_rb / self.var_raw)
    }

    /// `|mean_rb - mean_raw| <= 3 se_raw + 3 se_rb`.
    pub fn means_agree(&self) -> bool {
        (self.mean_rb - self.mean_raw).abs() <= 3.0 * self.se_mean_raw + 3.0 * self.se_mean_rb
    }

    /// `var_rb <= var_raw + 3 se(var_rb)`.
    pub fn variance_dominated(&self) -> bool {
        self.var_rb <= self.var_raw + 3.0 * self.se_var_rb
    }
}

/// Average of `g` over all `n!` rearrangements of `y`, with compensated
/// summation. Symmetric estimands short-circuit to `g(y)`.
pub fn symmetrize_exact(g: &Estimand, y: &Point) -> Result<f64> {
    let n = y.dim();
    check_enum_dim(n)?;
    g.check_dimension(n)?;
    if g.is_symmetric() {
        return Ok(g.eval(y.coords()));
    }
    let mut buf = y.coords().to_vec();
    let mut acc = NeumaierSum::new();
    perm::heap_visit(&mut buf, |r| acc.add(g.eval(r)));
    Ok(acc.total() / factorial(n) as f64)
}

/// Same value as [`symmetrize_exact`], summing once per distinct
/// rearrangement. Each distinct rearrangement arises from `prod(m_i!)` of the
/// `n!` permutations, so its weight is `1 / multiset_permutation_count(y)`.
pub fn symmetrize_multiset(g: &Estimand, y: &Point) -> Result<f64> {
    let n = y.dim();
    check_enum_dim(n)?;
    g.check_dimension(n)?;
    let count = perm::multiset_permutation_count(y.coords())?;
    let mut acc = NeumaierSum::new();
    for r in perm::distinct_rearrangements(y.coords()) {
        acc.add(g.eval(&r));
    }
    Ok(acc.total() / count as f64)
}

/// Average of `g` over `m` independent uniform random rearrangements of `y`.
pub fn symmetrize_mc<R: Rng + ?Sized>(
    g: &Estimand,
    y: &Point,
    m: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    g.check_dimension(y.dim())?;
    let mut buf = y.coords().to_vec();
    let mut acc = Moments::new();
    for _ in 0..m {
        perm::shuffle(&mut buf, rng);
        acc.push(g.eval(&buf));
    }
    Ok(McEstimate {
        value: acc.mean(),
        std_error: acc.std_error(),
        draws: m,
        exact: false,
    })
}

/// Draws `samples` vectors from `sampler` and accumulates `g(X)` alongside
/// its exact symmetrization at the order statistics of `X`.
pub fn rao_blackwell_compare(
    sampler: &dyn Sampler,
    g: &Estimand,
    samples: u64,
    rng: &mut dyn RngCore,
) -> Result<RbComparison> {
    let (raw, rb) = rao_blackwell_moments(sampler, g, samples, rng)?;
    Ok(RbComparison::from_moments(&raw, &rb))
}

pub(crate) fn rao_blackwell_moments(
    sampler: &dyn Sampler,
    g: &Estimand,
    samples: u64,
    rng: &mut dyn RngCore,
) -> Result<(Moments, Moments)> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let n = sampler.dimension();
    check_enum_dim(n)?;
    g.check_dimension(n)?;
    let mut raw = Moments::new();
    let mut rb = Moments::new();
    for _ in 0..samples {
        let x = sampler.draw(rng);
        raw.push(g.eval(x.coords()));
        let y = symcore::order_statistics(&x);
        rb.push(symmetrize_exact(g, y.point())?);
    }
    Ok((raw, rb))
}

/// Runs [`rao_blackwell_compare`] split over `workers` sub-streams derived
/// from `seed`, merging the accumulators in worker order.
pub fn rao_blackwell_compare_parallel(
    sampler: &dyn Sampler,
    g: &Estimand,
    samples: u64,
    seed: u64,
    workers: u64,
) -> Result<RbComparison> {
    use rayon::prelude::*;
    let workers = workers.clamp(1, samples.max(1) / 2);
    let base = samples / workers;
    let parts: Vec<Result<(Moments, Moments)>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let share = base + u64::from(w < samples % workers);
            let mut rng = crate::stream(seed, w);
            rao_blackwell_moments(sampler, g, share, &mut rng)
        })
        .collect();
    let mut raw = Moments::new();
    let mut rb = Moments::new();
    for part in parts {
        let (a, b) = part?;
        raw = raw.merge(&a);
        rb = rb.merge(&b);
    }
    Ok(RbComparison::from_moments(&raw, &rb))
}
