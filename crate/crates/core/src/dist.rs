//! Exchangeable laws in two forms: exact finitely supported pmfs for the
//! brute-force oracles, and seeded samplers for statistical experiments.
//!
//! # Text format
//!
//! ```text
//! dim 2
//! 0 0 0.49
//! 0 1 0.21
//! 1 0 0.21
//! 1 1 0.09
//! ```
//!
//! A `dim n` header, then one atom per line: `n` coordinates followed by the
//! probability. Blank lines and `#` comments are ignored. Probabilities must
//! sum to 1 within [`LOAD_TOLERANCE`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::perm::{self, factorial};
use crate::symcore::{Point, PointSet};
use crate::MAX_ENUM_DIM;

/// Largest support (or enumeration work) for constructed pmfs.
pub const MAX_ATOMS: usize = 100_000;
/// Normalization tolerance for programmatic construction.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Normalization tolerance when reading the text format.
pub const LOAD_TOLERANCE: f64 = 1e-9;

/// A probability mass function on finitely many n-vectors. Only atoms with
/// positive mass are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FinitePmf {
    dim: usize,
    atoms: BTreeMap<Point, f64>,
}

impl FinitePmf {
    /// Builds a pmf; repeated points have their masses added.
    pub fn new<I: IntoIterator<Item = (Point, f64)>>(dim: usize, atoms: I) -> Result<Self> {
        Self::with_tolerance(dim, atoms, NORMALIZATION_TOLERANCE)
    }

    pub fn with_tolerance<I: IntoIterator<Item = (Point, f64)>>(
        dim: usize,
        atoms: I,
        tol: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyPoint);
        }
        let mut map = BTreeMap::new();
        for (x, p) in atoms {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidProbability(p));
            }
            *map.entry(x).or_insert(0.0) += p;
        }
        map.retain(|_, p| *p > 0.0);
        if map.len() > MAX_ATOMS {
            return Err(Error::Bounds {
                what: "support size",
                value: map.len(),
                cap: MAX_ATOMS,
                hint: "",
            });
        }
        let total = total_mass(map.values().copied());
        if (total - 1.0).abs() > tol {
            return Err(Error::Normalization { total, tol });
        }
        Ok(FinitePmf { dim, atoms: map })
    }

    /// Builds from mass already known to sum to one.
    pub(crate) fn from_map(dim: usize, atoms: BTreeMap<Point, f64>) -> Self {
        FinitePmf { dim, atoms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass at `x`, zero off the support.
    pub fn prob(&self, x: &Point) -> f64 {
        self.atoms.get(x).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.atoms.iter().map(|(x, &p)| (x, p))
    }

    pub fn support(&self) -> PointSet {
        PointSet::from_points(self.dim, self.atoms.keys().cloned())
            .expect("atoms share the pmf dimension")
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(self.atoms.values().copied())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for (x, p) in &self.atoms {
            for v in x.coords() {
                let _ = write!(s, "{v} ");
            }
            let _ = writeln!(s, "{p}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut atoms = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let Some(n) = dim else {
                let mut it = line.split_whitespace();
                let n = match (it.next(), it.next(), it.next()) {
                    (Some("dim"), Some(n), None) => n
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n >= 1)
                        .ok_or_else(|| parse_err(format!("bad dimension {n:?}")))?,
                    _ => return Err(parse_err("expected header `dim n`".into())),
                };
                dim = Some(n);
                continue;
            };
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(format!("bad number {t:?}")))
                })
                .collect::<Result<_>>()?;
            if fields.len() != n + 1 {
                return Err(parse_err(format!(
                    "expected {} fields, found {}",
                    n + 1,
                    fields.len()
                )));
            }
            let p = fields[n];
            let x = Point::new(fields[..n].to_vec()).map_err(|e| parse_err(e.to_string()))?;
            if atoms.insert(x.clone(), p).is_some() {
                return Err(parse_err(format!("duplicate atom {x}")));
            }
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            message: "missing `dim n` header".into(),
        })?;
        FinitePmf::with_tolerance(dim, atoms, LOAD_TOLERANCE)
    }
}

impl std::str::FromStr for FinitePmf {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FinitePmf::from_text(s)
    }
}

fn total_mass<I: IntoIterator<Item = f64>>(ps: I) -> f64 {
    ps.into_iter()
        .collect::<crate::stats::NeumaierSum>()
        .total()
}

fn validate_marginal(marginal: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut merged: BTreeMap<Point, f64> = BTreeMap::new();
    for &(v, p) in marginal {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidProbability(p));
        }
        *merged.entry(Point::new(vec![v])?).or_insert(0.0) += p;
    }
    let total = total_mass(merged.values().copied());
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization {
            total,
            tol: NORMALIZATION_TOLERANCE,
        });
    }
    Ok(merged
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(v, p)| (v.coords()[0], p))
        .collect())
}

fn check_product_cap(support: usize, n: usize) -> Result<()> {
    let size = (support as f64).powi(n as i32);
    if n == 0 || size > MAX_ATOMS as f64 {
        return Err(Error::Bounds {
            what: "product support size",
            value: size.min(usize::MAX as f64) as usize,
            cap: MAX_ATOMS,
            hint: "",
        });
    }
    Ok(())
}

/// Calls `f(values, probs)` for every index tuple in `k^n`.
fn for_each_tuple(marginal: &[(f64, f64)], n: usize, mut f: impl FnMut(&[f64], &mut Vec<f64>)) {
    let k = marginal.len();
    let mut idx = vec![0usize; n];
    let mut values = vec![0.0; n];
    let mut probs = Vec::with_capacity(n);
    loop {
        probs.clear();
        for (j, &i) in idx.iter().enumerate() {
            values[j] = marginal[i].0;
            probs.push(marginal[i].1);
        }
        f(&values, &mut probs);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Product of factors taken in sorted order, so rearranged tuples give
/// bitwise-equal products.
fn sorted_product(factors: &mut [f64]) -> f64 {
    factors.sort_by(|a, b| a.total_cmp(b));
    factors.iter().product()
}

/// Law of `n` iid draws from a finite marginal given as `(value, prob)` pairs.
pub fn make_iid_pmf(marginal: &[(f64, f64)], n: usize) -> Result<FinitePmf> {
    make_mixture_pmf(&[(1.0, marginal.to_vec())], n)
}

/// `sum_j w_j * (marginal_j)^{⊗n}`.
pub fn make_mixture_pmf(components: &[(f64, Vec<(f64, f64)>)], n: usize) -> Result<FinitePmf> {
    if components.is_empty() {
        return Err(Error::InvalidParameter("mixture needs a component".into()));
    }
    validate_marginal(
        &components
            .iter()
            .map(|(w, _)| (0.0, *w))
            .collect::<Vec<_>>(),
    )?;
    let mut atoms: BTreeMap<Point, f64> = BTreeMap::new();
    for (w, marginal) in components {
        if *w == 0.0 {
            continue;
        }
        let marginal = validate_marginal(marginal)?;
        check_product_cap(marginal.len(), n)?;
        for_each_tuple(&marginal, n, |values, probs| {
            let p = w * sorted_product(probs);
            *atoms
                .entry(Point::from_ordered(values.to_vec()))
                .or_insert(0.0) += p;
        });
    }
    FinitePmf::new(n, atoms)
}

/// Bernoulli(p) marginal on {0, 1}.
pub fn bernoulli(p: f64) -> Vec<(f64, f64)> {
    vec![(0.0, 1.0 - p), (1.0, p)]
}

/// Law of `n` ordered draws without replacement from the multiset `values`.
pub fn make_urn_pmf(values: &[f64], n: usize) -> Result<FinitePmf> {
    let m = values.len();
    if n == 0 || n > m {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {n} values from an urn of {m}"
        )));
    }
    if let Some(index) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Unordered { index });
    }
    let sequences: f64 = (m - n + 1..=m).map(|k| k as f64).product();
    if sequences > MAX_ATOMS as f64 {
        return Err(Error::Bounds {
            what: "ordered draw count",
            value: sequences as usize,
            cap: MAX_ATOMS,
            hint: "",
        });
    }
    let mut counts: BTreeMap<Point, u64> = BTreeMap::new();
    let mut used = vec![false; m];
    let mut cur = Vec::with_capacity(n);
    fn rec(
        values: &[f64],
        n: usize,
        used: &mut [bool],
        cur: &mut Vec<f64>,
        counts: &mut BTreeMap<Point, u64>,
    ) {
        if cur.len() == n {
            *counts.entry(Point::from_ordered(cur.clone())).or_insert(0) += 1;
            return;
        }
        for i in 0..values.len() {
            if !used[i] {
                used[i] = true;
                cur.push(values[i]);
                rec(values, n, used, cur, counts);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(values, n, &mut used, &mut cur, &mut counts);
    let total = sequences;
    FinitePmf::new(n, counts.into_iter().map(|(x, c)| (x, c as f64 / total)))
}

/// Orbit average `q(x) = (1/n!) sum_p p(apply(p, x))`: the exchangeable
/// projection of any pmf.
pub fn symmetrize_pmf(p: &FinitePmf) -> Result<FinitePmf> {
    let n = p.dim();
    perm::check_enum_dim(n)?;
    let work = p.len() as f64 * factorial(n) as f64;
    if work > MAX_ATOMS as f64 {
        return Err(Error::Bounds {
            what: "support size times n!",
            value: work as usize,
            cap: MAX_ATOMS,
            hint: "",
        });
    }
    let mut q: BTreeMap<Point, f64> = BTreeMap::new();
    for (x, px) in p.iter() {
        // Each distinct rearrangement of x is hit by the same number of
        // permutations, so the atom's mass spreads evenly over them.
        let k = perm::multiset_permutation_count(x.coords())? as f64;
        for r in perm::distinct_rearrangements(x.coords()) {
            *q.entry(Point::from_ordered(r)).or_insert(0.0) += px / k;
        }
    }
    Ok(FinitePmf::from_map(n, q))
}

/// Whether `p(x) = p(x with coordinates i, i+1 swapped)` within `tol` for
/// every atom and every adjacent pair.
pub fn is_exchangeable(p: &FinitePmf, tol: f64) -> bool {
    if p.dim() > MAX_ENUM_DIM {
        return false;
    }
    p.iter().all(|(x, px)| {
        (0..p.dim().saturating_sub(1)).all(|i| {
            let mut v = x.coords().to_vec();
            v.swap(i, i + 1);
            (p.prob(&Point::from_ordered(v)) - px).abs() <= tol
        })
    })
}

/// A one-dimensional law used as a sampler marginal.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Uniform {
        low: f64,
        high: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Finite law as `(value, prob)` pairs.
    Discrete(Vec<(f64, f64)>),
}

impl Marginal {
    pub fn bernoulli(p: f64) -> Self {
        Marginal::Discrete(bernoulli(p))
    }

    fn validate(self) -> Result<Self> {
        match &self {
            Marginal::Uniform { low, high }
                if !(low < high && high.is_finite() && low.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "uniform bounds {low} < {high} required"
                )))
            }
            Marginal::Normal { mean, sd } if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "normal sd {sd} must be positive"
                )))
            }
            Marginal::Exponential { rate } if !(*rate > 0.0 && rate.is_finite()) => Err(
                Error::InvalidParameter(format!("exponential rate {rate} must be positive")),
            ),
            Marginal::Discrete(m) => Ok(Marginal::Discrete(validate_marginal(m)?)),
            _ => Ok(self),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Marginal::Discrete(_))
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            Marginal::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Marginal::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Marginal::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Marginal::Discrete(m) => pick(m, rng.random::<f64>()),
        }
    }

    fn label(&self) -> String {
        match self {
            Marginal::Uniform { low, high } => format!("uniform({low},{high})"),
            Marginal::Normal { mean, sd } => format!("normal({mean},{sd})"),
            Marginal::Exponential { rate } => format!("exponential({rate})"),
            Marginal::Discrete(m) => {
                let parts: Vec<String> = m.iter().map(|(v, p)| format!("{v}:{p}")).collect();
                format!("discrete({})", parts.join(","))
            }
        }
    }
}

/// Inverse-cdf pick from `(value, weight)` pairs.
fn pick<T: Copy>(items: &[(T, f64)], u: f64) -> T {
    let mut acc = 0.0;
    for &(v, p) in items {
        acc += p;
        if u < acc {
            return v;
        }
    }
    items.last().expect("nonempty").0
}

/// A seeded generator of exchangeable n-vectors.
pub trait Sampler: Send + Sync {
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn draw(&self, rng: &mut dyn RngCore) -> Point;
    /// Ties occur with probability zero.
    fn is_continuous(&self) -> bool;
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct IidSampler {
    marginal: Marginal,
    n: usize,
}

pub fn sampler_iid(marginal: Marginal, n: usize) -> Result<IidSampler> {
    check_n(n)?;
    Ok(IidSampler {
        marginal: marginal.validate()?,
        n,
    })
}

impl Sampler for IidSampler {
    fn name(&self) -> String {
        format!("iid-{}", self.marginal.label())
    }
    fn dimension(&self) -> usize {
        self.n
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Point {
        Point::from_ordered((0..self.n).map(|_| self.marginal.sample(rng)).collect())
    }
    fn is_continuous(&self) -> bool {
        self.marginal.is_continuous()
    }
}

/// `X_i = sqrt(rho) Z_0 + sqrt(1 - rho) Z_i` with iid standard normal `Z`.
#[derive(Clone, Debug)]
pub struct EquicorrelatedGaussian {
    n: usize,
    rho: f64,
}

pub fn sampler_equicorrelated_gaussian(n: usize, rho: f64) -> Result<EquicorrelatedGaussian> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "rho = {rho} outside [0, 1]"
        )));
    }
    Ok(EquicorrelatedGaussian { n, rho })
}

impl Sampler for EquicorrelatedGaussian {
    fn name(&self) -> String {
        format!("gaussian(rho={})", self.rho)
    }
    fn dimension(&self) -> usize {
        self.n
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Point {
        let common = self.rho.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let own = (1.0 - self.rho).sqrt();
        Point::from_ordered(
            (0..self.n)
                .map(|_| common + own * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
    }
    fn is_continuous(&self) -> bool {
        self.rho < 1.0
    }
}

/// Ordered draws without replacement.
#[derive(Clone, Debug)]
pub struct UrnSampler {
    values: Vec<f64>,
    n: usize,
}

pub fn sampler_urn(values: Vec<f64>, n: usize) -> Result<UrnSampler> {
    check_n(n)?;
    if n > values.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {n} values from an urn of {}",
            values.len()
        )));
    }
    if let Some(index) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Unordered { index });
    }
    Ok(UrnSampler { values, n })
}

impl Sampler for UrnSampler {
    fn name(&self) -> String {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        format!("urn({})", parts.join(","))
    }
    fn dimension(&self) -> usize {
        self.n
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Point {
        // Partial forward Fisher-Yates: the first n slots are a uniform
        // ordered sample.
        let mut v = self.values.clone();
        let m = v.len();
        for i in 0..self.n {
            let j = rng.random_range(i..m);
            v.swap(i, j);
        }
        v.truncate(self.n);
        Point::from_ordered(v)
    }
    fn is_continuous(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug)]
pub struct DiracDiagonal {
    c: f64,
    n: usize,
}

/// Every draw is `(c, ..., c)`.
pub fn sampler_dirac_diagonal(c: f64, n: usize) -> Result<DiracDiagonal> {
    check_n(n)?;
    if c.is_nan() {
        return Err(Error::Unordered { index: 0 });
    }
    Ok(DiracDiagonal { c, n })
}

impl Sampler for DiracDiagonal {
    fn name(&self) -> String {
        format!("dirac({})", self.c)
    }
    fn dimension(&self) -> usize {
        self.n
    }
    fn draw(&self, _rng: &mut dyn RngCore) -> Point {
        Point::from_ordered(vec![self.c; self.n])
    }
    fn is_continuous(&self) -> bool {
        false
    }
}

/// Picks a component by weight, then draws iid from its marginal.
#[derive(Clone, Debug)]
pub struct MixtureIidSampler {
    components: Vec<(Marginal, f64)>,
    n: usize,
}

pub fn sampler_mixture_iid(
    components: Vec<(f64, Marginal)>,
    n: usize,
) -> Result<MixtureIidSampler> {
    check_n(n)?;
    if components.is_empty() {
        return Err(Error::InvalidParameter("mixture needs a component".into()));
    }
    validate_marginal(
        &components
            .iter()
            .map(|(w, _)| (0.0, *w))
            .collect::<Vec<_>>(),
    )?;
    let components = components
        .into_iter()
        .map(|(w, m)| Ok((m.validate()?, w)))
        .collect::<Result<_>>()?;
    Ok(MixtureIidSampler { components, n })
}

impl Sampler for MixtureIidSampler {
    fn name(&self) -> String {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|(m, w)| format!("{w}*{}", m.label()))
            .collect();
        format!("mixture({})", parts.join("+"))
    }
    fn dimension(&self) -> usize {
        self.n
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Point {
        let idx: Vec<(usize, f64)> = self
            .components
            .iter()
            .enumerate()
            .map(|(i, (_, w))| (i, *w))
            .collect();
        let k = pick(&idx, rng.random::<f64>());
        let m = &self.components[k].0;
        Point::from_ordered((0..self.n).map(|_| m.sample(rng)).collect())
    }
    fn is_continuous(&self) -> bool {
        self.components.iter().all(|(m, _)| m.is_continuous())
    }
}
