//! Brute-force conditional laws of a finite pmf given its order statistics,
//! computed by restricting to a fiber `{x : sort(x) = y}` and renormalizing,
//! and their comparison with the permutation formula
//!
//! ```text
//! P(X = x | Y = y) = #{p : apply(p, y) = x} / n!
//! ```
//!
//! which takes no distribution argument at all. The brute-force side never
//! calls into [`crate::symmetrize`] or the formula, so agreement is a real
//! check rather than a restatement.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dist::FinitePmf;
use crate::error::{Error, Result};
use crate::perm;
use crate::stats::NeumaierSum;
use crate::symcore::{self, Point, PointSet, SortedPoint};
use crate::symmetrize::{symmetrize_exact, Estimand};

/// The law of `X` given `Y = given`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalLaw {
    pub given: SortedPoint,
    weights: BTreeMap<Point, f64>,
}

impl ConditionalLaw {
    /// Weight of `x`, zero off the fiber.
    pub fn weight(&self, x: &Point) -> f64 {
        self.weights.get(x).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.weights.iter().map(|(x, &w)| (x, w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total weight on the points of `b`.
    pub fn mass_on(&self, b: &PointSet) -> f64 {
        self.weights
            .iter()
            .filter(|(x, _)| b.contains(x))
            .map(|(_, &w)| w)
            .collect::<NeumaierSum>()
            .total()
    }

    /// Largest atom-wise weight difference; absent atoms count as zero.
    pub fn max_abs_difference(&self, other: &ConditionalLaw) -> (f64, Option<Point>) {
        let mut worst = (0.0, None);
        for x in self.weights.keys().chain(other.weights.keys()) {
            let d = (self.weight(x) - other.weight(x)).abs();
            if d > worst.0 {
                worst = (d, Some(x.clone()));
            }
        }
        worst
    }
}

impl Serialize for ConditionalLaw {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Atom<'a> {
            point: &'a Point,
            weight: f64,
        }
        #[derive(Serialize)]
        struct Law<'a> {
            given: &'a SortedPoint,
            weights: Vec<Atom<'a>>,
        }
        Law {
            given: &self.given,
            weights: self
                .weights
                .iter()
                .map(|(point, &weight)| Atom { point, weight })
                .collect(),
        }
        .serialize(s)
    }
}

/// Outcome of an exhaustive comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub check: String,
    pub max_abs_discrepancy: f64,
    pub worst_case: String,
    pub cases_checked: u64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

impl DiscrepancyReport {
    fn new(check: &str, max: f64, worst_case: String, cases: u64, tol: f64) -> Self {
        DiscrepancyReport {
            check: check.into(),
            max_abs_discrepancy: max,
            worst_case,
            cases_checked: cases,
            tolerance: tol,
            within_tolerance: max <= tol,
        }
    }
}

/// Law of the order statistics: the pushforward of `p` under sorting.
pub fn order_statistics_pmf(p: &FinitePmf) -> FinitePmf {
    let mut out: BTreeMap<Point, NeumaierSum> = BTreeMap::new();
    for (x, px) in p.iter() {
        out.entry(symcore::order_statistics(x).into_point())
            .or_default()
            .add(px);
    }
    FinitePmf::from_map(
        p.dim(),
        out.into_iter().map(|(y, s)| (y, s.total())).collect(),
    )
}

/// Atoms of `p` grouped by the fiber they sort to.
fn fibers(p: &FinitePmf) -> BTreeMap<SortedPoint, Vec<(&Point, f64)>> {
    let mut out: BTreeMap<SortedPoint, Vec<(&Point, f64)>> = BTreeMap::new();
    for (x, px) in p.iter() {
        out.entry(symcore::order_statistics(x))
            .or_default()
            .push((x, px));
    }
    out
}

fn law_from_fiber(y: &SortedPoint, atoms: &[(&Point, f64)]) -> Result<ConditionalLaw> {
    let mass = atoms
        .iter()
        .map(|(_, p)| *p)
        .collect::<NeumaierSum>()
        .total();
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::NullConditioning(y.to_string()));
    }
    Ok(ConditionalLaw {
        given: y.clone(),
        weights: atoms
            .iter()
            .map(|(x, p)| ((*x).clone(), p / mass))
            .collect(),
    })
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `P(X = x | Y = y) = p(x) / P(Y = y)` over the atoms sorting to `y`.
pub fn conditional_law_bruteforce(p: &FinitePmf, y: &SortedPoint) -> Result<ConditionalLaw> {
    check_dim(p.dim(), y.dim())?;
    let fiber: Vec<(&Point, f64)> = p
        .iter()
        .filter(|(x, _)| symcore::order_statistics(x) == *y)
        .collect();
    law_from_fiber(y, &fiber)
}

/// The permutation formula: each distinct rearrangement `x` of `y` gets
/// `#{p : apply(p, y) = x} / n!`. That count is `prod(m_i!)` for every `x`,
/// so the weight is `1 / multiset_permutation_count(y)`.
pub fn conditional_law_formula(y: &SortedPoint) -> Result<ConditionalLaw> {
    perm::check_enum_dim(y.dim())?;
    let k = perm::multiset_permutation_count(y.coords())? as f64;
    Ok(ConditionalLaw {
        given: y.clone(),
        weights: perm::distinct_rearrangements(y.coords())
            .map(|r| (Point::from_ordered(r), 1.0 / k))
            .collect(),
    })
}

/// `E[g(X) | Y = y]` from the brute-force conditional law.
pub fn conditional_expectation_bruteforce(
    p: &FinitePmf,
    g: &Estimand,
    y: &SortedPoint,
) -> Result<f64> {
    g.check_dimension(y.dim())?;
    let law = conditional_law_bruteforce(p, y)?;
    Ok(law
        .iter()
        .map(|(x, w)| w * g.eval_point(x))
        .collect::<NeumaierSum>()
        .total())
}

/// Compares brute-force and formula conditional laws on every fiber of `p`
/// with positive mass.
pub fn compare_conditional(p: &FinitePmf, tol: f64) -> DiscrepancyReport {
    let fibers = fibers(p);
    let per_fiber: Vec<(f64, String)> = fibers
        .par_iter()
        .map(|(y, atoms)| {
            let brute = law_from_fiber(y, atoms);
            let formula = conditional_law_formula(y);
            match (brute, formula) {
                (Ok(b), Ok(f)) => {
                    let (d, at) = b.max_abs_difference(&f);
                    let desc = match at {
                        Some(x) => format!(
                            "y={y} atom={x}: bruteforce {} vs formula {}",
                            b.weight(&x),
                            f.weight(&x)
                        ),
                        None => format!("y={y}"),
                    };
                    (d, desc)
                }
                (Err(e), _) | (_, Err(e)) => (f64::INFINITY, format!("y={y}: {e}")),
            }
        })
        .collect();
    let mut worst = (0.0, String::from("none"));
    for (d, desc) in per_fiber {
        if d > worst.0 {
            worst = (d, desc);
        }
    }
    DiscrepancyReport::new(
        "conditional-law",
        worst.0,
        worst.1,
        fibers.len() as u64,
        tol,
    )
}

/// `|LHS - RHS|` for the integrated identity on `A = {X ∈ closure(b ∩ cone)}`:
///
/// ```text
/// LHS = sum_x p(x) 1_A(x) g(x)
/// RHS = sum_x p(x) 1_A(x) symmetrize(g)(sort(x))
/// ```
pub fn verify_integrated_identity(p: &FinitePmf, g: &Estimand, b: &PointSet) -> Result<f64> {
    check_dim(p.dim(), b.dim())?;
    g.check_dimension(p.dim())?;
    let event = symcore::symmetric_closure(&b.intersect_cone())?;
    let mut lhs = NeumaierSum::new();
    let mut rhs = NeumaierSum::new();
    for (x, px) in p.iter() {
        if !event.contains(x) {
            continue;
        }
        // h(x) = 1_A(x) g(x)
        lhs.add(px * g.eval_point(x));
        let y = symcore::order_statistics(x);
        rhs.add(px * symmetrize_exact(g, y.point())?);
    }
    Ok((lhs.total() - rhs.total()).abs())
}

/// Largest [`verify_integrated_identity`] value over estimands and point sets.
pub fn integrated_identity_report(
    p: &FinitePmf,
    estimands: &[Estimand],
    sets: &[PointSet],
    tol: f64,
) -> Result<DiscrepancyReport> {
    let mut worst = (0.0, String::from("none"));
    let mut cases = 0;
    for g in estimands {
        for (i, b) in sets.iter().enumerate() {
            let d = verify_integrated_identity(p, g, b)?;
            cases += 1;
            if d > worst.0 {
                worst = (d, format!("g={} set#{i} ({} points)", g.name(), b.len()));
            }
        }
    }
    Ok(DiscrepancyReport::new(
        "integrated-identity",
        worst.0,
        worst.1,
        cases,
        tol,
    ))
}

/// Runs [`symcore::event_equivalence_check`] on the support of `p` for each
/// set; the discrepancy is the number of failing sets.
pub fn event_equivalence_report(p: &FinitePmf, sets: &[PointSet]) -> Result<DiscrepancyReport> {
    let support = p.support();
    let mut failures = 0u64;
    let mut first = String::from("none");
    for (i, b) in sets.iter().enumerate() {
        if !symcore::event_equivalence_check(&support, b)? {
            if failures == 0 {
                first = format!("set#{i}");
            }
            failures += 1;
        }
    }
    Ok(DiscrepancyReport::new(
        "event-equivalence",
        failures as f64,
        first,
        sets.len() as u64,
        0.0,
    ))
}
