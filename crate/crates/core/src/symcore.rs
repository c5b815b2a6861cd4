//! Points, the nondecreasing cone and symmetric closures of finite point sets.
//!
//! A "Borel set" is represented here by a finite [`PointSet`]. The symmetric
//! closure of `b` is the set of all coordinate rearrangements of its points,
//! and the order-statistic event `{sort(x) in b}` coincides with
//! `{x in closure(b ∩ cone)}`; [`event_equivalence_check`] evaluates both sides
//! over a finite support.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perm::{self, Perm};
use crate::MAX_ENUM_DIM;

/// Lexicographic order on coordinate slices. Callers never pass NaN.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or_else(|| x.total_cmp(y)) {
            Ordering::Equal => {}
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// An n-vector of ordered reals, `n >= 1`.
///
/// Negative zero is normalized to zero so that equality is exact IEEE
/// equality and the lexicographic order is total.
#[derive(Clone)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some(index) = coords.iter().position(|v| v.is_nan()) {
            return Err(Error::Unordered { index });
        }
        Ok(Self::from_ordered(coords))
    }

    /// Caller guarantees no NaN coordinates.
    pub(crate) fn from_ordered(mut coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| !v.is_nan()));
        for v in coords.iter_mut() {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        lex_cmp(&self.0, &other.0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl TryFrom<&[f64]> for Point {
    type Error = Error;
    fn try_from(v: &[f64]) -> Result<Self> {
        Point::new(v.to_vec())
    }
}

/// A point of the cone `x_1 <= ... <= x_n`: a realization of the order
/// statistics.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
#[serde(transparent)]
pub struct SortedPoint(Point);

impl SortedPoint {
    pub fn new(point: Point) -> Result<Self> {
        if is_in_cone(&point) {
            Ok(SortedPoint(point))
        } else {
            Err(Error::NotSorted)
        }
    }

    pub fn point(&self) -> &Point {
        &self.0
    }

    pub fn into_point(self) -> Point {
        self.0
    }

    pub fn coords(&self) -> &[f64] {
        self.0.coords()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl fmt::Display for SortedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite set of points of one dimension, kept in lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointSet {
    dim: usize,
    points: BTreeSet<Point>,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet {
            dim,
            points: BTreeSet::new(),
        }
    }

    /// Builds a set from points of dimension `dim`; duplicates collapse.
    pub fn from_points<I: IntoIterator<Item = Point>>(dim: usize, points: I) -> Result<Self> {
        let mut set = PointSet::empty(dim);
        for p in points {
            set.insert(p)?;
        }
        Ok(set)
    }

    /// Convenience constructor from raw coordinate rows.
    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut set = PointSet::empty(dim);
        for r in rows {
            set.insert(Point::try_from(r.as_ref())?)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, p: Point) -> Result<bool> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.dim(),
            });
        }
        Ok(self.points.insert(p))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.contains(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> + '_ {
        self.points.iter()
    }

    /// The points of `self` lying in the cone.
    pub fn intersect_cone(&self) -> PointSet {
        PointSet {
            dim: self.dim,
            points: self
                .points
                .iter()
                .filter(|p| is_in_cone(p))
                .cloned()
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::collections::btree_set::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// The sorting map: the nondecreasing rearrangement of `x` together with the
/// stable-sort permutation producing it.
pub fn sort_to_cone(x: &Point) -> (SortedPoint, Perm) {
    let perm = perm::stable_sort_perm(x.coords());
    let sorted = perm.apply_slice(x.coords());
    (SortedPoint(Point::from_ordered(sorted)), perm)
}

/// The order statistics of `x`.
pub fn order_statistics(x: &Point) -> SortedPoint {
    let mut v = x.coords().to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    SortedPoint(Point::from_ordered(v))
}

pub fn is_in_cone(x: &Point) -> bool {
    x.coords().windows(2).all(|w| w[0] <= w[1])
}

fn check_dim_cap(dim: usize) -> Result<()> {
    if dim > MAX_ENUM_DIM {
        return Err(Error::Bounds {
            what: "dimension",
            value: dim,
            cap: MAX_ENUM_DIM,
            hint: "",
        });
    }
    Ok(())
}

/// All distinct rearrangements of every point of `b`.
pub fn symmetric_closure(b: &PointSet) -> Result<PointSet> {
    check_dim_cap(b.dim())?;
    let mut out = PointSet::empty(b.dim());
    for p in b {
        for r in perm::distinct_rearrangements(p.coords()) {
            out.points.insert(Point::from_ordered(r));
        }
    }
    Ok(out)
}

/// Whether `b` is closed under every coordinate permutation. Adjacent
/// transpositions generate the symmetric group, so only `n - 1` swaps per
/// point are tested.
pub fn is_symmetric_set(b: &PointSet) -> Result<bool> {
    check_dim_cap(b.dim())?;
    let mut buf = Vec::with_capacity(b.dim());
    for p in b {
        for i in 0..b.dim().saturating_sub(1) {
            buf.clear();
            buf.extend_from_slice(p.coords());
            buf.swap(i, i + 1);
            if !b.points.contains(&Point::from_ordered(buf.clone())) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// For every `x` in `support`, evaluates `sort(x) ∈ b` and
/// `x ∈ closure(b ∩ cone)` and reports whether they always agree.
pub fn event_equivalence_check(support: &PointSet, b: &PointSet) -> Result<bool> {
    if support.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: support.dim(),
            found: b.dim(),
        });
    }
    let closure = symmetric_closure(&b.intersect_cone())?;
    Ok(support.iter().all(|x| {
        let (y, _) = sort_to_cone(x);
        b.contains(y.point()) == closure.contains(x)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::try_from(v).unwrap()
    }

    fn set(dim: usize, rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(dim, rows).unwrap()
    }

    #[test]
    fn point_rejects_nan_and_empty() {
        assert_eq!(Point::new(vec![]).unwrap_err(), Error::EmptyPoint);
        assert_eq!(
            Point::new(vec![1.0, f64::NAN]).unwrap_err(),
            Error::Unordered { index: 1 }
        );
    }

    #[test]
    fn negative_zero_equals_zero() {
        assert_eq!(pt(&[-0.0, 1.0]), pt(&[0.0, 1.0]));
    }

    #[test]
    fn sort_to_cone_examples() {
        let (y, p) = sort_to_cone(&pt(&[2.0, 1.0]));
        assert_eq!(y.coords(), &[1.0, 2.0]);
        assert_eq!(p.as_slice(), &[1, 0]);

        let (y, p) = sort_to_cone(&pt(&[1.0, 1.0, 0.5]));
        assert_eq!(y.coords(), &[0.5, 1.0, 1.0]);
        assert_eq!(p.as_slice(), &[2, 0, 1]);

        let x = pt(&[-1.0, 0.0, 0.0, 4.0]);
        let (y, p) = sort_to_cone(&x);
        assert_eq!(y.point(), &x);
        assert_eq!(p, Perm::identity(4));
    }

    #[test]
    fn cone_membership() {
        assert!(is_in_cone(&pt(&[1.0, 2.0, 2.0])));
        assert!(!is_in_cone(&pt(&[2.0, 1.0])));
        assert!(is_in_cone(&pt(&[7.0])));
        assert_eq!(
            SortedPoint::new(pt(&[2.0, 1.0])).unwrap_err(),
            Error::NotSorted
        );
    }

    #[test]
    fn closure_examples() {
        assert_eq!(
            symmetric_closure(&set(2, &[&[1.0, 2.0]])).unwrap(),
            set(2, &[&[1.0, 2.0], &[2.0, 1.0]])
        );
        assert_eq!(
            symmetric_closure(&set(2, &[&[1.0, 1.0]])).unwrap(),
            set(2, &[&[1.0, 1.0]])
        );
        let c = symmetric_closure(&set(3, &[&[1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(c.len(), 6);
        let first: Vec<_> = c.iter().map(|p| p.coords().to_vec()).collect();
        assert_eq!(first[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(first[5], vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn closure_respects_cap() {
        let b = set(11, &[&[0.0; 11]]);
        assert!(matches!(symmetric_closure(&b), Err(Error::Bounds { .. })));
        assert!(matches!(is_symmetric_set(&b), Err(Error::Bounds { .. })));
    }

    #[test]
    fn symmetric_set_examples() {
        assert!(is_symmetric_set(&set(2, &[&[1.0, 2.0], &[2.0, 1.0]])).unwrap());
        assert!(!is_symmetric_set(&set(2, &[&[1.0, 2.0]])).unwrap());
        let b = set(3, &[&[1.0, 2.0, 2.0], &[0.0, 5.0, 1.0]]);
        assert!(is_symmetric_set(&symmetric_closure(&b).unwrap()).unwrap());
        assert!(is_symmetric_set(&PointSet::empty(3)).unwrap());
    }

    #[test]
    fn event_equivalence_examples() {
        let support = set(2, &[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(event_equivalence_check(&support, &set(2, &[&[0.0, 1.0]])).unwrap());
        assert!(event_equivalence_check(&support, &set(2, &[&[1.0, 0.0]])).unwrap());
        let sorted =
            PointSet::from_points(2, support.iter().map(|x| order_statistics(x).into_point()))
                .unwrap();
        assert!(event_equivalence_check(&support, &sorted).unwrap());
        assert!(matches!(
            event_equivalence_check(&support, &PointSet::empty(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn insert_checks_dimension() {
        let mut s = PointSet::empty(2);
        assert!(s.insert(pt(&[1.0])).is_err());
        assert!(s.insert(pt(&[1.0, 2.0])).unwrap());
        assert!(!s.insert(pt(&[1.0, 2.0])).unwrap());
    }
}
