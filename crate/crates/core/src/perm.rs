//! Permutations of `0..n`: enumeration, uniform sampling, algebra and ranks.
//!
//! A [`Perm`] acts on vectors by `apply(p, x)[i] = x[p[i]]`, so output
//! coordinate `i` is input coordinate `p(i)`.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symcore::Point;
use crate::MAX_ENUM_DIM;

/// Largest dimension accepted by [`multiset_permutation_count`] (20! < 2^63).
pub const MAX_COUNT_DIM: usize = 20;

const ENUM_HINT: &str = "; use Monte Carlo symmetrization for larger dimensions";

/// A bijection of `0..n`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &i in &mapping {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(mapping));
            }
        }
        Ok(Perm(mapping))
    }

    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `out[i] = src[self[i]]`. Panics if lengths differ.
    pub fn apply_slice<T: Copy>(&self, src: &[T]) -> Vec<T> {
        assert_eq!(src.len(), self.len(), "permutation length mismatch");
        self.0.iter().map(|&j| src[j]).collect()
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.check_len(x.dim())?;
        Ok(Point::from_ordered(self.apply_slice(x.coords())))
    }

    pub fn invert(&self) -> Perm {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    /// The permutation `r` with `apply(r, x) = apply(self, apply(other, x))`.
    pub fn compose(&self, other: &Perm) -> Result<Perm> {
        self.check_len(other.len())?;
        Ok(Perm(self.0.iter().map(|&i| other.0[i]).collect()))
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str(")")
    }
}

/// The permutation sorting a point into nondecreasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankVector {
    pub perm: Perm,
    /// Some two coordinates of the source are exactly equal.
    pub tie_flag: bool,
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub(crate) fn check_enum_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ENUM_DIM {
        return Err(Error::Bounds {
            what: "n",
            value: n,
            cap: MAX_ENUM_DIM,
            hint: ENUM_HINT,
        });
    }
    Ok(())
}

/// Steps `a` to its lexicographic successor; returns `false` (leaving `a`
/// untouched) at the last arrangement. Repeated values yield each distinct
/// arrangement once.
pub fn next_permutation<T: PartialOrd>(a: &mut [T]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Visits every arrangement of `buf` by Heap's algorithm: `n!` visits, each
/// differing from the previous one by a single transposition. `buf` is left
/// in some arrangement of its original contents.
pub fn heap_visit<T, F: FnMut(&[T])>(buf: &mut [T], mut visit: F) {
    let n = buf.len();
    let mut c = vec![0usize; n];
    visit(buf);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                buf.swap(0, i);
            } else {
                buf.swap(c[i], i);
            }
            visit(buf);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// All `n!` permutations in lexicographic order of their mappings.
pub fn enumerate_permutations_lex(n: usize) -> Result<Vec<Perm>> {
    check_enum_dim(n)?;
    let mut out = Vec::with_capacity(factorial(n) as usize);
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Perm(cur.clone()));
        if !next_permutation(&mut cur) {
            break;
        }
    }
    Ok(out)
}

/// All `n!` permutations in Heap's minimal-change order.
pub fn enumerate_permutations_heap(n: usize) -> Result<Vec<Perm>> {
    check_enum_dim(n)?;
    let mut out = Vec::with_capacity(factorial(n) as usize);
    let mut cur: Vec<usize> = (0..n).collect();
    heap_visit(&mut cur, |p| out.push(Perm(p.to_vec())));
    Ok(out)
}

/// Uniform random permutation by the backward swap (Fisher-Yates) construction.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Perm> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "permutation length must be >= 1".into(),
        ));
    }
    let mut p: Vec<usize> = (0..n).collect();
    shuffle(&mut p, rng);
    Ok(Perm(p))
}

pub(crate) fn shuffle<T, R: Rng + ?Sized>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

pub fn apply_permutation(p: &Perm, x: &Point) -> Result<Point> {
    p.apply(x)
}

pub fn invert(p: &Perm) -> Perm {
    p.invert()
}

pub fn compose(p: &Perm, q: &Perm) -> Result<Perm> {
    p.compose(q)
}

/// Number of distinct rearrangements of `x`: `n! / prod(m_i!)` over the
/// multiplicities of its distinct values.
pub fn multiset_permutation_count(x: &[f64]) -> Result<u64> {
    let n = x.len();
    if n == 0 || n > MAX_COUNT_DIM {
        return Err(Error::Bounds {
            what: "dimension",
            value: n,
            cap: MAX_COUNT_DIM,
            hint: "",
        });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    // Product of binomials C(seen + m, m) over runs of equal values.
    let mut count: u128 = 1;
    let mut seen: u128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        for k in 1..=(j - i) as u128 {
            seen += 1;
            count = count * seen / k;
        }
        i = j;
    }
    Ok(count as u64)
}

/// Stable-sort permutation; ties keep their original relative order.
pub(crate) fn stable_sort_perm(x: &[f64]) -> Perm {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    Perm(idx)
}

pub fn rank_vector(x: &[f64]) -> Result<RankVector> {
    if let Some(index) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::Unordered { index });
    }
    let perm = stable_sort_perm(x);
    let tie_flag = perm.0.windows(2).any(|w| x[w[0]] == x[w[1]]);
    Ok(RankVector { perm, tie_flag })
}

/// Distinct rearrangements of `x` in lexicographic order.
pub(crate) fn distinct_rearrangements(x: &[f64]) -> impl Iterator<Item = Vec<f64>> {
    let mut cur = x.to_vec();
    cur.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = cur.clone();
        done = !next_permutation(&mut cur);
        Some(out)
    })
}
