//! Multi-indices and the graded index lattice `{alpha : |alpha| <= N}`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of lattice members.
pub const DEFAULT_LATTICE_CAP: usize = 5000;

/// Exponent vector `alpha` in `N_0^d`.
///
/// Ordered graded-lexicographically: lower total degree first, and within a
/// grade the first differing coordinate that is larger comes first, so
/// `(2,0) < (1,1) < (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-index must have at least one coordinate".into(),
            ));
        }
        Ok(MultiIndex(entries))
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// The unit vector `e_j` (0-based axis).
    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `self + e_j` (0-based axis), unbounded.
    pub fn raised(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[j] += 1;
        MultiIndex(v)
    }

    /// `self - e_j`, or `None` when coordinate `j` is zero.
    pub fn lowered(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when componentwise non-negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u32>>>()
            .map(MultiIndex)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `binomial(d + N, N)` or `None` on overflow.
pub fn lattice_size(d: usize, order: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for k in 1..=(order as u128) {
        acc = acc.checked_mul(d as u128 + k)? / k;
    }
    Some(acc)
}

/// The set `[N] = {alpha in N_0^d : |alpha| <= N}` in graded-lex order,
/// with precomputed shift tables.
#[derive(Clone, Debug)]
pub struct IndexLattice {
    d: usize,
    order: usize,
    members: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    /// `up[j][k]` = position of `members[k] + e_j`, if inside `[N]`.
    up: Vec<Vec<Option<usize>>>,
    /// `down[j][k]` = position of `members[k] - e_j`, if non-negative.
    down: Vec<Vec<Option<usize>>>,
}

impl IndexLattice {
    pub fn new(d: usize, order: usize) -> Result<Self> {
        Self::with_cap(d, order, DEFAULT_LATTICE_CAP)
    }

    pub fn with_cap(d: usize, order: usize, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension d must be >= 1".into()));
        }
        let n = lattice_size(d, order).unwrap_or(u128::MAX);
        if n > cap as u128 {
            return Err(Error::ResourceCap {
                what: "lattice size",
                requested: n,
                cap: cap as u128,
            });
        }
        let mut members = Vec::with_capacity(n as usize);
        for grade in 0..=order {
            let mut current = vec![0u32; d];
            compositions(grade as u32, 0, &mut current, &mut members);
        }
        let position: HashMap<MultiIndex, usize> = members
            .iter()
            .enumerate()
            .map(|(k, m)| (m.clone(), k))
            .collect();
        let up = (0..d)
            .map(|j| {
                members
                    .iter()
                    .map(|m| {
                        if m.degree() < order {
                            position.get(&m.raised(j)).copied()
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let down = (0..d)
            .map(|j| {
                members
                    .iter()
                    .map(|m| m.lowered(j).and_then(|l| position.get(&l).copied()))
                    .collect()
            })
            .collect();
        Ok(Self {
            d,
            order,
            members,
            position,
            up,
            down,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn member(&self, k: usize) -> &MultiIndex {
        &self.members[k]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    /// Position of `members[k] + e_j` (0-based axis).
    #[inline]
    pub fn up(&self, j: usize, k: usize) -> Option<usize> {
        self.up[j][k]
    }

    /// Position of `members[k] - e_j` (0-based axis).
    #[inline]
    pub fn down(&self, j: usize, k: usize) -> Option<usize> {
        self.down[j][k]
    }

    /// Position of `members[k] - gamma`, if non-negative.
    pub fn minus(&self, k: usize, gamma: &MultiIndex) -> Option<usize> {
        self.members[k]
            .checked_sub(gamma)
            .and_then(|m| self.position(&m))
    }

    /// Position of `members[k] + gamma`, if inside `[N]`.
    pub fn plus(&self, k: usize, gamma: &MultiIndex) -> Option<usize> {
        self.position(&self.members[k].add(gamma))
    }
}

fn compositions(remaining: u32, coord: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let d = current.len();
    if coord == d - 1 {
        current[coord] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for a in (0..=remaining).rev() {
        current[coord] = a;
        compositions(remaining - a, coord + 1, current, out);
    }
    current[coord] = 0;
}

/// `alpha + e_j` when it stays inside the lattice; `j` is 1-based.
pub fn shift_index(
    alpha: &MultiIndex,
    j: usize,
    lattice: &IndexLattice,
) -> Result<Option<MultiIndex>> {
    if alpha.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            got: alpha.dim(),
        });
    }
    if j == 0 || j > lattice.dim() {
        return Err(Error::InvalidArgument(format!(
            "axis {j} out of range 1..={}",
            lattice.dim()
        )));
    }
    if lattice.position(alpha).is_none() {
        return Err(Error::InvalidArgument(format!(
            "{alpha} is not in the lattice"
        )));
    }
    let shifted = alpha.raised(j - 1);
    Ok((shifted.degree() <= lattice.order()).then_some(shifted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_variable_chain() {
        let l = IndexLattice::new(1, 3).unwrap();
        assert_eq!(l.members(), &[mi(&[0]), mi(&[1]), mi(&[2]), mi(&[3])]);
    }

    #[test]
    fn three_variables_order_two() {
        let l = IndexLattice::new(3, 2).unwrap();
        assert_eq!(l.len(), 10);
        let expected = [
            [0, 0, 0],
            [1, 0, 0],
            [0, 1, 0],
            [0, 0, 1],
            [2, 0, 0],
            [1, 1, 0],
            [1, 0, 1],
            [0, 2, 0],
            [0, 1, 1],
            [0, 0, 2],
        ];
        for (m, e) in l.members().iter().zip(expected) {
            assert_eq!(m.entries(), &e);
        }
    }

    #[test]
    fn degenerate_order() {
        let l = IndexLattice::new(2, 0).unwrap();
        assert_eq!(l.members(), &[mi(&[0, 0])]);
    }

    #[test]
    fn rejects_zero_dimension_and_cap() {
        assert!(matches!(
            IndexLattice::new(0, 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            IndexLattice::new(6, 12),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn counts_match_binomial() {
        fn binom(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for d in 1..=4 {
            for order in 0..=6 {
                let l = IndexLattice::new(d, order).unwrap();
                assert_eq!(l.len(), binom(d + order, order));
                for (k, m) in l.members().iter().enumerate() {
                    assert_eq!(l.position(m), Some(k));
                }
                for w in l.members().windows(2) {
                    assert!(w[0] < w[1]);
                    assert!(w[0].degree() <= w[1].degree());
                }
            }
        }
    }

    #[test]
    fn shift_examples() {
        let l2 = IndexLattice::new(2, 2).unwrap();
        assert_eq!(
            shift_index(&mi(&[1, 0]), 2, &l2).unwrap(),
            Some(mi(&[1, 1]))
        );
        assert_eq!(shift_index(&mi(&[2, 0]), 1, &l2).unwrap(), None);
        let l3 = IndexLattice::new(3, 2).unwrap();
        assert_eq!(
            shift_index(&mi(&[0, 0, 0]), 3, &l3).unwrap(),
            Some(mi(&[0, 0, 1]))
        );
        assert!(shift_index(&mi(&[0, 0, 0]), 4, &l3).is_err());
        assert!(shift_index(&mi(&[0, 0, 0]), 0, &l3).is_err());
    }

    proptest! {
        #[test]
        fn shift_stays_inside_iff_room(d in 1usize..4, order in 0usize..5, j_seed in 0usize..16, k_seed in 0usize..1000) {
            let l = IndexLattice::new(d, order).unwrap();
            let alpha = l.member(k_seed % l.len()).clone();
            let j = j_seed % d + 1;
            let s = shift_index(&alpha, j, &l).unwrap();
            prop_assert_eq!(s.is_some(), alpha.degree() < order);
            if let Some(b) = s {
                prop_assert!(l.position(&b).is_some());
                prop_assert_eq!(l.up(j - 1, k_seed % l.len()), l.position(&b));
            }
        }
    }
}
