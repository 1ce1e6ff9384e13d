//! Complex polynomials in `d` variables indexed by multi-indices.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{IndexLattice, MultiIndex};
use crate::numkernel::{C64, ONE, ZERO};

/// `p(z) = sum_alpha p_alpha z^alpha`, stored without zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    d: usize,
    terms: BTreeMap<MultiIndex, C64>,
}

/// Anything that can hand out Taylor coefficients: polynomials, or a
/// coefficient rule for a power series.
pub trait TaylorSource {
    fn dim(&self) -> usize;
    fn coefficient(&self, alpha: &MultiIndex) -> C64;
}

impl TaylorSource for Poly {
    fn dim(&self) -> usize {
        self.d
    }
    fn coefficient(&self, alpha: &MultiIndex) -> C64 {
        self.coeff(alpha)
    }
}

/// Power series given by a coefficient rule.
pub struct SeriesFn<F> {
    d: usize,
    rule: F,
}

impl<F: Fn(&MultiIndex) -> C64> SeriesFn<F> {
    pub fn new(d: usize, rule: F) -> Self {
        Self { d, rule }
    }
}

impl<F: Fn(&MultiIndex) -> C64> TaylorSource for SeriesFn<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn coefficient(&self, alpha: &MultiIndex) -> C64 {
        (self.rule)(alpha)
    }
}

impl Poly {
    pub fn zero(d: usize) -> Self {
        assert!(d >= 1, "polynomial dimension must be >= 1");
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: C64) -> Self {
        Self::from_terms(d, [(MultiIndex::zero(d), c)]).expect("valid constant")
    }

    /// The coordinate function `z_j` (1-based).
    pub fn variable(d: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= d);
        Self::from_terms(d, [(MultiIndex::unit(d, j - 1), ONE)]).expect("valid variable")
    }

    /// Builds a polynomial, summing duplicate exponents and dropping zeros.
    pub fn from_terms(
        d: usize,
        terms: impl IntoIterator<Item = (MultiIndex, C64)>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension d must be >= 1".into()));
        }
        let mut map: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (alpha, c) in terms {
            if alpha.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: alpha.dim(),
                });
            }
            *map.entry(alpha).or_insert(ZERO) += c;
        }
        map.retain(|_, c| *c != ZERO);
        Ok(Self { d, terms: map })
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real_terms(d: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        let items = terms
            .iter()
            .map(|(a, c)| Ok((MultiIndex::new(a.to_vec())?, C64::new(*c, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(d, items)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C64 {
        self.terms.get(alpha).copied().unwrap_or(ZERO)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::from_terms(self.d, self.terms.iter().map(|(a, c)| (a.clone(), c * s)))
            .expect("same dimension")
    }

    pub fn scale_real(&self, s: f64) -> Poly {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Poly::from_terms(
            self.d,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(a, c)| (a.clone(), *c)),
        )
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.scale_real(-1.0))
    }

    /// Sum of coefficient moduli, an upper bound for `|p(T)|` over
    /// contractive tuples.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluate at `z`, forming each `z_j^k` by repeated squaring.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: z.len(),
            });
        }
        let mut powers: HashMap<(usize, u32), C64> = HashMap::new();
        let mut total = ZERO;
        for (alpha, c) in &self.terms {
            let mut term = *c;
            for (j, &e) in alpha.entries().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = *powers
                    .entry((j, e))
                    .or_insert_with(|| pow_by_squaring(z[j], e));
                term *= p;
            }
            total += term;
        }
        Ok(total)
    }

    /// Coefficient vector `q` indexed by the lattice.
    pub fn coefficient_vector(&self, lattice: &IndexLattice) -> Result<Vec<C64>> {
        if self.d != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: self.d,
            });
        }
        if self.degree() > lattice.order() && !self.is_zero() {
            return Err(Error::DegreeOverflow {
                degree: self.degree(),
                order: lattice.order(),
            });
        }
        Ok(lattice.members().iter().map(|a| self.coeff(a)).collect())
    }

    /// Maximum coefficient difference over all exponents of either input.
    pub fn max_coeff_diff(&self, other: &Poly) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|a| (self.coeff(a) - other.coeff(a)).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> PolyFile {
        PolyFile {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| PolyTerm {
                    alpha: a.entries().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json(file: &PolyFile) -> Result<Self> {
        if file.d == 0 {
            return Err(Error::Format("polynomial dimension d must be >= 1".into()));
        }
        let mut items = Vec::with_capacity(file.terms.len());
        for t in &file.terms {
            if t.alpha.len() != file.d {
                return Err(Error::Format(format!(
                    "term exponent {:?} has length {} but d = {}",
                    t.alpha,
                    t.alpha.len(),
                    file.d
                )));
            }
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::Format("non-finite coefficient".into()));
            }
            items.push((MultiIndex::new(t.alpha.clone())?, C64::new(t.re, t.im)));
        }
        Self::from_terms(file.d, items)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PolyFile = serde_json::from_str(s)?;
        Self::from_json(&file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }
}

fn pow_by_squaring(mut base: C64, mut e: u32) -> C64 {
    let mut acc = ONE;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// The degree-`N` Taylor polynomial `sum_{|alpha| <= N} f_alpha z^alpha`.
pub fn truncate<S: TaylorSource + ?Sized>(f: &S, order: usize) -> Result<Poly> {
    let lattice = IndexLattice::new(f.dim(), order)?;
    Poly::from_terms(
        f.dim(),
        lattice
            .members()
            .iter()
            .map(|a| (a.clone(), f.coefficient(a))),
    )
}

/// On-disk polynomial layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyFile {
    pub d: usize,
    pub terms: Vec<PolyTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyTerm {
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}
