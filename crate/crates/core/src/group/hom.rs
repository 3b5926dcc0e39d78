//! Homomorphisms to ℤ^k (optionally reduced modulo a vector of moduli).

use super::{GroupSpec, Word};
use crate::error::{GeoError, Result};

/// `φ: Γ → ℤ^k` or `(ℤ/m₁ × … × ℤ/m_k)`, given by one integer vector per
/// generator; inverses get the negated vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hom {
    vectors: Vec<Vec<i64>>,
    /// Per-component modulus; 0 means the component is not reduced.
    modulus: Vec<i64>,
}

impl Hom {
    pub fn new(spec: &GroupSpec, vectors: Vec<Vec<i64>>, modulus: Option<Vec<i64>>) -> Result<Self> {
        if vectors.len() != spec.generator_count() {
            return Err(GeoError::InvalidArgument(format!(
                "homomorphism needs {} vectors, got {}",
                spec.generator_count(),
                vectors.len()
            )));
        }
        let rank = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != rank) {
            return Err(GeoError::InvalidArgument("vectors of unequal rank".into()));
        }
        let modulus = modulus.unwrap_or_else(|| vec![0; rank]);
        if modulus.len() != rank || modulus.iter().any(|&m| m < 0) {
            return Err(GeoError::InvalidArgument("modulus must match the rank".into()));
        }
        let hom = Self { vectors, modulus };
        // torsion generators must map to torsion
        for (f, v) in hom.vectors.iter().enumerate() {
            let order = spec.factor_order(f);
            if order > 0 {
                let image = hom.reduce(v.iter().map(|x| x * order).collect());
                if image.iter().any(|&x| x != 0) {
                    return Err(GeoError::InvalidArgument(format!(
                        "generator of order {order} cannot map to {v:?}"
                    )));
                }
            }
        }
        Ok(hom)
    }

    /// The zero homomorphism of rank 1.
    pub fn zero(spec: &GroupSpec) -> Self {
        Self { vectors: vec![vec![0]; spec.generator_count()], modulus: vec![0] }
    }

    /// Exponent sums of the listed generators, one component each.
    pub fn exponents(spec: &GroupSpec, labels: &[char], modulus: Option<Vec<i64>>) -> Result<Self> {
        let gens = spec.generators();
        let mut vectors = vec![vec![0; labels.len()]; gens.len()];
        for (k, c) in labels.iter().enumerate() {
            let f = gens.iter().position(|g| g.label == *c).ok_or_else(|| {
                GeoError::InvalidArgument(format!("{c:?} is not a generator label"))
            })?;
            vectors[f][k] = 1;
        }
        Self::new(spec, vectors, modulus)
    }

    /// Parse `0`, `a`, `a,b` or `T%3` (exponent sums, optional common modulus).
    pub fn parse(spec: &GroupSpec, s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero(spec));
        }
        let (gens, m) = match s.split_once('%') {
            Some((g, m)) => {
                let m: i64 = m
                    .parse()
                    .map_err(|_| GeoError::InvalidArgument(format!("bad modulus in {s:?}")))?;
                if m < 2 {
                    return Err(GeoError::InvalidArgument("modulus must be at least 2".into()));
                }
                (g, Some(m))
            }
            None => (s, None),
        };
        let labels: Vec<char> = gens
            .split(',')
            .map(|t| {
                let t = t.trim();
                let mut cs = t.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(GeoError::InvalidArgument(format!("bad generator {t:?}"))),
                }
            })
            .collect::<Result<_>>()?;
        let modulus = m.map(|m| vec![m; labels.len()]);
        Self::exponents(spec, &labels, modulus)
    }

    pub fn rank(&self) -> usize {
        self.modulus.len()
    }

    pub fn is_finite(&self) -> bool {
        self.modulus.iter().all(|&m| m > 0)
    }

    fn reduce(&self, mut v: Vec<i64>) -> Vec<i64> {
        for (x, &m) in v.iter_mut().zip(&self.modulus) {
            if m > 0 {
                *x = x.rem_euclid(m);
            }
        }
        v
    }

    /// Componentwise concatenation `φ₁ ⊕ φ₂`.
    pub fn stack(&self, other: &Hom) -> Hom {
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        let modulus = self.modulus.iter().chain(&other.modulus).copied().collect();
        Hom { vectors, modulus }
    }
}

/// `φ(w)`: the (reduced) sum of generator vectors along the word.
pub fn hom_eval(spec: &GroupSpec, w: &Word, hom: &Hom) -> Vec<i64> {
    let mut acc = vec![0i64; hom.rank()];
    for &l in &w.letters {
        let (f, sign) = spec.letter_factor(l);
        for (a, x) in acc.iter_mut().zip(&hom.vectors[f]) {
            *a += sign * x;
        }
    }
    hom.reduce(acc)
}
