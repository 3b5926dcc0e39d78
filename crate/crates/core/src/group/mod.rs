//! Finitely generated discrete groups presented as free products of cyclic
//! groups, which covers every preset family:
//!
//! * Schottky groups: ℤ ∗ ℤ on letters `a A b B`;
//! * the modular group PSL(2,ℤ) ≅ ℤ/2 ∗ ℤ/3 on letters `S U u` with `U = ST`;
//! * Hecke groups ⟨z ↦ z+λ, z ↦ −1/z⟩ ≅ ℤ/2 ∗ ℤ on letters `S T t`;
//! * custom free groups given by Lorentz matrices.
//!
//! Words are stored in free-product normal form: consecutive syllables come
//! from different factors and each syllable exponent lies in a fixed range of
//! representatives. Normal forms are unique, so two words are equal in the
//! group iff they are equal as letter sequences.

mod census;
mod hom;
mod orbit;

use std::fmt;

use num_complex::Complex64;

use crate::error::{GeoError, Result};
use crate::isometry::{BoundaryPoint, HPoint, Isometry, Mat2, RENORMALIZE_EVERY};

pub use census::{census, enumerate_closed_geodesics, Census, ClosedGeodesic, ConjClass};
pub use hom::{hom_eval, Hom};
pub use orbit::{enumerate_orbit, enumerate_orbit_from, OrbitBall, OrbitEntry};

/// Default cap on enumerated entries.
pub const DEFAULT_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Two hyperbolic generators with perpendicular axes through `i`, each of
    /// translation length `length`.
    Schottky { length: f64 },
    Modular,
    Hecke { lambda: f64 },
    Custom,
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Schottky { length } => format!("schottky(l={length})"),
            Family::Modular => "modular".into(),
            Family::Hecke { lambda } => format!("hecke(lambda={lambda})"),
            Family::Custom => "custom".into(),
        }
    }
}

/// How the fundamental-domain reduction is carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reduction {
    /// `|Re z| ≤ w/2` then `|z| ≥ 1` (Modular: w = 1, Hecke: w = λ).
    TranslateInvert { width: f64 },
    /// Dirichlet domain at `i` for the generating set (ping-pong ejection).
    PingPong,
    None,
}

/// How orbit balls are enumerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enumeration {
    /// Depth-first search over normal forms; a branch is abandoned once its
    /// displacement exceeds the radius by more than `slack`.
    Pruned { slack: f64 },
    /// All normal forms with at most `max_letters` letters, deduplicated by
    /// quantized matrix keys.
    Depth { max_letters: usize },
}

/// A bounded parabolic fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspSpec {
    pub xi: BoundaryPoint,
    pub stabilizer_gens: Vec<Word>,
    pub rank: usize,
    /// Minimal translation length in the stabilizer (Euclidean, horosphere at height 1).
    pub l_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub label: char,
    pub iso: Isometry,
    pub inverse_label: char,
}

#[derive(Debug, Clone, PartialEq)]
struct Letter {
    label: char,
    factor: usize,
    sign: i64,
    inverse: u8,
    iso: Isometry,
}

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    /// 0 for infinite cyclic.
    order: i64,
    pos: u8,
    neg: u8,
}

/// A group element as a normal-form word (letter indices into the spec).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    pub letters: Vec<u8>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Syllable {
    factor: usize,
    exp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub dim: usize,
    pub family: Family,
    letters: Vec<Letter>,
    factors: Vec<Factor>,
    pub cusps: Vec<CuspSpec>,
    pub reduction: Reduction,
    pub enumeration: Enumeration,
    pub delta_hint: Option<f64>,
    /// Entry cap for enumerations.
    pub budget: usize,
}

fn reduce_exp(k: i64, order: i64) -> i64 {
    if order == 0 {
        return k;
    }
    let m = k.rem_euclid(order);
    if m > order / 2 {
        m - order
    } else {
        m
    }
}

impl GroupSpec {
    fn from_factors(
        dim: usize,
        family: Family,
        factors: &[(char, Option<char>, i64, Isometry)],
    ) -> Result<Self> {
        let mut letters = Vec::new();
        let mut fs = Vec::new();
        for (f, (label, inv_label, order, iso)) in factors.iter().enumerate() {
            let pos = letters.len() as u8;
            match inv_label {
                Some(inv) if *order != 2 => {
                    letters.push(Letter { label: *label, factor: f, sign: 1, inverse: pos + 1, iso: *iso });
                    letters.push(Letter {
                        label: *inv,
                        factor: f,
                        sign: -1,
                        inverse: pos,
                        iso: iso.inverse(),
                    });
                    fs.push(Factor { order: *order, pos, neg: pos + 1 });
                }
                _ => {
                    if *order != 2 {
                        return Err(GeoError::InvalidArgument(format!(
                            "generator {label} needs an inverse label"
                        )));
                    }
                    letters.push(Letter { label: *label, factor: f, sign: 1, inverse: pos, iso: *iso });
                    fs.push(Factor { order: 2, pos, neg: pos });
                }
            }
        }
        let mut labels: Vec<char> = letters.iter().map(|l| l.label).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != letters.len() {
            return Err(GeoError::InvalidArgument("duplicate generator labels".into()));
        }
        for l in &letters {
            l.iso.check(1e-9)?;
        }
        Ok(Self {
            dim,
            family,
            letters,
            factors: fs,
            cusps: Vec::new(),
            reduction: Reduction::None,
            enumeration: Enumeration::Depth { max_letters: 8 },
            delta_hint: None,
            budget: DEFAULT_BUDGET,
        })
    }

    /// PSL(2,ℤ) with `S = [[0,−1],[1,0]]` and `U = ST = [[0,−1],[1,1]]`.
    /// `T = SU` and `T⁻¹ = uS`.
    pub fn modular() -> Self {
        let s = Isometry::from_sl2(Mat2::new(0.0, -1.0, 1.0, 0.0)).expect("S");
        let u = Isometry::from_sl2(Mat2::new(0.0, -1.0, 1.0, 1.0)).expect("U");
        let mut g = Self::from_factors(2, Family::Modular, &[('S', None, 2, s), ('U', Some('u'), 3, u)])
            .expect("modular preset");
        g.cusps = vec![CuspSpec {
            xi: BoundaryPoint::Infinity,
            stabilizer_gens: vec![g.parse_word("SU").expect("T")],
            rank: 1,
            l_min: 1.0,
        }];
        g.reduction = Reduction::TranslateInvert { width: 1.0 };
        g.enumeration = Enumeration::Pruned { slack: 2.0 };
        g.delta_hint = Some(1.0);
        g
    }

    /// The Hecke group generated by `z ↦ z + λ` and `z ↦ −1/z`, `λ ≥ 2`.
    pub fn hecke(lambda: f64) -> Result<Self> {
        if !(lambda >= 2.0) {
            return Err(GeoError::InvalidArgument(format!(
                "Hecke parameter {lambda} below 2 is not supported"
            )));
        }
        let s = Isometry::from_sl2(Mat2::new(0.0, -1.0, 1.0, 0.0))?;
        let t = Isometry::from_sl2(Mat2::new(1.0, lambda, 0.0, 1.0))?;
        let mut g = Self::from_factors(
            2,
            Family::Hecke { lambda },
            &[('S', None, 2, s), ('T', Some('t'), 0, t)],
        )?;
        g.cusps = vec![CuspSpec {
            xi: BoundaryPoint::Infinity,
            stabilizer_gens: vec![g.parse_word("T")?],
            rank: 1,
            l_min: lambda,
        }];
        g.reduction = Reduction::TranslateInvert { width: lambda };
        g.enumeration = Enumeration::Pruned { slack: 2.0 };
        Ok(g)
    }

    /// Two-generator Schottky group: `a = diag(e^{l/2}, e^{−l/2})` and `b` its
    /// conjugate by the quarter turn about `i`. The four ping-pong half-planes
    /// are disjoint iff `cosh(l/2) > √2`.
    pub fn schottky(length: f64) -> Result<Self> {
        if !((length / 2.0).cosh() > std::f64::consts::SQRT_2) {
            return Err(GeoError::InvalidArgument(format!(
                "Schottky translation length {length} too small: ping-pong domains overlap"
            )));
        }
        let h = (length / 2.0).exp();
        let a = Mat2::new(h, 0.0, 0.0, 1.0 / h);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let k = Mat2::new(c, c, -c, c);
        let b = k * a * k.inverse();
        let mut g = Self::from_factors(
            2,
            Family::Schottky { length },
            &[
                ('a', Some('A'), 0, Isometry::from_sl2(a)?),
                ('b', Some('B'), 0, Isometry::from_sl2(b)?),
            ],
        )?;
        g.reduction = Reduction::PingPong;
        g.enumeration = Enumeration::Pruned { slack: g.schottky_axis_bound().expect("schottky") };
        Ok(g)
    }

    /// Free group on the given Lorentz matrices; inverse labels are the
    /// case-swapped labels. Discreteness is the caller's responsibility.
    pub fn custom(dim: usize, generators: &[(char, Isometry)], max_letters: usize) -> Result<Self> {
        let mut fs = Vec::new();
        for (label, iso) in generators {
            if iso.dim() != dim {
                return Err(GeoError::InvalidArgument("generator dimension mismatch".into()));
            }
            let inv = if label.is_lowercase() {
                label.to_ascii_uppercase()
            } else {
                label.to_ascii_lowercase()
            };
            fs.push((*label, Some(inv), 0, *iso));
        }
        let mut g = Self::from_factors(dim, Family::Custom, &fs)?;
        g.enumeration = Enumeration::Depth { max_letters };
        Ok(g)
    }

    /// The trivial group (no generators).
    pub fn trivial(dim: usize) -> Self {
        let mut g = Self::from_factors(dim, Family::Custom, &[]).expect("trivial");
        g.enumeration = Enumeration::Depth { max_letters: 0 };
        g
    }

    /// Preset by name: `modular`, `hecke:lambda=3`, `schottky:default`,
    /// `schottky:length=2.2`.
    pub fn preset(name: &str) -> Result<Self> {
        let (head, params) = match name.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (name, None),
        };
        let param = |key: &str, default: f64| -> Result<f64> {
            match params {
                None | Some("default") => Ok(default),
                Some(p) => {
                    let mut value = None;
                    for kv in p.split(',') {
                        let (k, v) = kv.split_once('=').ok_or_else(|| {
                            GeoError::InvalidArgument(format!("malformed group parameter {kv:?}"))
                        })?;
                        if k != key {
                            return Err(GeoError::InvalidArgument(format!(
                                "unknown group parameter {k:?}"
                            )));
                        }
                        value = Some(v.parse::<f64>().map_err(|_| {
                            GeoError::InvalidArgument(format!("bad value for {k}: {v:?}"))
                        })?);
                    }
                    Ok(value.unwrap_or(default))
                }
            }
        };
        match head {
            "modular" => {
                if params.is_some_and(|p| p != "default") {
                    return Err(GeoError::InvalidArgument("modular takes no parameters".into()));
                }
                Ok(Self::modular())
            }
            "hecke" => Self::hecke(param("lambda", 3.0)?),
            "schottky" => Self::schottky(param("length", SCHOTTKY_DEFAULT_LENGTH)?),
            _ => Err(GeoError::UnsupportedGroup(name.to_string())),
        }
    }

    /// Largest possible distance from `i` to the axis of a cyclically reduced
    /// element of a Schottky preset: the axis joins two distinct ping-pong
    /// arcs, so its distance to the centre is at most `D` with
    /// `cosh D = 1/sin(g/2)` for the minimal angular gap `g` between arcs.
    pub fn schottky_axis_bound(&self) -> Option<f64> {
        match self.family {
            Family::Schottky { length } => {
                let alpha = (1.0 / (length / 2.0).cosh()).asin();
                let gap = std::f64::consts::FRAC_PI_2 - 2.0 * alpha;
                Some((1.0 / (gap / 2.0).sin()).acosh())
            }
            _ => None,
        }
    }

    /// Maximal rank among cusps (0 without cusps).
    pub fn r_max(&self) -> usize {
        self.cusps.iter().map(|c| c.rank).max().unwrap_or(0)
    }

    /// Default base point `i` (the hyperboloid origin).
    pub fn base_point(&self) -> HPoint {
        HPoint::origin(self.dim)
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.factors
            .iter()
            .map(|f| {
                let l = &self.letters[f.pos as usize];
                Generator { label: l.label, iso: l.iso, inverse_label: self.letters[f.neg as usize].label }
            })
            .collect()
    }

    pub fn generator_count(&self) -> usize {
        self.factors.len()
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub(crate) fn letter_label(&self, l: u8) -> char {
        self.letters[l as usize].label
    }

    pub(crate) fn letter_factor(&self, l: u8) -> (usize, i64) {
        let x = &self.letters[l as usize];
        (x.factor, x.sign)
    }

    pub(crate) fn factor_order(&self, f: usize) -> i64 {
        self.factors[f].order
    }

    pub(crate) fn letter_iso(&self, l: u8) -> &Isometry {
        &self.letters[l as usize].iso
    }

    pub(crate) fn letter_inverse(&self, l: u8) -> u8 {
        self.letters[l as usize].inverse
    }

    pub fn letter_by_label(&self, c: char) -> Option<u8> {
        self.letters.iter().position(|l| l.label == c).map(|i| i as u8)
    }

    /// Whether `next` may follow `prev` in a normal form word whose last
    /// syllable (ending in `prev`) currently has exponent `run`.
    pub(crate) fn may_follow(&self, prev: u8, next: u8) -> bool {
        let (fp, sp) = self.letter_factor(prev);
        let (fnx, sn) = self.letter_factor(next);
        if fp != fnx {
            return true;
        }
        // only infinite cyclic factors allow syllables longer than one letter
        self.factors[fp].order == 0 && sp == sn
    }

    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                'e' | 'ε' if s.chars().count() == 1 => return Ok(Word::empty()),
                _ => raw.push(self.letter_by_label(c).ok_or_else(|| {
                    GeoError::InvalidArgument(format!("unknown letter {c:?}"))
                })?),
            }
        }
        Ok(self.normalize(&raw))
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "e".into();
        }
        w.letters.iter().map(|&l| self.letter_label(l)).collect()
    }

    fn syllables(&self, raw: &[u8]) -> Vec<Syllable> {
        let mut st: Vec<Syllable> = Vec::with_capacity(raw.len());
        for &l in raw {
            let (f, s) = self.letter_factor(l);
            let order = self.factors[f].order;
            match st.last_mut() {
                Some(top) if top.factor == f => {
                    let k = reduce_exp(top.exp + s, order);
                    if k == 0 {
                        st.pop();
                    } else {
                        top.exp = k;
                    }
                }
                _ => st.push(Syllable { factor: f, exp: reduce_exp(s, order) }),
            }
        }
        st
    }

    fn expand(&self, syl: &[Syllable]) -> Word {
        let mut letters = Vec::new();
        for s in syl {
            let f = &self.factors[s.factor];
            let l = if s.exp > 0 { f.pos } else { f.neg };
            letters.extend(std::iter::repeat(l).take(s.exp.unsigned_abs() as usize));
        }
        Word { letters }
    }

    /// Normal form of an arbitrary letter sequence.
    pub fn normalize(&self, raw: &[u8]) -> Word {
        self.expand(&self.syllables(raw))
    }

    pub fn multiply(&self, u: &Word, v: &Word) -> Word {
        let mut raw = u.letters.clone();
        raw.extend_from_slice(&v.letters);
        self.normalize(&raw)
    }

    pub fn inverse_word(&self, w: &Word) -> Word {
        let raw: Vec<u8> = w.letters.iter().rev().map(|&l| self.letter_inverse(l)).collect();
        self.normalize(&raw)
    }

    /// Cyclic reduction in the free product: conjugate away matching first
    /// and last syllables.
    pub fn cyclic_reduce(&self, w: &Word) -> Word {
        let mut syl = self.syllables(&w.letters);
        while syl.len() >= 2 && syl[0].factor == syl[syl.len() - 1].factor {
            let first = syl.remove(0);
            let order = self.factors[first.factor].order;
            let last = syl.last_mut().expect("nonempty");
            let k = reduce_exp(last.exp + first.exp, order);
            if k == 0 {
                syl.pop();
            } else {
                last.exp = k;
            }
        }
        self.expand(&syl)
    }

    /// Canonical representative of the conjugacy class: the cyclic reduction,
    /// rotated to the lexicographically least rotation (by letter label).
    pub fn canonical_class_key(&self, w: &Word) -> Word {
        let c = self.cyclic_reduce(w);
        if c.len() <= 1 {
            return c;
        }
        let labels: Vec<char> = c.letters.iter().map(|&l| self.letter_label(l)).collect();
        let k = least_rotation(&labels);
        let mut letters = c.letters[k..].to_vec();
        letters.extend_from_slice(&c.letters[..k]);
        Word { letters }
    }

    /// Evaluate a word, re-projecting onto the group every few products.
    pub fn evaluate(&self, w: &Word) -> Isometry {
        let mut m = Isometry::identity(self.dim);
        for (k, &l) in w.letters.iter().enumerate() {
            m = m.compose(self.letter_iso(l));
            if (k + 1) % RENORMALIZE_EVERY == 0 {
                m = m.renormalized();
            }
        }
        m
    }

    /// Exact 2×2 value of a word (d = 2 presets only).
    pub fn evaluate_sl2(&self, w: &Word) -> Option<Mat2> {
        let mut m = Mat2::IDENTITY;
        for &l in &w.letters {
            m = m * *self.letter_iso(l).exact_2x2()?;
        }
        Some(m)
    }

    /// Whether every generator carries an exact 2×2 form.
    pub fn has_exact_2x2(&self) -> bool {
        self.dim == 2 && self.letters.iter().all(|l| l.iso.exact_2x2().is_some())
    }

    /// Whether the generator matrices are integral (exact PSL(2,ℤ) keys apply).
    pub fn is_integral(&self) -> bool {
        self.has_exact_2x2()
            && self.letters.iter().all(|l| l.iso.exact_2x2().is_some_and(|m| m.is_integral()))
    }
}

/// Translation length of the default Schottky preset; chosen so that the
/// critical exponent is about 0.65.
pub const SCHOTTKY_DEFAULT_LENGTH: f64 = 2.1;

/// Index of the lexicographically least rotation (Booth's algorithm).
pub fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let at = |i: usize| &s[i % n];
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k: usize = 0;
    for j in 1..2 * n {
        let mut i = f[j - k - 1];
        while i != -1 && at(j) != at(k + i as usize + 1) {
            if at(j) < at(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && at(j) != at(k) {
            if at(j) < at(k) {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    k
}

/// Smallest period `p` dividing `n` with `s[i] = s[i+p]`; `s` is a proper
/// power iff the period is smaller than its length.
pub fn cyclic_period<T: PartialEq>(s: &[T]) -> usize {
    let n = s.len();
    (1..=n)
        .filter(|p| n % p == 0)
        .find(|&p| (p..n).all(|i| s[i] == s[i - p]))
        .unwrap_or(n)
}

/// Hyperbolic distance between two points of the upper half plane.
pub fn uhp_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm_sqr();
    let x = num / (2.0 * z.im * w.im);
    // acosh(1 + x) = 2 asinh(sqrt(x/2))
    2.0 * (x / 2.0).sqrt().asinh()
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_least_rotation(s: &[char]) -> Vec<char> {
        (0..s.len())
            .map(|k| {
                let mut r = s[k..].to_vec();
                r.extend_from_slice(&s[..k]);
                r
            })
            .min()
            .unwrap_or_default()
    }

    #[test]
    fn modular_relations() {
        let g = GroupSpec::modular();
        assert!(g.parse_word("SS").unwrap().is_empty());
        assert!(g.parse_word("UUU").unwrap().is_empty());
        assert_eq!(g.format_word(&g.parse_word("UU").unwrap()), "u");
        let t = g.evaluate_sl2(&g.parse_word("SU").unwrap()).unwrap();
        assert_eq!(t.psl_int_key(), [1, 1, 0, 1]);
        let tinv = g.evaluate_sl2(&g.parse_word("uS").unwrap()).unwrap();
        assert_eq!(tinv.psl_int_key(), [1, -1, 0, 1]);
    }

    #[test]
    fn key_examples() {
        let g = GroupSpec::schottky(3.0).unwrap();
        let w = g.parse_word("ba").unwrap();
        assert_eq!(g.format_word(&g.canonical_class_key(&w)), "ab");
        let w = g.parse_word("Abba").unwrap();
        assert_eq!(g.format_word(&g.canonical_class_key(&w)), "bb");
        let h = GroupSpec::hecke(3.0).unwrap();
        let w = h.parse_word("TSTTS").unwrap();
        assert_eq!(h.format_word(&h.canonical_class_key(&w)), "STSTT");
    }

    #[test]
    fn period_test() {
        assert_eq!(cyclic_period(&[1, 2, 1, 2]), 2);
        assert_eq!(cyclic_period(&[1, 2, 1]), 3);
        assert_eq!(cyclic_period(&[5]), 1);
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(GroupSpec::preset("modular").unwrap().family, Family::Modular);
        assert_eq!(
            GroupSpec::preset("hecke:lambda=3").unwrap().family,
            Family::Hecke { lambda: 3.0 }
        );
        assert!(GroupSpec::preset("schottky:default").is_ok());
        assert!(GroupSpec::preset("schottky:length=1.5").is_err());
        assert!(matches!(GroupSpec::preset("fuchsian"), Err(GeoError::UnsupportedGroup(_))));
        assert!(GroupSpec::preset("hecke:mu=3").is_err());
    }

    fn random_word(g: &GroupSpec, raw: &[u8]) -> Word {
        let n = g.letter_count() as u8;
        g.normalize(&raw.iter().map(|x| x % n).collect::<Vec<_>>())
    }

    fn presets() -> Vec<GroupSpec> {
        vec![GroupSpec::modular(), GroupSpec::hecke(3.0).unwrap(), GroupSpec::schottky(2.0).unwrap()]
    }

    proptest! {
        #[test]
        fn booth_matches_naive(s in proptest::collection::vec(0u8..3, 0..20)) {
            let c: Vec<char> = s.iter().map(|x| (b'a' + x) as char).collect();
            let k = least_rotation(&c);
            let mut r = c[k.min(c.len())..].to_vec();
            r.extend_from_slice(&c[..k.min(c.len())]);
            prop_assert_eq!(r, naive_least_rotation(&c));
        }

        #[test]
        fn key_is_idempotent_and_rotation_invariant(
            which in 0usize..3,
            raw in proptest::collection::vec(any::<u8>(), 0..24),
            rot in 0usize..24,
        ) {
            let g = &presets()[which];
            let w = random_word(g, &raw);
            let key = g.canonical_class_key(&w);
            prop_assert_eq!(&g.canonical_class_key(&key), &key);
            let c = g.cyclic_reduce(&w);
            if !c.is_empty() {
                let k = rot % c.len();
                let mut r = c.letters[k..].to_vec();
                r.extend_from_slice(&c.letters[..k]);
                prop_assert_eq!(g.canonical_class_key(&Word { letters: r }), key);
            }
        }

        #[test]
        fn conjugates_share_keys(
            which in 0usize..3,
            raw in proptest::collection::vec(any::<u8>(), 0..16),
            conj in proptest::collection::vec(any::<u8>(), 0..8),
        ) {
            let g = &presets()[which];
            let w = random_word(g, &raw);
            let u = random_word(g, &conj);
            let c = g.multiply(&g.multiply(&u, &w), &g.inverse_word(&u));
            prop_assert_eq!(g.canonical_class_key(&c), g.canonical_class_key(&w));
        }

        #[test]
        fn normal_form_matches_evaluation(
            which in 0usize..3,
            raw in proptest::collection::vec(any::<u8>(), 0..16),
        ) {
            let g = &presets()[which];
            let n = g.letter_count() as u8;
            let raw: Vec<u8> = raw.iter().map(|x| x % n).collect();
            let mut direct = Mat2::IDENTITY;
            for &l in &raw {
                direct = direct * *g.letter_iso(l).exact_2x2().unwrap();
            }
            let nf = g.evaluate_sl2(&g.normalize(&raw)).unwrap();
            let scale = direct.a.abs().max(direct.b.abs()).max(direct.c.abs()).max(direct.d.abs());
            let same = [(1.0, 0), (-1.0, 1)].iter().any(|(s, _)| {
                (nf.a - s * direct.a).abs() <= 1e-9 * scale
                    && (nf.b - s * direct.b).abs() <= 1e-9 * scale
                    && (nf.c - s * direct.c).abs() <= 1e-9 * scale
                    && (nf.d - s * direct.d).abs() <= 1e-9 * scale
            });
            prop_assert!(same);
        }

        #[test]
        fn inverse_word_cancels(which in 0usize..3, raw in proptest::collection::vec(any::<u8>(), 0..16)) {
            let g = &presets()[which];
            let w = random_word(g, &raw);
            prop_assert!(g.multiply(&w, &g.inverse_word(&w)).is_empty());
        }
    }
}
