//! Loxodromic conjugacy classes (closed geodesics) up to a length bound.
//!
//! * Modular: hyperbolic classes of PSL(2,ℤ) correspond to cyclic words in
//!   `R = [[1,1],[0,1]]`, `L = [[1,0],[1,1]]` containing both letters; the
//!   trace of a nonnegative product only grows when letters are appended, so
//!   a depth-first search bounded by `2 cosh(T/2)` is complete.
//! * Hecke (λ ≥ 3): classes of `∏ S T^{nᵢ}` up to rotation; the continuant
//!   `q_j` (lower-right entry of a prefix) grows geometrically and the full
//!   trace is at least `¾|q_j|` for every prefix.
//! * Schottky: cyclically reduced words; the axis of such a word passes within
//!   `D` of the base point, hence `d(o, wo) ≤ ℓ(w) + 2D`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::{cyclic_period, least_rotation, Enumeration, Family, GroupSpec, Word};
use crate::error::{GeoError, Result};
use crate::isometry::{BoundaryPoint, Isometry, Tolerances, RENORMALIZE_EVERY};

#[derive(Debug, Clone, PartialEq)]
pub struct ConjClass {
    pub key: Word,
    pub representative: Isometry,
    pub primitive: bool,
    pub power: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedGeodesic {
    pub class: ConjClass,
    pub length: f64,
    /// (repelling, attracting) fixed points of the representative.
    pub axis: (BoundaryPoint, BoundaryPoint),
    /// `|tr|` of the exact 2×2 representative, when available.
    pub trace: Option<f64>,
}

/// A census together with the diagnostics of what was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub t: f64,
    pub primitive_only: bool,
    /// Sorted by (length, key label string).
    pub geodesics: Vec<ClosedGeodesic>,
    /// Non-loxodromic classes met during enumeration.
    pub discarded: usize,
}

struct Candidate {
    key: Word,
}

fn bound_for(t: f64) -> f64 {
    2.0 * (t / 2.0).cosh() * (1.0 + 1e-12)
}

/// Modular candidates from R/L necklaces.
fn modular_candidates(spec: &GroupSpec, t: f64, cap: usize) -> Result<Vec<Candidate>> {
    let bound = bound_for(t);
    let max_len = bound.floor() as usize;
    let s = spec.letter_by_label('S').expect("S");
    let u_pos = spec.letter_by_label('U').expect("U");
    let u_neg = spec.letter_by_label('u').expect("u");
    let found = AtomicUsize::new(0);

    type M = [i64; 4];
    fn mul(m: &M, right_r: bool) -> M {
        if right_r {
            // M·R = [[a, a+b],[c, c+d]]
            [m[0], m[0] + m[1], m[2], m[2] + m[3]]
        } else {
            // M·L = [[a+b, b],[c+d, d]]
            [m[0] + m[1], m[1], m[2] + m[3], m[3]]
        }
    }

    fn dfs(
        word: &mut Vec<bool>,
        m: M,
        bound: f64,
        max_len: usize,
        out: &mut Vec<Vec<bool>>,
        found: &AtomicUsize,
        cap: usize,
    ) -> Result<()> {
        if (m[0] + m[3]) as f64 > bound {
            return Ok(());
        }
        let has_r = word.iter().any(|&x| x);
        let has_l = word.iter().any(|&x| !x);
        if has_r && has_l && least_rotation(word) == 0 {
            if found.fetch_add(1, Ordering::Relaxed) >= cap {
                return Err(GeoError::BudgetExceeded { cap });
            }
            out.push(word.clone());
        }
        if word.len() >= max_len {
            return Ok(());
        }
        for next in [true, false] {
            let child = mul(&m, next);
            word.push(next);
            dfs(word, child, bound, max_len, out, found, cap)?;
            word.pop();
        }
        Ok(())
    }

    // split the tree on prefixes of a fixed length for parallelism
    let depth = 6.min(max_len);
    let mut prefixes: Vec<(Vec<bool>, M)> = vec![(Vec::new(), [1, 0, 0, 1])];
    let mut shallow: Vec<Vec<bool>> = Vec::new();
    for _ in 0..depth {
        let mut next = Vec::new();
        for (w, m) in &prefixes {
            for x in [true, false] {
                let c = mul(m, x);
                if (c[0] + c[3]) as f64 <= bound {
                    let mut cw = w.clone();
                    cw.push(x);
                    next.push((cw, c));
                }
            }
        }
        for (w, _) in &prefixes {
            if !w.is_empty() && w.iter().any(|&x| x) && w.iter().any(|&x| !x) && least_rotation(w) == 0 {
                shallow.push(w.clone());
            }
        }
        prefixes = next;
    }
    let parts: Vec<Result<Vec<Vec<bool>>>> = prefixes
        .into_par_iter()
        .map(|(mut w, m)| {
            let mut out = Vec::new();
            dfs(&mut w, m, bound, max_len, &mut out, &found, cap)?;
            Ok(out)
        })
        .collect();
    let mut words = shallow;
    for p in parts {
        words.extend(p?);
    }
    if words.len() > cap {
        return Err(GeoError::BudgetExceeded { cap });
    }
    Ok(words
        .into_iter()
        .map(|w| {
            let mut letters = Vec::with_capacity(2 * w.len());
            for r in w {
                letters.push(s);
                letters.push(if r { u_pos } else { u_neg });
            }
            Candidate { key: spec.canonical_class_key(&Word { letters }) }
        })
        .collect())
}

/// Hecke candidates: sequences `(n₁, …, n_k)` minimal among their rotations.
fn hecke_candidates(spec: &GroupSpec, lambda: f64, t: f64, cap: usize) -> Result<Vec<Candidate>> {
    if lambda < 3.0 {
        return Err(GeoError::UnsupportedGroup(format!(
            "closed-geodesic census for Hecke groups needs λ ≥ 3 (got {lambda})"
        )));
    }
    let bound = bound_for(t);
    let s = spec.letter_by_label('S').expect("S");
    let tp = spec.letter_by_label('T').expect("T");
    let tn = spec.letter_by_label('t').expect("t");
    let n_max = (bound / (0.75 * lambda)).floor() as i64;
    let found = AtomicUsize::new(0);

    // (p, q) is the second column of the prefix product; the first column is
    // the previous second column.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        seq: &mut Vec<i64>,
        prev: (f64, f64),
        cur: (f64, f64),
        lambda: f64,
        bound: f64,
        n_max: i64,
        out: &mut Vec<Vec<i64>>,
        found: &AtomicUsize,
        cap: usize,
    ) -> Result<()> {
        if !seq.is_empty() {
            if 0.75 * cur.1.abs() > bound {
                return Ok(());
            }
            let tr = (prev.0 + cur.1).abs();
            if tr <= bound && least_rotation(seq) == 0 {
                if found.fetch_add(1, Ordering::Relaxed) >= cap {
                    return Err(GeoError::BudgetExceeded { cap });
                }
                out.push(seq.clone());
            }
        }
        for n in (-n_max..=n_max).filter(|&n| n != 0) {
            let x = lambda * n as f64;
            let next = (x * cur.0 - prev.0, x * cur.1 - prev.1);
            if 0.75 * next.1.abs() > bound {
                continue;
            }
            seq.push(n);
            dfs(seq, cur, next, lambda, bound, n_max, out, found, cap)?;
            seq.pop();
        }
        Ok(())
    }

    let parts: Vec<Result<Vec<Vec<i64>>>> = (-n_max..=n_max)
        .into_par_iter()
        .filter(|&n| n != 0)
        .map(|n| {
            let mut out = Vec::new();
            let x = lambda * n as f64;
            let mut seq = vec![n];
            if 0.75 * x.abs() > bound {
                return Ok(out);
            }
            dfs(&mut seq, (0.0, 1.0), (-1.0, x), lambda, bound, n_max, &mut out, &found, cap)?;
            Ok(out)
        })
        .collect();
    let mut seqs = Vec::new();
    for p in parts {
        seqs.extend(p?);
    }
    Ok(seqs
        .into_iter()
        .map(|seq| {
            let mut letters = Vec::new();
            for n in seq {
                letters.push(s);
                let l = if n > 0 { tp } else { tn };
                letters.extend(std::iter::repeat(l).take(n.unsigned_abs() as usize));
            }
            Candidate { key: spec.canonical_class_key(&Word { letters }) }
        })
        .collect())
}

/// Schottky candidates: canonical cyclically reduced words with
/// `d(o, wo) ≤ T + 2D`.
fn schottky_candidates(spec: &GroupSpec, t: f64, cap: usize) -> Result<Vec<Candidate>> {
    let axis = spec.schottky_axis_bound().expect("schottky");
    let slack = match spec.enumeration {
        Enumeration::Pruned { slack } => slack,
        Enumeration::Depth { .. } => axis,
    };
    let limit = t + 2.0 * axis;
    let found = AtomicUsize::new(0);

    fn dfs(
        spec: &GroupSpec,
        first: u8,
        limit: f64,
        slack: f64,
        found: &AtomicUsize,
        cap: usize,
    ) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        let mut word: Vec<u8> = Vec::new();
        let mut stack: Vec<(usize, u8, Isometry)> = vec![(0, first, *spec.letter_iso(first))];
        while let Some((depth, l, m)) = stack.pop() {
            word.truncate(depth);
            word.push(l);
            let d = m.entry(0, 0).max(1.0).acosh();
            if d > limit + slack {
                continue;
            }
            if d <= limit && spec.letter_inverse(l) != first {
                let labels: Vec<char> = word.iter().map(|&x| spec.letter_label(x)).collect();
                if least_rotation(&labels) == 0 {
                    if found.fetch_add(1, Ordering::Relaxed) >= cap {
                        return Err(GeoError::BudgetExceeded { cap });
                    }
                    out.push(Word { letters: word.clone() });
                }
            }
            for next in (0..spec.letter_count() as u8).rev() {
                if !spec.may_follow(l, next) {
                    continue;
                }
                let mut child = m.compose(spec.letter_iso(next));
                if (word.len() + 1) % RENORMALIZE_EVERY == 0 {
                    child = child.renormalized();
                }
                stack.push((depth + 1, next, child));
            }
        }
        Ok(out)
    }

    let parts: Vec<Result<Vec<Word>>> = (0..spec.letter_count() as u8)
        .into_par_iter()
        .map(|l| dfs(spec, l, limit, slack, &found, cap))
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?.into_iter().map(|key| Candidate { key }));
    }
    Ok(out)
}

/// Custom groups: all canonical cyclically reduced words up to the
/// configured letter depth (complete only when that depth suffices).
fn depth_candidates(spec: &GroupSpec, max_letters: usize, cap: usize) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_letters {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..spec.letter_count() as u8 {
                if let Some(&last) = w.last() {
                    if !spec.may_follow(last, l) {
                        continue;
                    }
                }
                let mut cw = w.clone();
                cw.push(l);
                let word = Word { letters: cw.clone() };
                if spec.canonical_class_key(&word) == word {
                    out.push(Candidate { key: word });
                    if out.len() > cap {
                        return Err(GeoError::BudgetExceeded { cap });
                    }
                }
                next.push(cw);
            }
        }
        frontier = next;
    }
    Ok(out)
}

fn key_string(spec: &GroupSpec, w: &Word) -> String {
    spec.format_word(w)
}

/// Build the census of loxodromic classes with translation length ≤ `t`.
pub fn census(spec: &GroupSpec, t: f64, primitive_only: bool) -> Result<Census> {
    let tol = Tolerances::default();
    if !(t >= 0.0) {
        return Err(GeoError::InvalidArgument(format!("length bound {t} must be nonnegative")));
    }
    let cap = spec.budget;
    let candidates = if t < 1e-9 {
        Vec::new()
    } else {
        match (&spec.family, spec.enumeration) {
            (Family::Modular, _) => modular_candidates(spec, t, cap)?,
            (Family::Hecke { lambda }, _) => hecke_candidates(spec, *lambda, t, cap)?,
            (Family::Schottky { .. }, _) => schottky_candidates(spec, t, cap)?,
            (Family::Custom, Enumeration::Depth { max_letters }) => depth_candidates(spec, max_letters, cap)?,
            (Family::Custom, Enumeration::Pruned { .. }) => {
                return Err(GeoError::UnsupportedGroup(
                    "custom groups enumerate closed geodesics by word depth only".into(),
                ))
            }
        }
    };
    // a BTreeMap keyed by the canonical word merges duplicates deterministically
    let mut unique: BTreeMap<Word, ()> = BTreeMap::new();
    for c in candidates {
        unique.insert(c.key, ());
    }
    let keys: Vec<Word> = unique.into_keys().collect();
    let built: Vec<Result<Option<ClosedGeodesic>>> = keys
        .par_iter()
        .map(|key| {
            let labels: Vec<char> = key.letters.iter().map(|&l| spec.letter_label(l)).collect();
            let period = cyclic_period(&labels);
            let power = labels.len() / period.max(1);
            if primitive_only && power > 1 {
                return Ok(None);
            }
            let rep = spec.evaluate(key);
            let class = match rep.classify(&tol) {
                Ok(c) => c,
                Err(GeoError::NearDegenerate(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            match class {
                crate::isometry::IsometryClass::Loxodromic { translation_length, axis } => {
                    if translation_length > t + tol.class {
                        return Ok(None);
                    }
                    let trace = rep.exact_2x2().map(|m| m.trace().abs());
                    Ok(Some(ClosedGeodesic {
                        class: ConjClass { key: key.clone(), representative: rep, primitive: power == 1, power },
                        length: translation_length,
                        axis,
                        trace,
                    }))
                }
                _ => Ok(None),
            }
        })
        .collect();
    let mut geodesics = Vec::new();
    let mut discarded = 0;
    for b in built {
        match b? {
            Some(g) => geodesics.push(g),
            None => discarded += 1,
        }
    }
    let mut keyed: Vec<(f64, String, ClosedGeodesic)> =
        geodesics.into_iter().map(|g| (g.length, key_string(spec, &g.class.key), g)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(Census {
        t,
        primitive_only,
        geodesics: keyed.into_iter().map(|(_, _, g)| g).collect(),
        discarded,
    })
}

/// One entry per loxodromic conjugacy class of length ≤ `t`.
pub fn enumerate_closed_geodesics(spec: &GroupSpec, t: f64, primitive_only: bool) -> Result<Vec<ClosedGeodesic>> {
    Ok(census(spec, t, primitive_only)?.geodesics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn no_modular_geodesic_below_first_length() {
        let g = GroupSpec::modular();
        assert!(enumerate_closed_geodesics(&g, 1.9, true).unwrap().is_empty());
        let list = enumerate_closed_geodesics(&g, 2.0, true).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].trace, Some(3.0));
        assert!((list[0].length - 2.0 * 1.5f64.acosh()).abs() < 1e-12);
    }

    /// Classes at T = 4 from an exhaustive search over all normal-form words
    /// with at most 12 syllables.
    #[test]
    fn modular_census_matches_word_brute_force() {
        let g = GroupSpec::modular();
        let t: f64 = 4.0;
        let bound = 2.0 * (t / 2.0).cosh();
        let mut keys = BTreeSet::new();
        let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..12 {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..g.letter_count() as u8 {
                    if w.last().is_some_and(|&p| !g.may_follow(p, l)) {
                        continue;
                    }
                    let mut cw = w.clone();
                    cw.push(l);
                    let word = Word { letters: cw.clone() };
                    let m = g.evaluate_sl2(&word).unwrap();
                    if m.trace().abs() > 2.0 && m.trace().abs() <= bound {
                        keys.insert(g.canonical_class_key(&word));
                    }
                    next.push(cw);
                }
            }
            frontier = next;
        }
        let census = enumerate_closed_geodesics(&g, t, false).unwrap();
        let got: BTreeSet<Word> = census.iter().map(|c| c.class.key.clone()).collect();
        assert_eq!(got, keys);
    }

    fn necklaces(n: u32, k: u64) -> u64 {
        let cr = |m: u32| -> u64 {
            (2 * k - 1).pow(m) + 1 + (k - 1) * if m % 2 == 0 { 2 } else { 0 }
        };
        let phi = |m: u32| (1..=m).filter(|j| gcd(*j, m) == 1).count() as u64;
        fn gcd(a: u32, b: u32) -> u32 {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        (1..=n).filter(|g| n % g == 0).map(|g| phi(n / g) * cr(g)).sum::<u64>() / n as u64
    }

    #[test]
    fn schottky_census_matches_necklace_count() {
        let l = 12.0;
        let g = GroupSpec::schottky(l).unwrap();
        let t = 3.0 * l + 0.5;
        let list = enumerate_closed_geodesics(&g, t, false).unwrap();
        let expected: u64 = (1..=3).map(|n| necklaces(n, 2)).sum();
        assert_eq!(necklaces(2, 2), 8);
        assert_eq!(list.len() as u64, expected);
        assert!(list.iter().all(|c| c.length <= t));
    }

    #[test]
    fn hecke_census_sanity() {
        let g = GroupSpec::hecke(3.0).unwrap();
        let list = enumerate_closed_geodesics(&g, 4.0, false).unwrap();
        // ST has trace 3: the shortest class
        assert!((list[0].length - 2.0 * 1.5f64.acosh()).abs() < 1e-12);
        for c in &list {
            assert!(c.length <= 4.0 + 1e-7);
            assert!(c.class.representative.classify(&Tolerances::default()).unwrap().is_loxodromic());
        }
        // exhaustive search over sequences with |nᵢ| ≤ 2 and at most 4 syllables
        let bound: f64 = 2.0 * 2f64.cosh();
        let mut keys = BTreeSet::new();
        let mut seqs: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..4 {
            let mut next = Vec::new();
            for s in &seqs {
                for n in [-2, -1, 1, 2] {
                    let mut c = s.clone();
                    c.push(n);
                    let mut w = String::new();
                    for &k in &c {
                        w.push('S');
                        w.push_str(&(if k > 0 { "T" } else { "t" }).repeat(k.unsigned_abs() as usize));
                    }
                    let word = g.parse_word(&w).unwrap();
                    if g.evaluate_sl2(&word).unwrap().trace().abs() <= bound {
                        keys.insert(g.canonical_class_key(&word));
                    }
                    next.push(c);
                }
            }
            seqs = next;
        }
        let got: BTreeSet<Word> = list.iter().map(|c| c.class.key.clone()).collect();
        assert_eq!(got, keys);
    }

    #[test]
    fn primitive_flag_and_power() {
        let g = GroupSpec::modular();
        let all = enumerate_closed_geodesics(&g, 4.0, false).unwrap();
        let square = all
            .iter()
            .find(|c| g.format_word(&c.class.key) == "SUSuSUSu")
            .expect("(RL)² has trace 7 and length 2·arccosh(3.5)");
        assert!(!square.class.primitive);
        assert_eq!(square.class.power, 2);
        let prim = enumerate_closed_geodesics(&g, 4.0, true).unwrap();
        assert_eq!(prim.len(), all.iter().filter(|c| c.class.primitive).count());
    }
}
