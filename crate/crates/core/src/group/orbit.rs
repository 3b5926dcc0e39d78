//! Orbit balls `N(r, o) = {γ : d(o, γo) ≤ r}`.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::{Enumeration, GroupSpec, Word};
use crate::error::{GeoError, Result};
use crate::isometry::{raw_distance, HPoint, Isometry, RENORMALIZE_EVERY};

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitEntry {
    pub word: Word,
    pub iso: Isometry,
    /// `d(x, γy)`; for a plain orbit ball `x = y = o`.
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBall {
    pub base: HPoint,
    pub radius: f64,
    /// Sorted by displacement, ties broken by word.
    pub entries: Vec<OrbitEntry>,
}

impl OrbitBall {
    /// `|N(r, o)|` for `r` at most the enumerated radius.
    pub fn count_within(&self, r: f64) -> usize {
        self.entries.partition_point(|e| e.displacement <= r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Distance from the hyperboloid origin to `M e₀`; `cosh d = M₀₀`.
fn displacement_from_origin(m: &Isometry) -> f64 {
    let c = m.entry(0, 0);
    if c < 2.0 {
        2.0 * ((c - 1.0).max(0.0) / 2.0).sqrt().asinh()
    } else {
        c.acosh()
    }
}

/// Iterative depth-first search below the first letter `first` (words can
/// be thousands of letters deep in a cusp).
fn pruned_search(
    spec: &GroupSpec,
    first: u8,
    limit: f64,
    slack: f64,
    cap: usize,
    found: &AtomicUsize,
) -> Result<Vec<(Word, Isometry, f64)>> {
    let mut out = Vec::new();
    let mut word: Vec<u8> = Vec::new();
    let mut stack: Vec<(usize, u8, Isometry)> = vec![(0, first, *spec.letter_iso(first))];
    while let Some((depth, l, m)) = stack.pop() {
        word.truncate(depth);
        word.push(l);
        let d = displacement_from_origin(&m);
        if d > limit + slack {
            continue;
        }
        if d <= limit {
            if found.fetch_add(1, Ordering::Relaxed) >= cap {
                return Err(GeoError::BudgetExceeded { cap });
            }
            out.push((Word { letters: word.clone() }, m, d));
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

/// All `(γ, γ as matrix, d(o, γo))` with `d(o, γo) ≤ r` for `o` the
/// hyperboloid origin.
fn ball_at_origin(spec: &GroupSpec, r: f64) -> Result<Vec<(Word, Isometry, f64)>> {
    let found = AtomicUsize::new(1);
    let mut all = vec![(Word::empty(), Isometry::identity(spec.dim), 0.0)];
    match spec.enumeration {
        Enumeration::Pruned { slack } => {
            let parts: Vec<Result<Vec<_>>> = (0..spec.letter_count() as u8)
                .into_par_iter()
                .map(|l| pruned_search(spec, l, r, slack, spec.budget, &found))
                .collect();
            for p in parts {
                all.extend(p?);
            }
        }
        Enumeration::Depth { max_letters } => {
            let mut seen: HashSet<Vec<i64>> = HashSet::new();
            seen.insert(quantized_key(&Isometry::identity(spec.dim)));
            let mut frontier = vec![(Vec::<u8>::new(), Isometry::identity(spec.dim))];
            for depth in 0..max_letters {
                let mut next = Vec::new();
                for (w, m) in &frontier {
                    for l in 0..spec.letter_count() as u8 {
                        if let Some(&last) = w.last() {
                            if !spec.may_follow(last, l) {
                                continue;
                            }
                        }
                        let mut child = m.compose(spec.letter_iso(l));
                        if (depth + 1) % RENORMALIZE_EVERY == 0 {
                            child = child.renormalized();
                        }
                        let mut cw = w.clone();
                        cw.push(l);
                        if seen.insert(quantized_key(&child)) {
                            let d = displacement_from_origin(&child);
                            if d <= r {
                                if all.len() >= spec.budget {
                                    return Err(GeoError::BudgetExceeded { cap: spec.budget });
                                }
                                all.push((Word { letters: cw.clone() }, child, d));
                            }
                        }
                        next.push((cw, child));
                    }
                }
                if next.len() > spec.budget {
                    return Err(GeoError::BudgetExceeded { cap: spec.budget });
                }
                frontier = next;
            }
        }
    }
    Ok(all)
}

/// Quantized key at resolution 1e−7 (collisions possible for elements
/// closer than that).
fn quantized_key(m: &Isometry) -> Vec<i64> {
    if let Some(g) = m.exact_2x2() {
        return g.psl_quantized_key(1e-7).to_vec();
    }
    m.to_vec().iter().map(|x| (x / 1e-7).round() as i64).collect()
}

fn sort_entries(entries: &mut [OrbitEntry]) {
    entries.sort_by(|a, b| a.displacement.total_cmp(&b.displacement).then_with(|| a.word.cmp(&b.word)));
}

/// The orbit ball `N(r, o)`.
pub fn enumerate_orbit(spec: &GroupSpec, o: &HPoint, r: f64) -> Result<OrbitBall> {
    let entries = enumerate_orbit_from(spec, o, o, r)?;
    Ok(OrbitBall { base: *o, radius: r, entries })
}

/// All `γ` with `d(x, γy) ≤ r`, sorted by that distance.
///
/// The pruned search is carried out around the origin with the radius
/// enlarged by `d(x, e₀) + d(y, e₀)` and then filtered.
pub fn enumerate_orbit_from(spec: &GroupSpec, x: &HPoint, y: &HPoint, r: f64) -> Result<Vec<OrbitEntry>> {
    if x.dim() != spec.dim || y.dim() != spec.dim {
        return Err(GeoError::InvalidArgument("base point dimension mismatch".into()));
    }
    if !(r >= 0.0) {
        return Err(GeoError::InvalidArgument(format!("radius {r} must be nonnegative")));
    }
    let origin = HPoint::origin(spec.dim);
    let dx = raw_distance(x.coords(), origin.coords());
    let dy = raw_distance(y.coords(), origin.coords());
    let at_origin = dx == 0.0 && dy == 0.0;
    let raw = ball_at_origin(spec, r + dx + dy)?;
    let mut entries: Vec<OrbitEntry> = raw
        .into_iter()
        .filter_map(|(word, iso, d)| {
            let dist = if at_origin {
                d
            } else {
                raw_distance(x.coords(), &iso.apply_raw(y.coords())[..=spec.dim])
            };
            (dist <= r).then_some(OrbitEntry { word, iso, displacement: dist })
        })
        .collect();
    sort_entries(&mut entries);
    Ok(entries)
}
