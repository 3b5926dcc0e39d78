//! Regular covers given by kernels of homomorphisms to `ℤ^k` (or finite
//! quotients of it): kernel censuses, critical exponents and the
//! equidistribution and mass statements for lifted closed geodesics.

use serde::Serialize;
use serde_json::json;

use crate::error::{GeoError, Result};
use crate::group::{census, enumerate_orbit, hom_eval, ClosedGeodesic, GroupSpec, Hom};
use crate::isometry::{BoundaryPoint, HPoint};
use crate::report::{Report, Table, Verdict};
use crate::spectral::{default_window, delta_from_displacements, estimate_delta, DeltaEstimate, DeltaMethod};
use crate::statistics::{
    orbit_averages, pairwise_sum, profile_all, reference_value, RateFit, ReferenceValue, TestFunction,
    SAMPLES_PER_UNIT,
};

/// Tolerance of the trend assertion of [`cover_equidistribution`].
pub const COVER_TREND_SLACK: f64 = 0.05;
/// Required margin `δ(kernel) − r_max/2` for the mass statement.
pub const MASS_MARGIN: f64 = 0.1;
/// Lower bound asserted for the compact-part mass.
pub const MASS_FLOOR: f64 = 0.05;
/// Allowed shortfall of the kernel growth rate below `δ(base)`.
pub const GROWTH_SLACK: f64 = 0.1;

/// The cover `Γ\H` of `Γ₀\H` with `Γ = ker(hom) ⊲ Γ₀ = base`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSpec {
    pub base: GroupSpec,
    pub hom: Hom,
    /// `ℤ^k` and finite abelian quotients are amenable by construction.
    pub amenable: bool,
}

impl CoverSpec {
    pub fn new(base: GroupSpec, hom: Hom) -> Self {
        Self { base, hom, amenable: true }
    }

    /// Parse the homomorphism as in [`Hom::parse`].
    pub fn parse(base: GroupSpec, hom: &str) -> Result<Self> {
        let hom = Hom::parse(&base, hom)?;
        Ok(Self::new(base, hom))
    }

    pub fn in_kernel(&self, g: &ClosedGeodesic) -> bool {
        hom_eval(&self.base, &g.class.key, &self.hom).iter().all(|&x| x == 0)
    }

    /// Look for two loxodromic kernel classes with distinct axes among the
    /// kernel censuses up to `t_max`.
    pub fn check_non_elementary(&self, t_max: f64) -> Result<()> {
        let mut t = 4.0_f64.min(t_max);
        loop {
            let list = kernel_census(self, t)?;
            let distinct = |a: &ClosedGeodesic, b: &ClosedGeodesic| {
                !(same_point(&a.axis.0, &b.axis.0) && same_point(&a.axis.1, &b.axis.1))
                    && !(same_point(&a.axis.0, &b.axis.1) && same_point(&a.axis.1, &b.axis.0))
            };
            if list.iter().enumerate().any(|(i, a)| list[i + 1..].iter().any(|b| distinct(a, b))) {
                return Ok(());
            }
            if t >= t_max {
                return Err(GeoError::HypothesisNotMet(format!(
                    "no two kernel geodesics with distinct axes up to length {t_max}"
                )));
            }
            t = (t + 2.0).min(t_max);
        }
    }
}

fn same_point(a: &BoundaryPoint, b: &BoundaryPoint) -> bool {
    match (a.as_real(), b.as_real()) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * (1.0 + x.abs()),
        (None, None) => true,
        _ => false,
    }
}

/// The classes of the base census whose representative has trivial image:
/// these orbits lift to closed orbits of the same length.
pub fn kernel_census(cover: &CoverSpec, t: f64) -> Result<Vec<ClosedGeodesic>> {
    let list = census(&cover.base, t, true)?.geodesics;
    Ok(list.into_iter().filter(|g| cover.in_kernel(g)).collect())
}

/// `log |kernel census(T)|` against `T`.
pub fn kernel_growth(cover: &CoverSpec, t_grid: &[f64]) -> Result<RateFit> {
    let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let list = kernel_census(cover, t_max)?;
    let grid = t_grid.iter().map(|&t| (t, list.iter().filter(|g| g.length <= t).count() as f64)).collect();
    RateFit::exponential(grid)
}

/// Orbit displacements `d(o, γo)` of kernel elements up to radius `r`, sorted.
pub fn kernel_displacements(cover: &CoverSpec, o: &HPoint, r: f64) -> Result<Vec<f64>> {
    let ball = enumerate_orbit(&cover.base, o, r)?;
    Ok(ball
        .entries
        .iter()
        .filter(|e| hom_eval(&cover.base, &e.word, &cover.hom).iter().all(|&x| x == 0))
        .map(|e| e.displacement)
        .collect())
}

/// `δ(ker φ)` from the kernel part of the orbit ball.
pub fn kernel_delta(cover: &CoverSpec, o: &HPoint, window: (f64, f64), method: DeltaMethod) -> Result<DeltaEstimate> {
    let d = kernel_displacements(cover, o, window.1)?;
    delta_from_displacements(&d, window, method)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverDeltaReport {
    pub base: DeltaEstimate,
    pub kernel: DeltaEstimate,
    pub tol: f64,
}

impl CoverDeltaReport {
    pub fn gap(&self) -> f64 {
        (self.kernel.delta_hat - self.base.delta_hat).abs()
    }

    pub fn pass(&self) -> bool {
        self.gap() <= self.tol
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["group", "delta_hat", "ci_low", "ci_high"]);
        for (name, e) in [("base", &self.base), ("kernel", &self.kernel)] {
            table.push(vec![json!(name), json!(e.delta_hat), json!(e.ci_low), json!(e.ci_high)]);
        }
        Report::new("cover-delta", table, Verdict::from_bool(self.pass()))
            .param("gap", self.gap())
            .param("tol", self.tol)
            .param("r_min", self.base.r_window.0)
            .param("r_max", self.base.r_window.1)
    }
}

/// Base and kernel exponents over the same window and orbit ball; `tol` is
/// the allowed gap.
pub fn cover_delta(cover: &CoverSpec, window: (f64, f64), method: DeltaMethod, tol: f64) -> Result<CoverDeltaReport> {
    let o = cover.base.base_point();
    let ball = enumerate_orbit(&cover.base, &o, window.1)?;
    let all: Vec<f64> = ball.entries.iter().map(|e| e.displacement).collect();
    let kern: Vec<f64> = ball
        .entries
        .iter()
        .filter(|e| hom_eval(&cover.base, &e.word, &cover.hom).iter().all(|&x| x == 0))
        .map(|e| e.displacement)
        .collect();
    Ok(CoverDeltaReport {
        base: delta_from_displacements(&all, window, method)?,
        kernel: delta_from_displacements(&kern, window, method)?,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEquiPoint {
    pub t: f64,
    pub kernel_count: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEquidistribution {
    pub function: String,
    pub points: Vec<CoverEquiPoint>,
    pub reference: ReferenceValue,
    /// Number of coset translates summed in `f̃`.
    pub cosets_summed: usize,
    pub slack: f64,
}

impl CoverEquidistribution {
    pub fn trend_holds(&self) -> bool {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.error <= a.error + self.slack,
            _ => false,
        }
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["T", "kernel_count", "value", "reference", "error"]);
        for p in &self.points {
            table.push(vec![
                json!(p.t),
                json!(p.kernel_count as u64),
                json!(p.value),
                json!(self.reference.value),
                json!(p.error),
            ]);
        }
        Report::new("cover-equidistribute", table, Verdict::from_bool(self.trend_holds()))
            .param("f", self.function.clone())
            .param("reference", self.reference.value)
            .param("reference_method", self.reference.method.clone())
            .param("cosets_summed", self.cosets_summed as u64)
            .with_slack(self.slack)
            .note("f lives on the sheet over the base fundamental domain, so its coset sum is f itself")
    }
}

/// `(1/N_T) Σ_l ∫ f dμ_l` over the kernel census against `∫ f̃ dm_BM`.
///
/// The cover function is `f` on the lift of the base fundamental domain to
/// the identity sheet and zero elsewhere; exactly one coset translate of a
/// point meets that sheet, so the truncated coset sum `f̃` equals `f` on the
/// base. The reference is taken from the base surface (see
/// [`reference_value`]).
pub fn cover_equidistribution(cover: &CoverSpec, t_grid: &[f64], f: &TestFunction) -> Result<CoverEquidistribution> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let t_max = *ts.last().ok_or_else(|| GeoError::EmptyInput("empty length grid".into()))?;
    let list = kernel_census(cover, t_max)?;
    if list.is_empty() {
        return Err(GeoError::EmptyInput(format!("empty kernel census at T = {t_max}")));
    }
    let avgs = orbit_averages(&cover.base, &list, SAMPLES_PER_UNIT, f)?;
    let reference = reference_value(&cover.base, f, t_max + 2.0)?;
    let points = ts
        .iter()
        .map(|&t| {
            let k = list.partition_point(|g| g.length <= t);
            if k == 0 {
                return Err(GeoError::EmptyInput(format!("empty kernel census at T = {t}")));
            }
            let value = pairwise_sum(&avgs[..k]) / k as f64;
            Ok(CoverEquiPoint { t, kernel_count: k, value, error: (value - reference.value).abs() })
        })
        .collect::<Result<_>>()?;
    Ok(CoverEquidistribution { function: f.name(), points, reference, cosets_summed: 1, slack: COVER_TREND_SLACK })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReport {
    pub y: f64,
    pub kernel_delta: f64,
    pub r_max: usize,
    /// `(T, kernel count, mass of {height < Y})`.
    pub masses: Vec<(f64, usize, f64)>,
    /// `min_T` of the compact-part mass.
    pub beta0: f64,
    /// Only classes with cusp fraction at least this value were kept.
    pub min_cusp_fraction: Option<f64>,
    pub floor: f64,
}

impl MassReport {
    pub fn pass(&self) -> bool {
        self.beta0 >= self.floor
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["T", "kernel_count", "compact_mass"]);
        for &(t, c, m) in &self.masses {
            table.push(vec![json!(t), json!(c as u64), json!(m)]);
        }
        Report::new("cover-mass", table, Verdict::from_bool(self.pass()))
            .param("Y", self.y)
            .param("kernel_delta", self.kernel_delta)
            .param("r_max", self.r_max as u64)
            .param("beta0", self.beta0)
            .param("floor", self.floor)
            .param("min_cusp_fraction", self.min_cusp_fraction.map_or(serde_json::Value::Null, |v| json!(v)))
    }
}

/// The kernel-census mass of the compact part `{height < Y}` across `T`,
/// under the hypothesis `δ(kernel) − r_max/2 ≥ 0.1`.
///
/// `min_cusp_fraction` restricts the census to classes spending at least that
/// fraction of their length above `Y` (a negative control).
pub fn mass_nonescape_check(
    cover: &CoverSpec,
    t_grid: &[f64],
    y: f64,
    min_cusp_fraction: Option<f64>,
) -> Result<MassReport> {
    let base = &cover.base;
    let r_max = base.r_max();
    let kd = kernel_delta(cover, &base.base_point(), default_window(base), DeltaMethod::OrbitCountFit)?.delta_hat;
    if kd - r_max as f64 / 2.0 < MASS_MARGIN {
        return Err(GeoError::HypothesisNotMet(format!(
            "δ(kernel) = {kd:.4} is within {MASS_MARGIN} of r_max/2 = {}",
            r_max as f64 / 2.0
        )));
    }
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let t_max = *ts.last().ok_or_else(|| GeoError::EmptyInput("empty length grid".into()))?;
    let mut profiled = profile_all(base, kernel_census(cover, t_max)?, y)?;
    if let Some(b) = min_cusp_fraction {
        profiled.retain(|p| p.profile.total_fraction >= b);
    }
    let masses: Vec<(f64, usize, f64)> = ts
        .iter()
        .map(|&t| {
            let compact: Vec<f64> = profiled
                .iter()
                .filter(|p| p.geodesic.length <= t)
                .map(|p| 1.0 - p.profile.total_fraction)
                .collect();
            if compact.is_empty() {
                return Err(GeoError::EmptyInput(format!("empty kernel census at T = {t}")));
            }
            Ok((t, compact.len(), pairwise_sum(&compact) / compact.len() as f64))
        })
        .collect::<Result<_>>()?;
    let beta0 = masses.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    Ok(MassReport { y, kernel_delta: kd, r_max, masses, beta0, min_cusp_fraction, floor: MASS_FLOOR })
}

/// `δ̂` of the base over its default window.
pub fn base_delta(cover: &CoverSpec) -> Result<DeltaEstimate> {
    let b = &cover.base;
    estimate_delta(b, &b.base_point(), default_window(b), DeltaMethod::OrbitCountFit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn schottky() -> GroupSpec {
        GroupSpec::schottky(crate::group::SCHOTTKY_DEFAULT_LENGTH).unwrap()
    }

    fn keys(list: &[ClosedGeodesic]) -> BTreeSet<Vec<u8>> {
        list.iter().map(|g| g.class.key.letters.clone()).collect()
    }

    #[test]
    fn zero_hom_keeps_the_whole_census() {
        let g = GroupSpec::modular();
        let cover = CoverSpec::parse(g.clone(), "0").unwrap();
        let full = census(&g, 7.0, true).unwrap().geodesics;
        assert_eq!(kernel_census(&cover, 7.0).unwrap(), full);
    }

    #[test]
    fn exponent_arithmetic_on_schottky_words() {
        let g = schottky();
        let cover = CoverSpec::parse(g.clone(), "a").unwrap();
        let eval = |s: &str| hom_eval(&g, &g.parse_word(s).unwrap(), &cover.hom);
        assert_eq!(eval("ab"), vec![1]);
        assert_eq!(eval("abAb"), vec![0]);
        let list = kernel_census(&cover, 12.0).unwrap();
        let k = keys(&list);
        assert!(k.contains(&g.canonical_class_key(&g.parse_word("abAb").unwrap()).letters));
        assert!(!k.contains(&g.canonical_class_key(&g.parse_word("ab").unwrap()).letters));
        assert!(list.iter().all(|c| cover.in_kernel(c)));
    }

    #[test]
    fn kernel_census_is_closed_under_inversion() {
        let g = schottky();
        let cover = CoverSpec::parse(g.clone(), "a,b").unwrap();
        let list = kernel_census(&cover, 10.0).unwrap();
        let k = keys(&list);
        for c in &list {
            let inv = g.canonical_class_key(&g.inverse_word(&c.class.key));
            assert!(k.contains(&inv.letters), "{}", g.format_word(&c.class.key));
        }
    }

    #[test]
    fn kernel_intersection_law() {
        let g = schottky();
        let ca = CoverSpec::parse(g.clone(), "a").unwrap();
        let cb = CoverSpec::parse(g.clone(), "b").unwrap();
        let both = CoverSpec::new(g.clone(), ca.hom.stack(&cb.hom));
        let ka = keys(&kernel_census(&ca, 10.0).unwrap());
        let kb = keys(&kernel_census(&cb, 10.0).unwrap());
        let kab = keys(&kernel_census(&both, 10.0).unwrap());
        assert_eq!(ka.intersection(&kb).cloned().collect::<BTreeSet<_>>(), kab);
        assert!(!kab.is_empty());
    }

    #[test]
    fn kernel_counts_are_dominated_by_base_counts() {
        let g = schottky();
        let cover = CoverSpec::parse(g.clone(), "a").unwrap();
        let o = g.base_point();
        let kern = kernel_displacements(&cover, &o, 9.0).unwrap();
        let ball = enumerate_orbit(&g, &o, 9.0).unwrap();
        for r in [1.0, 3.0, 5.0, 7.0, 9.0] {
            assert!(kern.partition_point(|&d| d <= r) <= ball.count_within(r));
        }
    }

    #[test]
    fn zero_hom_kernel_delta_is_the_base_delta() {
        let g = GroupSpec::hecke(3.0).unwrap();
        let cover = CoverSpec::parse(g.clone(), "0").unwrap();
        let r = cover_delta(&cover, (6.0, 10.0), DeltaMethod::OrbitCountFit, 1e-12).unwrap();
        assert_eq!(r.base, r.kernel);
        assert!(r.pass());
    }

    #[test]
    fn kernels_are_non_elementary() {
        let g = schottky();
        CoverSpec::parse(g.clone(), "a,b").unwrap().check_non_elementary(12.0).unwrap();
        CoverSpec::parse(GroupSpec::hecke(3.0).unwrap(), "T%3").unwrap().check_non_elementary(10.0).unwrap();
    }

    #[test]
    fn schottky_compact_part_has_full_mass() {
        let cover = CoverSpec::parse(schottky(), "a").unwrap();
        let r = mass_nonescape_check(&cover, &[8.0, 9.0], 4.0, None).unwrap();
        assert!(r.masses.iter().all(|m| m.2 == 1.0));
        assert_eq!(r.beta0, 1.0);
    }

    #[test]
    fn finite_quotient_cusp_mass_matches_the_base() {
        let g = GroupSpec::hecke(3.0).unwrap();
        let cover = CoverSpec::parse(g.clone(), "T%3").unwrap();
        let y = 4.0;
        let mass = |list: Vec<ClosedGeodesic>| {
            let p = profile_all(&g, list, y).unwrap();
            p.iter().map(|x| x.profile.total_fraction).sum::<f64>() / p.len() as f64
        };
        let k = mass(kernel_census(&cover, 9.0).unwrap());
        let b = mass(census(&g, 9.0, true).unwrap().geodesics);
        assert!((k - b).abs() <= 0.05, "{k} vs {b}");
    }

    #[test]
    fn finite_quotient_kernel_growth_keeps_up_with_the_base() {
        let cover = CoverSpec::parse(GroupSpec::hecke(3.0).unwrap(), "T%3").unwrap();
        let rate = kernel_growth(&cover, &[10.0, 12.0, 14.0]).unwrap().slope;
        let delta = base_delta(&cover).unwrap().delta_hat;
        assert!(rate >= delta - GROWTH_SLACK, "{rate} vs {delta}");
    }

    #[test]
    fn zero_hom_equidistribution_is_the_base_curve() {
        let g = GroupSpec::modular();
        let cover = CoverSpec::parse(g.clone(), "0").unwrap();
        let f = TestFunction::CuspIndicator { y: 2.0 };
        let c = cover_equidistribution(&cover, &[6.0, 7.0], &f).unwrap();
        let base = crate::statistics::equidistribution_curve(&g, &[6.0, 7.0], &f, SAMPLES_PER_UNIT).unwrap();
        for (a, b) in c.points.iter().zip(&base.points) {
            assert_eq!(a.kernel_count, b.count);
            assert!((a.value - b.value).abs() < 1e-12);
        }
        let one = cover_equidistribution(&cover, &[6.0, 7.0], &TestFunction::Constant(1.0)).unwrap();
        assert!(one.points.iter().all(|p| (p.value - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mass_check_requires_the_exponent_gap() {
        let ok = CoverSpec::parse(GroupSpec::hecke(3.0).unwrap(), "T%3").unwrap();
        let r = mass_nonescape_check(&ok, &[7.0, 8.0], 4.0, None).unwrap();
        assert!(r.kernel_delta - 0.5 >= MASS_MARGIN);
        let wide = CoverSpec::parse(GroupSpec::hecke(30.0).unwrap(), "T%3").unwrap();
        assert!(matches!(
            mass_nonescape_check(&wide, &[7.0, 8.0], 4.0, None),
            Err(GeoError::HypothesisNotMet(_))
        ));
    }
}
