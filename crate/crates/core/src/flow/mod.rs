//! Cusp geometry along trajectories of the frame flow (d = 2 presets):
//! fundamental-domain reduction, horoball membership, itineraries and exact
//! cusp-excursion durations.

mod bowen;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::group::{ClosedGeodesic, CuspSpec, GroupSpec, Reduction, Word};
use crate::isometry::{to_upper_half, BoundaryPoint, Frame, Isometry, Mat2, UHPoint};

pub use bowen::{
    bowen_ball_test, bowen_ball_test_forward, separated_count, separated_count_quotient, QuotientMetric,
};

/// Maximal number of reduction steps before giving up.
pub const MAX_REDUCTION_STEPS: usize = 10_000;

/// Smallest accepted horoball height. At heights ≥ 1 the horoballs of the
/// preset lattices are pairwise disjoint.
pub const Y_MIN: f64 = 1.0;

/// Default sampling step for excursion detection.
pub const EXCURSION_STEP: f64 = 0.05;

/// Relative slack on the fundamental-domain inequalities, so that points on
/// the boundary are left alone.
const SIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    /// `z ↦ z + k·width`.
    Translate(i64),
    /// `z ↦ −1/z`.
    Invert,
    /// Apply a generator letter.
    Letter(u8),
}

fn step_matrix(spec: &GroupSpec, step: Step, width: f64) -> Mat2 {
    match step {
        Step::Translate(k) => Mat2::new(1.0, k as f64 * width, 0.0, 1.0),
        Step::Invert => Mat2::new(0.0, -1.0, 1.0, 0.0),
        Step::Letter(l) => *spec.letter_iso(l).exact_2x2().expect("d = 2 preset generator"),
    }
}

pub(crate) fn require_d2(spec: &GroupSpec) -> Result<()> {
    if spec.dim != 2 || !spec.has_exact_2x2() {
        return Err(GeoError::UnsupportedGroup(format!(
            "{} (reduction needs a d = 2 group with 2×2 generators)",
            spec.family.name()
        )));
    }
    Ok(())
}

/// `cosh d(z, i)`.
fn cosh_dist_to_i(z: Complex64) -> f64 {
    (z.norm_sqr() + 1.0) / (2.0 * z.im)
}

/// Reduce `z` into the closed fundamental domain, returning the reduced
/// point and the matrix `W` with `W z = z'`.
pub(crate) fn reduce_complex(spec: &GroupSpec, z: Complex64) -> Result<(Complex64, Mat2)> {
    let (z, steps) = reduce_steps(spec, z)?;
    let width = match spec.reduction {
        Reduction::TranslateInvert { width } => width,
        _ => 0.0,
    };
    let mut w = Mat2::IDENTITY;
    for s in steps {
        w = step_matrix(spec, s, width) * w;
    }
    Ok((z, w))
}

fn reduce_steps(spec: &GroupSpec, mut z: Complex64) -> Result<(Complex64, Vec<Step>)> {
    require_d2(spec)?;
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(GeoError::ModelViolation(format!("{z} is not in the upper half plane")));
    }
    let mut steps = Vec::new();
    match spec.reduction {
        Reduction::TranslateInvert { width } => loop {
            if steps.len() > MAX_REDUCTION_STEPS {
                return Err(GeoError::NonTerminating(MAX_REDUCTION_STEPS));
            }
            if z.re.abs() > width / 2.0 * (1.0 + SIDE_TOL) {
                let k = -(z.re / width).round() as i64;
                z.re += k as f64 * width;
                steps.push(Step::Translate(k));
            }
            if z.norm_sqr() < 1.0 - SIDE_TOL {
                z = -z.inv();
                steps.push(Step::Invert);
            } else {
                break;
            }
        },
        Reduction::PingPong => {
            let mats: Vec<Mat2> =
                (0..spec.letter_count() as u8).map(|l| step_matrix(spec, Step::Letter(l), 0.0)).collect();
            loop {
                if steps.len() > MAX_REDUCTION_STEPS {
                    return Err(GeoError::NonTerminating(MAX_REDUCTION_STEPS));
                }
                let here = cosh_dist_to_i(z);
                let best = mats
                    .iter()
                    .enumerate()
                    .map(|(l, m)| (l, m.apply(z)))
                    .min_by(|a, b| cosh_dist_to_i(a.1).total_cmp(&cosh_dist_to_i(b.1)))
                    .expect("generators");
                if cosh_dist_to_i(best.1) < here * (1.0 - SIDE_TOL) {
                    z = best.1;
                    steps.push(Step::Letter(best.0 as u8));
                } else {
                    break;
                }
            }
        }
        Reduction::None => {
            return Err(GeoError::UnsupportedGroup(format!(
                "{} has no reduction strategy",
                spec.family.name()
            )))
        }
    }
    Ok((z, steps))
}

fn steps_word(spec: &GroupSpec, steps: &[Step]) -> Result<Word> {
    let mut raw = Vec::new();
    // the group element is s_k ⋯ s_1
    for s in steps.iter().rev() {
        match *s {
            Step::Translate(k) => {
                let t = spec
                    .cusps
                    .first()
                    .and_then(|c| c.stabilizer_gens.first())
                    .ok_or_else(|| GeoError::UnsupportedGroup("translation without a cusp".into()))?;
                let unit = if k > 0 { t.clone() } else { spec.inverse_word(t) };
                for _ in 0..k.unsigned_abs() {
                    raw.extend_from_slice(&unit.letters);
                }
            }
            Step::Invert => {
                raw.push(spec.letter_by_label('S').ok_or_else(|| {
                    GeoError::UnsupportedGroup("inversion needs a generator S".into())
                })?);
            }
            Step::Letter(l) => raw.push(l),
        }
    }
    Ok(spec.normalize(&raw))
}

/// Reduce `z` into the closed fundamental domain: returns `(w·z, w)`.
pub fn reduce(spec: &GroupSpec, z: &UHPoint) -> Result<(UHPoint, Word)> {
    if z.dim() != 2 {
        return Err(GeoError::UnsupportedGroup("reduction is implemented for d = 2".into()));
    }
    let (r, steps) = reduce_steps(spec, z.to_complex())?;
    Ok((UHPoint::from_complex(r)?, steps_word(spec, &steps)?))
}

/// A frame moved into the fundamental domain: `(W·f, base point of W·f, W)`.
pub fn reduce_frame(spec: &GroupSpec, f: &Frame) -> Result<(Frame, Complex64, Mat2)> {
    let z = to_upper_half(&f.base_point())?.to_complex();
    let (zr, w) = reduce_complex(spec, z)?;
    Ok((f.translate(&Isometry::from_sl2_unchecked(w)), zr, w))
}

/// Height of `z` in the chart where the cusp point sits at ∞.
pub fn cusp_height(cusp: &CuspSpec, z: Complex64) -> f64 {
    match &cusp.xi {
        BoundaryPoint::Infinity => z.im,
        BoundaryPoint::Finite(x) => z.im / (z - Complex64::new(x[0], 0.0)).norm_sqr(),
    }
}

/// Horoball neighbourhood `{height ≥ Y}` of a cusp.
#[derive(Debug, Clone, PartialEq)]
pub struct HoroRegion {
    pub cusp: CuspSpec,
    pub y: f64,
}

impl HoroRegion {
    pub fn new(cusp: CuspSpec, y: f64) -> Result<Self> {
        if !(y >= Y_MIN) {
            return Err(GeoError::InvalidArgument(format!("horoball height {y} below the floor {Y_MIN}")));
        }
        Ok(Self { cusp, y })
    }

    /// The region of `spec`'s first cusp at height `y`.
    pub fn of(spec: &GroupSpec, y: f64) -> Result<Self> {
        let cusp = spec
            .cusps
            .first()
            .cloned()
            .ok_or_else(|| GeoError::UnsupportedGroup(format!("{} has no cusp", spec.family.name())))?;
        Self::new(cusp, y)
    }
}

/// Height for a Margulis-type parameter `ε`: `Y = l_Γ / (2 sinh(ε/2))`, the
/// height at which the stabilizer translation `l_Γ` has displacement `ε`.
pub fn height_for_epsilon(l_min: f64, eps: f64) -> f64 {
    l_min / (2.0 * (eps / 2.0).sinh())
}

/// Inverse of [`height_for_epsilon`].
pub fn epsilon_for_height(l_min: f64, y: f64) -> f64 {
    2.0 * (l_min / (2.0 * y)).asinh()
}

/// Whether a reduced point lies in the horoball region.
pub fn cusp_membership(spec: &GroupSpec, z: &UHPoint, region: &HoroRegion) -> bool {
    debug_assert!(
        reduce(spec, z).map_or(true, |(_, w)| w.is_empty()),
        "cusp_membership expects a reduced point"
    );
    cusp_height(&region.cusp, z.to_complex()) >= region.y
}

/// Rank of the cusp region containing the reduced point `z` at height `y`
/// (0 outside every cusp region).
pub(crate) fn region_rank(spec: &GroupSpec, z: Complex64, y: f64) -> u8 {
    spec.cusps
        .iter()
        .find(|c| cusp_height(c, z) >= y)
        .map_or(0, |c| c.rank as u8)
}

/// `V(m)` for `m ∈ [−N, N]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Itinerary {
    pub values: Vec<u8>,
    pub n: usize,
    pub step: f64,
    pub y: f64,
}

impl Itinerary {
    pub fn value(&self, m: i64) -> u8 {
        self.values[(m + self.n as i64) as usize]
    }

    /// Number of nonzero entries, `|V⁻¹(ℕ_{>0})|`.
    pub fn cusp_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0).count()
    }

    /// `|V⁻¹(i)|`.
    pub fn count_of(&self, i: u8) -> usize {
        self.values.iter().filter(|&&v| v == i).count()
    }
}

/// The itinerary of `start` over integer times `m ∈ [−N, N]`.
///
/// The trajectory is followed at step `h` (rounded so that `1/h` is an
/// integer) and reduced incrementally: each sample is first moved by the
/// previous reducing element, so only a few reduction steps are needed.
pub fn itinerary(spec: &GroupSpec, start: &Frame, n: usize, h: f64, y: f64) -> Result<Itinerary> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(GeoError::InvalidArgument(format!("step {h} outside (0, 1]")));
    }
    require_d2(spec)?;
    let per_unit = (1.0 / h).round().max(1.0) as usize;
    let h = 1.0 / per_unit as f64;
    let mut values = vec![0u8; 2 * n + 1];
    // forward and backward from time 0
    for dir in [1.0, -1.0] {
        let mut w = Mat2::IDENTITY;
        for k in 0..=(n * per_unit) {
            let t = dir * k as f64 * h;
            let f = start.flow(t);
            let z0 = to_upper_half(&f.base_point())?.to_complex();
            let (zr, step) = reduce_complex(spec, w.apply(z0))?;
            w = step * w;
            if k % per_unit == 0 {
                let m = dir as i64 * (k / per_unit) as i64;
                values[(m + n as i64) as usize] = region_rank(spec, zr, y);
            }
        }
    }
    Ok(Itinerary { values, n, step: h, y })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Excursion {
    pub t_in: f64,
    pub t_out: f64,
    pub max_height: f64,
    pub cusp: usize,
}

impl Excursion {
    pub fn duration(&self) -> f64 {
        self.t_out - self.t_in
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionProfile {
    /// Disjoint, sorted by entry time; times are measured along the axis
    /// parametrization of [`axis_matrix`], inside one period starting at a
    /// point of the thick part.
    pub excursions: Vec<Excursion>,
    pub total_fraction: f64,
    pub period: f64,
    pub y: f64,
    /// Sampling step; excursions shorter than `2·step` may be missed.
    pub step: f64,
}

/// `M ∈ SL(2,ℝ)` with `M(0) = rep`, `M(∞) = att`: the frame `M a_t` runs
/// along the axis from `rep` to `att` at unit speed.
pub fn axis_matrix(rep: &BoundaryPoint, att: &BoundaryPoint) -> Result<Mat2> {
    match (rep.as_real(), att.as_real()) {
        (Some(r), Some(a)) => {
            if (a - r).abs() < 1e-14 * (1.0 + a.abs()) {
                return Err(GeoError::CoincidentEndpoints);
            }
            let s = (a - r).signum();
            Ok(Mat2::new(a, s * r, 1.0, s).normalized())
        }
        (Some(r), None) => Ok(Mat2::new(1.0, r, 0.0, 1.0)),
        (None, Some(a)) => Ok(Mat2::new(a, -1.0, 1.0, 0.0)),
        (None, None) => Err(GeoError::CoincidentEndpoints),
    }
}

/// The excursion above height `y` of the geodesic `t ↦ M(i e^t)` (with the
/// cusp at ∞): its height is `R sech(t − t*)` with `R = 1/(2|cd|)` and
/// `e^{t*} = |d/c|`, so the time above `y` is `t* ± arccosh(R/y)`.
/// Returns `(t_in, t_out, R)`, or `None` if the apex stays below `y`.
pub fn excursion_interval(m: &Mat2, y: f64) -> Option<(f64, f64, f64)> {
    let m = m.normalized();
    if m.c == 0.0 || m.d == 0.0 {
        return None;
    }
    let r = 1.0 / (2.0 * (m.c * m.d).abs());
    if r < y {
        return None;
    }
    let t_star = (m.d / m.c).abs().ln();
    let half = (r / y).acosh();
    Some((t_star - half, t_star + half, r))
}

/// Cusp excursions of a closed geodesic above height `y`.
///
/// The period is sampled at step [`EXCURSION_STEP`] starting from a point of
/// the thick part; whenever a reduced sample lies above `y`, the excursion is
/// computed in closed form on that lift.
pub fn excursion_profile(spec: &GroupSpec, g: &ClosedGeodesic, y: f64) -> Result<ExcursionProfile> {
    excursion_profile_with_step(spec, g, y, EXCURSION_STEP)
}

pub fn excursion_profile_with_step(spec: &GroupSpec, g: &ClosedGeodesic, y: f64, h: f64) -> Result<ExcursionProfile> {
    let period = g.length;
    let empty = ExcursionProfile { excursions: Vec::new(), total_fraction: 0.0, period, y, step: h };
    if spec.cusps.is_empty() {
        if spec.reduction == Reduction::None {
            return Err(GeoError::UnsupportedGroup(format!("{} has no reduction strategy", spec.family.name())));
        }
        return Ok(empty);
    }
    require_d2(spec)?;
    if !(y >= Y_MIN) {
        return Err(GeoError::InvalidArgument(format!("horoball height {y} below the floor {Y_MIN}")));
    }
    if spec.cusps.len() != 1 || !spec.cusps[0].xi.is_infinity() {
        return Err(GeoError::UnsupportedGroup("excursions need a single cusp at ∞".into()));
    }
    let m0 = axis_matrix(&g.axis.0, &g.axis.1)?;
    let samples = (period / h).ceil() as usize;
    let point = |w: &Mat2, t: f64| (*w * m0).apply(Complex64::new(0.0, t.exp()));

    // a thick starting time: the reduced height is below 1 ≤ y
    let mut w = Mat2::IDENTITY;
    let mut t0 = None;
    let mut lowest = (f64::INFINITY, 0.0, Mat2::IDENTITY);
    for k in 0..samples {
        let t = k as f64 * h;
        let (zr, step) = reduce_complex(spec, point(&w, t))?;
        w = step * w;
        if zr.im < 1.0 {
            t0 = Some((t, w));
            break;
        }
        if zr.im < lowest.0 {
            lowest = (zr.im, t, w);
        }
    }
    let (t0, mut w) = t0.unwrap_or((lowest.1, lowest.2));

    let mut found: Vec<Excursion> = Vec::new();
    for k in 0..=samples {
        let t = t0 + k as f64 * h;
        let (zr, step) = reduce_complex(spec, point(&w, t))?;
        w = step * w;
        if zr.im >= y {
            if let Some((a, b, r)) = excursion_interval(&(w * m0), y) {
                found.push(Excursion { t_in: a, t_out: b, max_height: r, cusp: 0 });
            }
        }
    }
    found.sort_by(|a, b| a.t_in.total_cmp(&b.t_in));
    let mut excursions: Vec<Excursion> = Vec::new();
    for e in found {
        match excursions.last_mut() {
            Some(last) if e.t_in <= last.t_out + 1e-9 => {
                last.t_out = last.t_out.max(e.t_out);
                last.max_height = last.max_height.max(e.max_height);
            }
            _ => excursions.push(e),
        }
    }
    // keep one period [t0, t0 + period)
    excursions.retain(|e| e.t_in < t0 + period - 1e-9);
    let total: f64 = excursions.iter().map(|e| e.duration()).sum();
    Ok(ExcursionProfile { excursions, total_fraction: (total / period).min(1.0), period, y, step: h })
}
