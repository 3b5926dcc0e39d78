//! Poincaré series, critical exponent estimates, finite-`s` Patterson–Sullivan
//! atoms and the Bowen–Margulis density.

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::fit::least_squares;
use crate::group::{enumerate_orbit, enumerate_orbit_from, Family, GroupSpec, OrbitBall};
use crate::isometry::{
    boundary_to_ball, null_to_boundary, raw_distance, BoundaryPoint, HPoint, N,
};

/// Width of the annuli used to bin series and counts.
pub const ANNULUS_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub s: f64,
    pub r: f64,
    pub partial_sum: f64,
    /// `(inner radius, sum over the annulus [inner, inner + 0.5))`.
    pub annulus_sums: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeltaMethod {
    OrbitCountFit,
    AnnulusSlope,
}

impl DeltaMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "orbit-count" | "OrbitCountFit" | "count" => Ok(DeltaMethod::OrbitCountFit),
            "annulus" | "AnnulusSlope" => Ok(DeltaMethod::AnnulusSlope),
            _ => Err(GeoError::InvalidArgument(format!("unknown delta method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub delta_hat: f64,
    /// `delta_hat ∓ 2·SE` of the regression slope (a heuristic interval).
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: DeltaMethod,
    pub r_window: (f64, f64),
    /// `(abscissa, log count)` pairs used by the fit.
    pub points: Vec<(f64, f64)>,
}

impl DeltaEstimate {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Bin the displacements (in increasing order or not) by annulus.
fn annulus_bins(displacements: impl Iterator<Item = f64>, r: f64, weight: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let n = ((r / ANNULUS_WIDTH).floor() as usize) + 1;
    let mut bins = vec![0.0; n];
    for d in displacements {
        let k = ((d / ANNULUS_WIDTH).floor() as usize).min(n - 1);
        bins[k] += weight(d);
    }
    bins.into_iter().enumerate().map(|(k, v)| (k as f64 * ANNULUS_WIDTH, v)).collect()
}

/// Partial Poincaré series over an already enumerated orbit ball.
pub fn poincare_from_ball(ball: &OrbitBall, s: f64) -> SeriesEstimate {
    let annulus_sums = annulus_bins(ball.entries.iter().map(|e| e.displacement), ball.radius, |d| (-s * d).exp());
    let partial_sum = annulus_sums.iter().map(|(_, v)| v).sum();
    SeriesEstimate { s, r: ball.radius, partial_sum, annulus_sums }
}

/// `Σ_{γ ∈ N(r,o)} e^{−s·d(o, γo)}`.
pub fn poincare_partial(spec: &GroupSpec, o: &HPoint, s: f64, r: f64) -> Result<SeriesEstimate> {
    let ball = enumerate_orbit(spec, o, r)?;
    Ok(poincare_from_ball(&ball, s))
}

/// Critical exponent estimate from a sorted list of orbit displacements.
///
/// `OrbitCountFit` regresses `log |N(r)|` on the integer radii of the window;
/// `AnnulusSlope` regresses the log count of each 0.5-wide annulus inside the
/// window on its midpoint (empty annuli are skipped).
pub fn delta_from_displacements(sorted: &[f64], window: (f64, f64), method: DeltaMethod) -> Result<DeltaEstimate> {
    let (lo, hi) = window;
    if !(hi - lo >= 3.0) || !(lo >= 0.0) {
        return Err(GeoError::InvalidArgument(format!(
            "radius window [{lo}, {hi}] must be nonnegative with width at least 3"
        )));
    }
    let count_within = |r: f64| sorted.partition_point(|&d| d <= r);
    let mut points = Vec::new();
    match method {
        DeltaMethod::OrbitCountFit => {
            let mut r = lo.ceil();
            while r <= hi + 1e-12 {
                let c = count_within(r);
                if c > 0 {
                    points.push((r, (c as f64).ln()));
                }
                r += 1.0;
            }
        }
        DeltaMethod::AnnulusSlope => {
            let mut a = lo;
            while a + ANNULUS_WIDTH <= hi + 1e-12 {
                let c = sorted.partition_point(|&d| d < a + ANNULUS_WIDTH) - sorted.partition_point(|&d| d < a);
                if c > 0 {
                    points.push((a + ANNULUS_WIDTH / 2.0, (c as f64).ln()));
                }
                a += ANNULUS_WIDTH;
            }
        }
    }
    if points.len() < 4 {
        return Err(GeoError::InsufficientData(format!(
            "{} fit points in [{lo}, {hi}], need at least 4",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(DeltaEstimate {
        delta_hat: fit.slope,
        ci_low: fit.slope - 2.0 * fit.slope_se,
        ci_high: fit.slope + 2.0 * fit.slope_se,
        method,
        r_window: window,
        points,
    })
}

pub fn delta_from_ball(ball: &OrbitBall, window: (f64, f64), method: DeltaMethod) -> Result<DeltaEstimate> {
    if window.1 > ball.radius + 1e-12 {
        return Err(GeoError::InvalidArgument(format!(
            "window end {} beyond enumerated radius {}",
            window.1, ball.radius
        )));
    }
    let d: Vec<f64> = ball.entries.iter().map(|e| e.displacement).collect();
    delta_from_displacements(&d, window, method)
}

/// Radius window used when none is given: wide enough for four fit points
/// and small enough for a desk-scale enumeration.
pub fn default_window(spec: &GroupSpec) -> (f64, f64) {
    match spec.family {
        Family::Modular | Family::Hecke { .. } => (7.0, 12.0),
        Family::Schottky { .. } => (8.0, 14.0),
        Family::Custom => (3.0, 7.0),
    }
}

/// `δ` for formulas that need it: the exact value when known, otherwise the
/// orbit-count estimate over [`default_window`].
pub fn reference_delta(spec: &GroupSpec) -> Result<f64> {
    match spec.delta_hint {
        Some(d) => Ok(d),
        None => Ok(estimate_delta(spec, &spec.base_point(), default_window(spec), DeltaMethod::OrbitCountFit)?.delta_hat),
    }
}

/// Estimate `δ(Γ)` from the orbit of `o` over the radius window.
pub fn estimate_delta(spec: &GroupSpec, o: &HPoint, window: (f64, f64), method: DeltaMethod) -> Result<DeltaEstimate> {
    let ball = enumerate_orbit(spec, o, window.1)?;
    delta_from_ball(&ball, window, method)
}

/// The finite-`s` atom measure `Σ e^{−s d(x,γy)} D_{γy}` seen from `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure {
    /// `(direction of γy seen from x, e^{−s·d(x, γy)})`.
    pub atoms: Vec<(BoundaryPoint, f64)>,
    /// Partial `g_s(y, y)` at the same truncation radius.
    pub normalization: f64,
}

impl AtomMeasure {
    pub fn raw_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Total mass after dividing by the normalization.
    pub fn total_mass(&self) -> f64 {
        self.raw_mass() / self.normalization
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.1 / self.normalization).collect()
    }
}

/// Endpoint of the geodesic ray from `x` through `p`; the null vector is
/// `p − e^{−d} x`. For `p = x` the ray is undefined and the forward endpoint
/// of the standard frame (∞) is used.
fn direction_from(x: &[f64], p: &[f64], dim: usize) -> Result<BoundaryPoint> {
    let d = raw_distance(x, p);
    if d < 1e-9 {
        return Ok(BoundaryPoint::Infinity);
    }
    let mut n = [0.0; N];
    let e = (-d).exp();
    for i in 0..=dim {
        n[i] = p[i] - e * x[i];
    }
    null_to_boundary(&n[..=dim], dim)
}

/// Atoms of `μ_{x,s}` over the orbit points `γy` with `d(x, γy) ≤ r`,
/// normalized by the partial `g_s(y, y)` over the same radius.
pub fn ps_atoms(spec: &GroupSpec, x: &HPoint, y: &HPoint, s: f64, r: f64) -> Result<AtomMeasure> {
    let entries = enumerate_orbit_from(spec, x, y, r)?;
    let dim = spec.dim;
    let mut atoms = Vec::with_capacity(entries.len());
    for e in &entries {
        let p = e.iso.apply_raw(y.coords());
        atoms.push((direction_from(x.coords(), &p[..=dim], dim)?, (-s * e.displacement).exp()));
    }
    let normalization = if x == y {
        atoms.iter().map(|a| a.1).sum()
    } else {
        enumerate_orbit_from(spec, y, y, r)?.iter().map(|e| (-s * e.displacement).exp()).sum()
    };
    Ok(AtomMeasure { atoms, normalization })
}

/// `‖η₊ − η₋‖^{−2δ}` in ball-model coordinates.
pub fn bm_density(eta_minus: &BoundaryPoint, eta_plus: &BoundaryPoint, dim: usize, delta: f64) -> Result<f64> {
    let a = boundary_to_ball(eta_minus, dim);
    let b = boundary_to_ball(eta_plus, dim);
    let dist: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    if dist < 1e-12 {
        return Err(GeoError::CoincidentEndpoints);
    }
    Ok(dist.powf(-2.0 * delta))
}
