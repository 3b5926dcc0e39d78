//! Transition maps between the hyperboloid, upper half space and ball models.

use num_complex::Complex64;

use super::{lorentz_inner, HPoint, N};
use crate::error::{GeoError, Result};

/// A point of the upper half space: `coords[..d-1]` horizontal, `coords[d-1]` height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UHPoint {
    dim: usize,
    coords: [f64; N - 1],
}

impl UHPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..N).contains(&dim) {
            return Err(GeoError::InvalidArgument(format!(
                "upper half space point of dimension {dim} not supported"
            )));
        }
        let height = coords[dim - 1];
        if !(height > 0.0) || coords.iter().any(|x| !x.is_finite()) {
            return Err(GeoError::ModelViolation(format!(
                "upper half space point needs positive finite height, got {height}"
            )));
        }
        let mut c = [0.0; N - 1];
        c[..dim].copy_from_slice(coords);
        Ok(Self { dim, coords: c })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(&[z.re, z.im])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn height(&self) -> f64 {
        self.coords[self.dim - 1]
    }

    /// The point as a complex number; only meaningful for d = 2.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.coords[0], self.coords[1])
    }
}

/// A point of ∂H^d in the upper half space chart.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPoint {
    Finite(Vec<f64>),
    Infinity,
}

impl BoundaryPoint {
    /// Boundary point of ℝ ∪ {∞} for d = 2 (`None` is ∞).
    pub fn from_real(x: Option<f64>) -> Self {
        match x {
            Some(x) => BoundaryPoint::Finite(vec![x]),
            None => BoundaryPoint::Infinity,
        }
    }

    /// Inverse of [`BoundaryPoint::from_real`]; panics on higher-dimensional points.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            BoundaryPoint::Finite(v) => {
                assert_eq!(v.len(), 1, "as_real called on a point of ∂H^{}", v.len() + 1);
                Some(v[0])
            }
            BoundaryPoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }
}

/// Upper half space → hyperboloid. `(0,…,0,1)` maps to `e₀`.
pub fn to_hyperboloid(p: &UHPoint) -> HPoint {
    let d = p.dim();
    let y = p.height();
    let x = &p.coords()[..d - 1];
    let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() + y * y;
    let mut c = [0.0; N];
    c[0] = (1.0 + r2) / (2.0 * y);
    for (i, xi) in x.iter().enumerate() {
        c[i + 1] = xi / y;
    }
    c[d] = (r2 - 1.0) / (2.0 * y);
    HPoint::from_array(d, c)
}

/// Hyperboloid → upper half space.
pub fn to_upper_half(p: &HPoint) -> Result<UHPoint> {
    let d = p.dim();
    let c = p.coords();
    // x0 - xd computed as (1 + |x'|^2)/(x0 + xd) to avoid cancellation deep in the cusp
    let horiz: f64 = c[1..d].iter().map(|v| v * v).sum();
    let sum = c[0] + c[d];
    if !(sum > 0.0) {
        return Err(GeoError::ModelViolation(format!(
            "point {:?} is not on the upper sheet",
            c
        )));
    }
    let den = (1.0 + horiz) / sum;
    let mut out = [0.0; N - 1];
    for i in 1..d {
        out[i - 1] = c[i] / den;
    }
    out[d - 1] = 1.0 / den;
    UHPoint::new(&out[..d])
}

/// Null vector representing a boundary point, scaled so that `x₀ − x_d = 1`
/// for finite points and `(1, 0, …, 0, 1)` for ∞.
pub fn boundary_to_null(b: &BoundaryPoint, dim: usize) -> [f64; N] {
    let mut v = [0.0; N];
    match b {
        BoundaryPoint::Infinity => {
            v[0] = 1.0;
            v[dim] = 1.0;
        }
        BoundaryPoint::Finite(x) => {
            debug_assert_eq!(x.len(), dim - 1);
            let r2: f64 = x.iter().map(|t| t * t).sum();
            v[0] = (1.0 + r2) / 2.0;
            for (i, xi) in x.iter().enumerate() {
                v[i + 1] = *xi;
            }
            v[dim] = (r2 - 1.0) / 2.0;
        }
    }
    v
}

/// Boundary point of a (nonzero) null direction.
pub fn null_to_boundary(v: &[f64], dim: usize) -> Result<BoundaryPoint> {
    let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
    let w: Vec<f64> = v[..=dim].iter().map(|x| x * sign).collect();
    let norm = w[0].abs();
    if !(norm > 0.0) {
        return Err(GeoError::ModelViolation("zero vector is not a boundary point".into()));
    }
    let q = lorentz_inner(&w, &w);
    if q.abs() > 1e-6 * norm * norm {
        return Err(GeoError::ModelViolation(format!(
            "vector {:?} is not null (q = {q:e})",
            w
        )));
    }
    let den = w[0] - w[dim];
    if den.abs() <= 1e-14 * norm {
        return Ok(BoundaryPoint::Infinity);
    }
    Ok(BoundaryPoint::Finite(w[1..dim].iter().map(|x| x / den).collect()))
}

/// Boundary point as a unit vector of the ball model's sphere.
pub fn boundary_to_ball(b: &BoundaryPoint, dim: usize) -> Vec<f64> {
    let v = boundary_to_null(b, dim);
    v[1..=dim].iter().map(|x| x / v[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_point_convention() {
        let p = UHPoint::new(&[0.0, 1.0]).unwrap();
        let h = to_hyperboloid(&p);
        assert_eq!(h.coords(), &[1.0, 0.0, 0.0]);
        let q = to_upper_half(&HPoint::origin(3)).unwrap();
        assert_eq!(q.coords(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn infinity_is_the_vertical_null_direction() {
        assert_eq!(boundary_to_null(&BoundaryPoint::Infinity, 2), [1.0, 0.0, 1.0, 0.0]);
        // limit of the normalized vertical geodesic (0, e^t) as t → ∞
        let t = 30.0;
        let h = to_hyperboloid(&UHPoint::new(&[0.0, f64::exp(t)]).unwrap());
        let c = h.coords();
        assert!((c[2] / c[0] - 1.0).abs() < 1e-12);
        assert_eq!(null_to_boundary(&[2.0, 0.0, 2.0], 2).unwrap(), BoundaryPoint::Infinity);
    }

    #[test]
    fn finite_boundary_round_trip() {
        let b = BoundaryPoint::Finite(vec![0.25, -3.0]);
        let v = boundary_to_null(&b, 3);
        assert!(lorentz_inner(&v, &v).abs() < 1e-12);
        assert_eq!(null_to_boundary(&v, 3).unwrap(), b);
    }

    #[test]
    fn rejects_nonpositive_height() {
        assert!(UHPoint::new(&[0.0, 0.0]).is_err());
        assert!(UHPoint::new(&[1.0, -2.0]).is_err());
    }
}
