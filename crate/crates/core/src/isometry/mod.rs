//! Points, frames and isometries of H^d.
//!
//! The universal currency is the Lorentz matrix: an element of SO⁺(1,d)
//! acting on the hyperboloid `q(x) = −x₀² + Σ xᵢ² = −1`, `x₀ > 0`. Frames are
//! identified with group elements, so the geodesic/frame flow is right
//! multiplication by `a_t`, the boost in the `(e₀, e_d)` plane. For d = 2 an
//! isometry may additionally carry its SL(2,ℝ) matrix, which is then
//! authoritative for trace-based classification.
//!
//! The upper-half-space chart is normalized so that `(0,…,0,1) ↔ e₀` and the
//! flow line of the identity frame is the vertical geodesic `t ↦ e^t·e_d`.

mod mat2;
mod models;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{GeoError, Result};

pub use mat2::Mat2;
pub use models::{
    boundary_to_ball, boundary_to_null, null_to_boundary, to_hyperboloid, to_upper_half,
    BoundaryPoint, UHPoint,
};

/// Largest supported dimension d of H^d.
pub const MAX_DIM: usize = 3;
pub(crate) const N: usize = MAX_DIM + 1;

/// Number of samples of `t ∈ [−1, 1]` in the grid approximation of the
/// unit-tangent-bundle metric (a lower bound for the true supremum).
pub const FRAME_GRID: usize = 33;

/// Products between two re-projections onto SO⁺(1,d) when evaluating words.
pub const RENORMALIZE_EVERY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Invariant checks (`MᵀJM = J`, `q(x) = −1`), relative to the entry scale.
    pub model: f64,
    /// Trace/eigenvalue classification.
    pub class: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { model: 1e-9, class: 1e-7 }
    }
}

/// The quadratic form `q(x) = −x₀² + Σ xᵢ²` on ℝ^{d+1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LorentzForm {
    dim: usize,
}

impl LorentzForm {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        lorentz_inner(&x[..=self.dim], &y[..=self.dim])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }
}

pub fn lorentz_inner(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    -x[0] * y[0] + x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum::<f64>()
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(GeoError::InvalidArgument(format!(
            "dimension {dim} outside supported range 2..={MAX_DIM}"
        )))
    }
}

/// A point of the hyperboloid model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    dim: usize,
    coords: [f64; N],
}

impl HPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        Self::with_tolerance(coords, Tolerances::default().model)
    }

    pub fn with_tolerance(coords: &[f64], tol: f64) -> Result<Self> {
        let dim = coords.len().saturating_sub(1);
        check_dim(dim)?;
        let mut c = [0.0; N];
        c[..=dim].copy_from_slice(coords);
        let p = Self { dim, coords: c };
        p.check(tol)?;
        Ok(p)
    }

    pub(crate) fn from_array(dim: usize, coords: [f64; N]) -> Self {
        Self { dim, coords }
    }

    /// `e₀ = (1, 0, …, 0)`, the fixed point of K.
    pub fn origin(dim: usize) -> Self {
        let mut c = [0.0; N];
        c[0] = 1.0;
        Self { dim, coords: c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..=self.dim]
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let c = self.coords();
        let q = lorentz_inner(c, c);
        let scale = c[0].abs().max(1.0).powi(2);
        if !(c[0] > 0.0) || !((q + 1.0).abs() <= tol * scale) {
            return Err(GeoError::ModelViolation(format!(
                "point {:?} off the hyperboloid (q = {q})",
                c
            )));
        }
        Ok(())
    }

    /// Rescale onto the hyperboloid (removes accumulated round-off).
    pub fn renormalized(&self) -> Self {
        let c = self.coords();
        let q = -lorentz_inner(c, c);
        let s = q.max(f64::MIN_POSITIVE).sqrt().recip();
        let mut out = self.coords;
        out.iter_mut().for_each(|x| *x *= s);
        Self { dim: self.dim, coords: out }
    }
}

/// Hyperbolic distance between raw hyperboloid coordinates, without checks.
pub fn raw_distance(p: &[f64], q: &[f64]) -> f64 {
    // d = 2 asinh(|p − q|_L / 2) for nearby points: the inner product of
    // far-out points cancels catastrophically, their difference does not
    let mut n2 = -(p[0] - q[0]).powi(2);
    for i in 1..p.len() {
        n2 += (p[i] - q[i]).powi(2);
    }
    if n2 < 4.0 {
        2.0 * (n2.max(0.0).sqrt() / 2.0).asinh()
    } else {
        (-lorentz_inner(p, q)).max(1.0).acosh()
    }
}

/// `arccosh(−⟨p, q⟩)`, clamping round-off below 1.
pub fn distance(p: &HPoint, q: &HPoint) -> Result<f64> {
    if p.dim != q.dim {
        return Err(GeoError::InvalidArgument("points of different dimension".into()));
    }
    let x = -lorentz_inner(p.coords(), q.coords());
    let slack = Tolerances::default().model * (p.coords[0] * q.coords[0]).max(1.0);
    if x < 1.0 - slack {
        return Err(GeoError::ModelViolation(format!(
            "−⟨p,q⟩ = {x} is below 1 beyond tolerance"
        )));
    }
    Ok(raw_distance(p.coords(), q.coords()))
}

/// Isometry type, by fixed points.
#[derive(Debug, Clone, PartialEq)]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic {
        fixed_point: BoundaryPoint,
    },
    /// `axis` is ordered (repelling, attracting).
    Loxodromic {
        translation_length: f64,
        axis: (BoundaryPoint, BoundaryPoint),
    },
}

impl IsometryClass {
    pub fn name(&self) -> &'static str {
        match self {
            IsometryClass::Identity => "identity",
            IsometryClass::Elliptic => "elliptic",
            IsometryClass::Parabolic { .. } => "parabolic",
            IsometryClass::Loxodromic { .. } => "loxodromic",
        }
    }

    pub fn is_loxodromic(&self) -> bool {
        matches!(self, IsometryClass::Loxodromic { .. })
    }
}

/// An element of SO⁺(1,d), optionally with its SL(2,ℝ) lift when d = 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    dim: usize,
    m: [[f64; N]; N],
    exact: Option<Mat2>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate().take(dim + 1) {
            row[i] = 1.0;
        }
        let exact = (dim == 2).then_some(Mat2::IDENTITY);
        Self { dim, m, exact }
    }

    /// Row-major `(d+1)×(d+1)` entries; validated against the model tolerance.
    pub fn from_matrix(dim: usize, entries: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        let n = dim + 1;
        if entries.len() != n * n {
            return Err(GeoError::InvalidArgument(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let mut m = [[0.0; N]; N];
        for i in 0..n {
            m[i][..n].copy_from_slice(&entries[i * n..(i + 1) * n]);
        }
        let iso = Self { dim, m, exact: None };
        iso.check(Tolerances::default().model)?;
        Ok(iso)
    }

    /// The image of an SL(2,ℝ) matrix in SO⁺(1,2), keeping the 2×2 form.
    pub fn from_sl2(g: Mat2) -> Result<Self> {
        let det = g.det();
        let scale = g.a.abs().max(g.b.abs()).max(g.c.abs()).max(g.d.abs()).max(1.0);
        if (det - 1.0).abs() > Tolerances::default().model * scale * scale {
            return Err(GeoError::ModelViolation(format!("det = {det} ≠ 1")));
        }
        Ok(Self::from_sl2_unchecked(g))
    }

    pub(crate) fn from_sl2_unchecked(g: Mat2) -> Self {
        // the action P ↦ g P gᵀ on P = x₀ I + x₁ σ_x + x₂ σ_z
        let basis = [
            Mat2::IDENTITY,
            Mat2::new(0.0, 1.0, 1.0, 0.0),
            Mat2::new(1.0, 0.0, 0.0, -1.0),
        ];
        let gt = Mat2::new(g.a, g.c, g.b, g.d);
        let mut m = [[0.0; N]; N];
        for (j, e) in basis.iter().enumerate() {
            let p = g * *e * gt;
            m[0][j] = (p.a + p.d) / 2.0;
            m[1][j] = (p.b + p.c) / 2.0;
            m[2][j] = (p.a - p.d) / 2.0;
        }
        Self { dim: 2, m, exact: Some(g) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn column(&self, j: usize) -> [f64; N] {
        let mut c = [0.0; N];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim + 1) {
            *ci = self.m[i][j];
        }
        c
    }

    /// Row-major entries.
    pub fn to_vec(&self) -> Vec<f64> {
        let n = self.dim + 1;
        (0..n).flat_map(|i| self.m[i][..n].to_vec()).collect()
    }

    pub fn exact_2x2(&self) -> Option<&Mat2> {
        self.exact.as_ref()
    }

    /// Drop the 2×2 form (e.g. after operations that do not preserve it).
    pub fn without_exact(mut self) -> Self {
        self.exact = None;
        self
    }

    fn norm_inf(&self) -> f64 {
        let n = self.dim + 1;
        (0..n)
            .map(|i| self.m[i][..n].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Invariant check: `MᵀJM = J` (relative to `‖M‖²`), `det > 0`, `(Me₀)₀ > 0`,
    /// and agreement with the 2×2 form when present.
    pub fn check(&self, tol: f64) -> Result<()> {
        let n = self.dim + 1;
        let scale = self.norm_inf().max(1.0).powi(2);
        let g = self.gram_defect();
        if g > tol * scale {
            return Err(GeoError::ModelViolation(format!(
                "‖MᵀJM − J‖ = {g:e} exceeds tolerance"
            )));
        }
        if !(self.m[0][0] > 0.0) {
            return Err(GeoError::ModelViolation("isometry swaps the sheets".into()));
        }
        let det = self.to_dmatrix().determinant();
        if !(det > 0.0) {
            return Err(GeoError::ModelViolation(format!("det = {det} is not positive")));
        }
        if let Some(g2) = self.exact {
            let other = Self::from_sl2_unchecked(g2);
            for i in 0..n {
                for j in 0..n {
                    if (other.m[i][j] - self.m[i][j]).abs() > tol * scale {
                        return Err(GeoError::ModelViolation(
                            "2×2 form disagrees with the Lorentz matrix".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `‖MᵀJM − J‖∞` (entrywise max).
    pub fn gram_defect(&self) -> f64 {
        let n = self.dim + 1;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = -self.m[0][i] * self.m[0][j];
                for k in 1..n {
                    s += self.m[k][i] * self.m[k][j];
                }
                let target = if i == j { if i == 0 { -1.0 } else { 1.0 } } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub(crate) fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.dim + 1;
        DMatrix::from_fn(n, n, |i, j| self.m[i][j])
    }

    pub fn compose(&self, rhs: &Isometry) -> Isometry {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim + 1;
        let mut m = [[0.0; N]; N];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.m[i][k] * rhs.m[k][j];
                }
                m[i][j] = s;
            }
        }
        let exact = match (self.exact, rhs.exact) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Isometry { dim: self.dim, m, exact }
    }

    /// `M⁻¹ = J Mᵀ J`.
    pub fn inverse(&self) -> Isometry {
        let n = self.dim + 1;
        let mut m = [[0.0; N]; N];
        for i in 0..n {
            for j in 0..n {
                let s = if (i == 0) != (j == 0) { -1.0 } else { 1.0 };
                m[i][j] = s * self.m[j][i];
            }
        }
        Isometry { dim: self.dim, m, exact: self.exact.map(|g| g.inverse()) }
    }

    /// Re-project onto SO⁺(1,d) (polar-type Newton step on the Lorentz–Gram
    /// matrix); the 2×2 form is rescaled to unit determinant instead.
    pub fn renormalized(&self) -> Isometry {
        if let Some(g) = self.exact {
            return Self::from_sl2_unchecked(g.normalized());
        }
        let mut cur = *self;
        for _ in 0..2 {
            let g = cur.inverse().compose(&cur);
            let n = self.dim + 1;
            let mut corr = Isometry { dim: self.dim, m: [[0.0; N]; N], exact: None };
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j { 3.0 } else { 0.0 };
                    corr.m[i][j] = (id - g.m[i][j]) / 2.0;
                }
            }
            cur = cur.compose(&corr);
        }
        cur
    }

    /// The geodesic flow element `a_t = exp(t(E₀d + E_d0))`.
    pub fn flow_element(dim: usize, t: f64) -> Isometry {
        let mut a = Self::identity(dim);
        let (s, c) = (t.sinh(), t.cosh());
        a.m[0][0] = c;
        a.m[0][dim] = s;
        a.m[dim][0] = s;
        a.m[dim][dim] = c;
        if dim == 2 {
            let h = (t / 2.0).exp();
            a.exact = Some(Mat2::new(h, 0.0, 0.0, 1.0 / h));
        }
        a
    }

    /// Rotation in K by `theta` in the plane of coordinates `i`, `j` (1-based,
    /// `1 ≤ i, j ≤ d`), sending `e_i` towards `e_j`.
    pub fn rotation(dim: usize, i: usize, j: usize, theta: f64) -> Isometry {
        assert!(i >= 1 && j >= 1 && i <= dim && j <= dim && i != j);
        let mut r = Self::identity(dim);
        let (s, c) = theta.sin_cos();
        r.m[i][i] = c;
        r.m[j][j] = c;
        r.m[j][i] = s;
        r.m[i][j] = -s;
        r.exact = if dim == 2 {
            let (s2, c2) = (theta / 2.0).sin_cos();
            let k = Mat2::new(c2, s2, -s2, c2);
            Some(if i == 1 { k } else { k.inverse() })
        } else {
            None
        };
        r
    }

    fn unipotent(dim: usize, u: &[f64], sign: f64) -> Isometry {
        assert_eq!(u.len(), dim - 1);
        let n = dim + 1;
        let mut x = [[0.0; N]; N];
        for (k, uk) in u.iter().enumerate() {
            let k = k + 1;
            x[0][k] = *uk;
            x[k][0] = *uk;
            x[k][dim] = sign * uk;
            x[dim][k] = -sign * uk;
        }
        // X is nilpotent of order 3: exp(X) = I + X + X²/2
        let mut m = [[0.0; N]; N];
        for i in 0..n {
            for j in 0..n {
                let mut x2 = 0.0;
                for k in 0..n {
                    x2 += x[i][k] * x[k][j];
                }
                m[i][j] = if i == j { 1.0 } else { 0.0 } + x[i][j] + x2 / 2.0;
            }
        }
        Isometry { dim, m, exact: None }
    }

    /// `exp` of the 𝔫⁻ generator with parameter `u ∈ ℝ^{d−1}`.
    pub fn horocyclic_minus(dim: usize, u: &[f64]) -> Isometry {
        Self::unipotent(dim, u, -1.0)
    }

    /// `exp` of the 𝔫⁺ generator with parameter `u ∈ ℝ^{d−1}`.
    pub fn horocyclic_plus(dim: usize, u: &[f64]) -> Isometry {
        Self::unipotent(dim, u, 1.0)
    }

    pub fn apply_raw(&self, v: &[f64]) -> [f64; N] {
        let n = self.dim + 1;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    /// Matrix–vector action on the hyperboloid.
    pub fn apply(&self, p: &HPoint) -> Result<HPoint> {
        if p.dim != self.dim {
            return Err(GeoError::InvalidArgument("dimension mismatch".into()));
        }
        let out = HPoint::from_array(self.dim, self.apply_raw(p.coords()));
        out.check(Tolerances::default().model)?;
        Ok(out)
    }

    pub fn classify(&self, tol: &Tolerances) -> Result<IsometryClass> {
        match self.exact {
            Some(g) => classify_sl2(&g, tol),
            None => classify_lorentz(self, tol),
        }
    }

    pub fn translation_length(&self, tol: &Tolerances) -> Result<f64> {
        match self.classify(tol)? {
            IsometryClass::Loxodromic { translation_length, .. } => Ok(translation_length),
            other => Err(GeoError::NotLoxodromic(other.name().into())),
        }
    }
}

impl std::ops::Mul for Isometry {
    type Output = Isometry;

    fn mul(self, rhs: Isometry) -> Isometry {
        self.compose(&rhs)
    }
}

fn classify_sl2(g: &Mat2, tol: &Tolerances) -> Result<IsometryClass> {
    let tr = g.trace().abs();
    let scale = g.a.abs().max(g.b.abs()).max(g.c.abs()).max(g.d.abs()).max(1.0);
    if tr > 2.0 + tol.class {
        let length = 2.0 * (tr / 2.0).acosh();
        let (rep, att) = g.hyperbolic_fixed_points();
        return Ok(IsometryClass::Loxodromic {
            translation_length: length,
            axis: (BoundaryPoint::from_real(rep), BoundaryPoint::from_real(att)),
        });
    }
    if tr < 2.0 - tol.class {
        return Ok(IsometryClass::Elliptic);
    }
    let off = g.b.abs().max(g.c.abs()).max((g.a - g.d).abs());
    if off <= tol.model * scale {
        return Ok(IsometryClass::Identity);
    }
    if off <= tol.class.sqrt() * scale {
        return Err(GeoError::NearDegenerate(format!(
            "trace ±2 and within {off:e} of the identity"
        )));
    }
    let fixed = if g.c.abs() <= tol.model * scale {
        BoundaryPoint::Infinity
    } else {
        BoundaryPoint::Finite(vec![(g.a - g.d) / (2.0 * g.c)])
    };
    Ok(IsometryClass::Parabolic { fixed_point: fixed })
}

/// cosh of the translation length read off the spectrum (≤ 1 when the
/// isometry is not loxodromic; then the value is cos of a rotation angle),
/// with a bound on its rounding error.
fn cosh_length(iso: &Isometry) -> (f64, f64) {
    let m = iso.to_dmatrix();
    let n = (iso.dim + 1) as f64;
    let scale = iso.norm_inf().max(1.0);
    let tr = m.trace();
    match iso.dim {
        2 => ((tr - 1.0) / 2.0, n * f64::EPSILON * scale),
        _ => {
            // eigenvalues e^{±ℓ}, e^{±iθ}: with a = cosh ℓ, b = cos θ
            // tr M = 2a + 2b and tr M² = 4a² + 4b² − 4
            let tr2 = (&m * &m).trace();
            let p = tr / 2.0;
            let q = (tr2 + 4.0) / 4.0;
            let disc = (q / 2.0 - p * p / 4.0).max(0.0).sqrt();
            // disc² carries the rounding error of M and of tr M², and the
            // square root amplifies it to order √ε·scale (a unipotent Jordan
            // block sits at disc = 0); n² covers the observed constant
            (p / 2.0 + disc, n * n * f64::EPSILON.sqrt() * scale)
        }
    }
}

fn null_eigenvector(iso: &Isometry, lambda: f64) -> Result<BoundaryPoint> {
    let n = iso.dim + 1;
    let m = iso.to_dmatrix() - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    null_to_boundary(&v, iso.dim)
}

fn classify_lorentz(iso: &Isometry, tol: &Tolerances) -> Result<IsometryClass> {
    let n = iso.dim + 1;
    // within the rounding bound the spectrum is treated as unit modulus, the
    // analogue of |tr| = 2 within τ_class for the 2×2 form
    let (a, noise) = cosh_length(iso);
    if a - 1.0 > tol.class + noise {
        let length = a.acosh();
        let lambda = length.exp();
        let att = null_eigenvector(iso, lambda)?;
        let rep = null_eigenvector(iso, 1.0 / lambda)?;
        return Ok(IsometryClass::Loxodromic { translation_length: length, axis: (rep, att) });
    }
    let scale = iso.norm_inf().max(1.0);
    let m = iso.to_dmatrix() - DMatrix::<f64>::identity(n, n);
    if m.abs().max() <= tol.model * scale {
        return Ok(IsometryClass::Identity);
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let thr = tol.class.sqrt() * scale;
    let null_rows: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= thr).collect();
    if null_rows.is_empty() {
        return Err(GeoError::NearDegenerate(
            "no fixed direction found for a non-loxodromic isometry".into(),
        ));
    }
    let k = null_rows.len();
    let basis = DMatrix::from_fn(n, k, |i, j| v_t[(null_rows[j], i)]);
    let mut jmat = DMatrix::<f64>::identity(n, n);
    jmat[(0, 0)] = -1.0;
    let gram = basis.transpose() * &jmat * &basis;
    let eig = gram.symmetric_eigen();
    let (imin, min) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("nonempty");
    if min < -thr {
        return Ok(IsometryClass::Elliptic);
    }
    let (izero, zero) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, v)| (i, *v))
        .expect("nonempty");
    let _ = imin;
    if zero.abs() > thr {
        return Err(GeoError::NearDegenerate(
            "fixed subspace is neither timelike nor null within tolerance".into(),
        ));
    }
    let w = eig.eigenvectors.column(izero);
    let v: Vec<f64> = (&basis * w).iter().copied().collect();
    Ok(IsometryClass::Parabolic { fixed_point: null_to_boundary(&v, iso.dim)? })
}

/// An orthonormal frame, identified with the isometry carrying the standard
/// frame at `e₀` to it. The flow direction is the image of `e_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub g: Isometry,
}

impl Frame {
    pub fn new(g: Isometry) -> Self {
        Self { g }
    }

    pub fn identity(dim: usize) -> Self {
        Self { g: Isometry::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.g.dim
    }

    pub fn base_point(&self) -> HPoint {
        HPoint::from_array(self.g.dim, self.g.column(0))
    }

    /// Endpoint of the geodesic ray in the flow direction.
    pub fn forward_endpoint(&self) -> Result<BoundaryPoint> {
        let d = self.g.dim;
        let (c0, cd) = (self.g.column(0), self.g.column(d));
        let v: Vec<f64> = (0..=d).map(|i| c0[i] + cd[i]).collect();
        null_to_boundary(&v, d)
    }

    pub fn backward_endpoint(&self) -> Result<BoundaryPoint> {
        let d = self.g.dim;
        let (c0, cd) = (self.g.column(0), self.g.column(d));
        let v: Vec<f64> = (0..=d).map(|i| c0[i] - cd[i]).collect();
        null_to_boundary(&v, d)
    }

    /// `f · a_t`.
    pub fn flow(&self, t: f64) -> Frame {
        Frame { g: self.g.compose(&Isometry::flow_element(self.g.dim, t)) }
    }

    /// `h · f`.
    pub fn translate(&self, h: &Isometry) -> Frame {
        Frame { g: h.compose(&self.g) }
    }
}

pub fn flow(f: &Frame, t: f64) -> Frame {
    f.flow(t)
}

fn grid_times() -> [f64; FRAME_GRID] {
    let mut t = [0.0; FRAME_GRID];
    for (k, tk) in t.iter_mut().enumerate() {
        *tk = -1.0 + 2.0 * k as f64 / (FRAME_GRID - 1) as f64;
    }
    t
}

/// Grid approximation of `sup_{|t|≤1} d(π(g₁ k aₜ), π(g₂ k aₜ))` where `k`
/// turns the flow direction onto frame vector `axis` (1-based; `axis = d` is
/// the flow direction itself).
fn vector_distance(g1: &Isometry, g2: &Isometry, axis: usize) -> f64 {
    let d = g1.dim;
    let (p0, pi) = (g1.column(0), g1.column(axis));
    let (q0, qi) = (g2.column(0), g2.column(axis));
    let mut worst: f64 = 0.0;
    for t in grid_times() {
        let (s, c) = (t.sinh(), t.cosh());
        let mut p = [0.0; N];
        let mut q = [0.0; N];
        for k in 0..=d {
            p[k] = c * p0[k] + s * pi[k];
            q[k] = c * q0[k] + s * qi[k];
        }
        worst = worst.max(raw_distance(&p[..=d], &q[..=d]));
    }
    worst
}

/// Distance on the unit tangent bundle (only the flow direction matters).
pub fn unit_tangent_distance(f1: &Frame, f2: &Frame) -> f64 {
    vector_distance(&f1.g, &f2.g, f1.g.dim)
}

/// Left-invariant frame-bundle distance: the sum over the d frame vectors of
/// the unit-tangent distances, each supremum sampled on a 33-point grid.
pub fn frame_distance(f1: &Frame, f2: &Frame) -> f64 {
    (1..=f1.g.dim).map(|i| vector_distance(&f1.g, &f2.g, i)).sum()
}

/// A random isometry `k₁ a_t k₂` with `t ∈ [0, spread]`.
pub fn random_isometry<R: Rng + ?Sized>(dim: usize, rng: &mut R, spread: f64) -> Isometry {
    let mut g = Isometry::identity(dim);
    let rotate = |g: Isometry, rng: &mut R| {
        let mut g = g;
        for i in 1..=dim {
            for j in (i + 1)..=dim {
                let th = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                g = g.compose(&Isometry::rotation(dim, i, j, th));
            }
        }
        g
    };
    g = rotate(g, rng);
    g = g.compose(&Isometry::flow_element(dim, rng.gen_range(0.0..=spread)));
    rotate(g, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_fixes_origin() {
        for d in 2..=3 {
            let p = Isometry::identity(d).apply(&HPoint::origin(d)).unwrap();
            assert_eq!(p, HPoint::origin(d));
        }
    }

    #[test]
    fn flow_element_moves_origin_along_last_axis() {
        let p = Isometry::flow_element(3, 1.0).apply(&HPoint::origin(3)).unwrap();
        assert!(close(p.coords()[0], 1f64.cosh(), 1e-15));
        assert!(close(p.coords()[3], 1f64.sinh(), 1e-15));
        assert_eq!(&p.coords()[1..3], &[0.0, 0.0]);
    }

    #[test]
    fn distance_along_flow_matches_arclength() {
        let t = 2.5;
        let p = Isometry::flow_element(2, t).apply(&HPoint::origin(2)).unwrap();
        assert!(close(distance(&HPoint::origin(2), &p).unwrap(), t, 1e-13));
        // integrate ds = |dy|/y along the vertical segment from i to e^t i
        let steps = 20_000;
        let mut length = 0.0;
        let mut prev = to_upper_half(&HPoint::origin(2)).unwrap().to_complex();
        for k in 1..=steps {
            let s = t * k as f64 / steps as f64;
            let q = to_upper_half(&Isometry::flow_element(2, s).apply(&HPoint::origin(2)).unwrap())
                .unwrap()
                .to_complex();
            let mid = (q.im + prev.im) / 2.0;
            length += (q - prev).norm() / mid;
            prev = q;
        }
        assert!(close(length, t, 1e-7));
    }

    #[test]
    fn sl2_image_is_lorentz_and_matches_mobius() {
        let g = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let iso = Isometry::from_sl2(g).unwrap();
        iso.check(1e-12).unwrap();
        let z = num_complex::Complex64::new(0.3, 1.7);
        let p = to_hyperboloid(&UHPoint::from_complex(z).unwrap());
        let img = to_upper_half(&iso.apply(&p).unwrap()).unwrap().to_complex();
        assert!((img - g.apply(z)).norm() < 1e-12);
    }

    #[test]
    fn rotation_exact_form_agrees() {
        for th in [0.3, -1.1, 2.9] {
            Isometry::rotation(2, 1, 2, th).check(1e-12).unwrap();
            Isometry::rotation(2, 2, 1, th).check(1e-12).unwrap();
        }
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerances::default();
        let t = Isometry::from_sl2(Mat2::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!(
            t.classify(&tol).unwrap(),
            IsometryClass::Parabolic { fixed_point: BoundaryPoint::Infinity }
        );
        let h = Isometry::from_sl2(Mat2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
        let len = h.translation_length(&tol).unwrap();
        assert!(close(len, 2.0 * 1.5f64.acosh(), 1e-12));
        assert!(close(len, 1.924847300238413, 1e-9));
        // same value from the spectrum of the SO⁺(1,2) image
        let lorentz = h.without_exact();
        let eig = lorentz.to_dmatrix().complex_eigenvalues();
        let top = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(close(top.ln(), len, 1e-9));
        assert!(close(lorentz.translation_length(&tol).unwrap(), len, 1e-9));
        // rotation by π/3 about i
        let r = Isometry::rotation(2, 1, 2, std::f64::consts::FRAC_PI_3);
        assert_eq!(r.classify(&tol).unwrap(), IsometryClass::Elliptic);
        assert_eq!(r.without_exact().classify(&tol).unwrap(), IsometryClass::Elliptic);
        assert_eq!(Isometry::identity(3).classify(&tol).unwrap(), IsometryClass::Identity);
    }

    #[test]
    fn classify_lorentz_parabolic_in_dim3() {
        let tol = Tolerances::default();
        let n = Isometry::horocyclic_plus(3, &[0.7, -0.2]);
        n.check(1e-12).unwrap();
        match n.classify(&tol).unwrap() {
            IsometryClass::Parabolic { .. } => {}
            other => panic!("expected parabolic, got {other:?}"),
        }
        let a = Isometry::flow_element(3, 3.0);
        assert!(close(a.translation_length(&tol).unwrap(), 3.0, 1e-9));
        match a.classify(&tol).unwrap() {
            IsometryClass::Loxodromic { axis, .. } => {
                assert_eq!(axis.1, BoundaryPoint::Infinity);
                match axis.0 {
                    BoundaryPoint::Finite(x) => assert!(x.iter().all(|v| v.abs() < 1e-12)),
                    other => panic!("unexpected repelling point {other:?}"),
                }
            }
            other => panic!("expected loxodromic, got {other:?}"),
        }
    }

    #[test]
    fn conjugated_parabolic_in_dim3_is_not_loxodromic() {
        // trace-based cosh ℓ of a conjugated Jordan block is off by ~√ε·‖M‖
        let tol = Tolerances::default();
        let h = random_isometry(3, &mut ChaCha8Rng::seed_from_u64(17439899226818113668), 2.0);
        let n = Isometry::horocyclic_plus(3, &[2.6062958780968075; 2]);
        let c = h.compose(&n).compose(&h.inverse());
        assert_eq!(c.classify(&tol).unwrap().name(), "parabolic");
    }

    #[test]
    fn translation_length_rejects_non_loxodromic() {
        let tol = Tolerances::default();
        let r = Isometry::rotation(3, 1, 2, 0.4);
        assert!(matches!(r.translation_length(&tol), Err(GeoError::NotLoxodromic(_))));
    }

    #[test]
    fn horocyclic_generators_are_isometries() {
        for d in 2..=3 {
            let u: Vec<f64> = (0..d - 1).map(|k| 0.3 + k as f64).collect();
            Isometry::horocyclic_plus(d, &u).check(1e-12).unwrap();
            Isometry::horocyclic_minus(d, &u).check(1e-12).unwrap();
        }
    }

    #[test]
    fn renormalization_restores_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = Isometry::identity(3);
        for _ in 0..200 {
            g = g.compose(&random_isometry(3, &mut rng, 0.1));
        }
        let mut perturbed = g;
        perturbed.m[1][2] += 1e-6 * g.norm_inf();
        assert!(perturbed.check(1e-9).is_err());
        perturbed.renormalized().check(1e-9).unwrap();
    }

    #[test]
    fn frame_distance_zero_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Frame::new(random_isometry(2, &mut rng, 3.0));
        assert!(frame_distance(&f, &f) < 1e-7);
        let g = f.flow(0.5);
        assert!(close(unit_tangent_distance(&f, &g), 0.5, 1e-7));
    }

    #[test]
    fn frame_endpoints() {
        let f = Frame::identity(2);
        assert_eq!(f.forward_endpoint().unwrap(), BoundaryPoint::Infinity);
        assert_eq!(f.backward_endpoint().unwrap(), BoundaryPoint::Finite(vec![0.0]));
    }
}
