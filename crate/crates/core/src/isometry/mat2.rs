use std::ops::Mul;

use num_complex::Complex64;

/// A 2×2 real matrix acting on the upper half plane by Möbius transformations.
///
/// Entries are stored as `f64`; integer matrices (the modular group, Hecke
/// groups with integral λ) stay exact as long as entries remain below 2^53.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Inverse assuming unit determinant (adjugate).
    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    /// Rescale to determinant one. Panics never; a non-positive determinant
    /// is returned unchanged and rejected later by `Isometry::from_sl2`.
    pub fn normalized(&self) -> Self {
        let det = self.det();
        if det <= 0.0 {
            return *self;
        }
        let s = det.sqrt().recip();
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn is_integral(&self) -> bool {
        [self.a, self.b, self.c, self.d]
            .iter()
            .all(|x| x.fract() == 0.0 && x.abs() < 9.0e15)
    }

    /// Möbius action on a point of the upper half plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Möbius action on the boundary ℝ ∪ {∞}; `None` encodes ∞.
    pub fn apply_boundary(&self, x: Option<f64>) -> Option<f64> {
        match x {
            None => {
                if self.c == 0.0 {
                    None
                } else {
                    Some(self.a / self.c)
                }
            }
            Some(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    None
                } else {
                    Some((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// Key identifying the matrix in PSL(2,ℤ): integer entries with the sign
    /// fixed so that the first nonzero entry is positive.
    pub fn psl_int_key(&self) -> [i64; 4] {
        let e = [self.a, self.b, self.c, self.d].map(|x| x.round() as i64);
        let first = e.iter().copied().find(|&x| x != 0).unwrap_or(1);
        if first < 0 {
            e.map(|x| -x)
        } else {
            e
        }
    }

    /// Quantized PSL(2,ℝ) key at the given resolution (collisions possible
    /// for entries closer than the resolution).
    pub fn psl_quantized_key(&self, resolution: f64) -> [i64; 4] {
        let e = [self.a, self.b, self.c, self.d];
        let first = e
            .iter()
            .copied()
            .find(|x| x.abs() > resolution)
            .unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        e.map(|x| (sign * x / resolution).round() as i64)
    }

    /// Fixed points of the Möbius map, as boundary coordinates (`None` = ∞).
    /// For a hyperbolic matrix returns `(repelling, attracting)`.
    pub fn hyperbolic_fixed_points(&self) -> (Option<f64>, Option<f64>) {
        let Mat2 { a, b, c, d } = *self;
        let tr = a + d;
        let disc = (tr * tr - 4.0).max(0.0).sqrt();
        if c == 0.0 {
            // z ↦ (a z + b)/d: fixed points ∞ and b/(d − a)
            let finite = if d != a { Some(b / (d - a)) } else { None };
            return if a.abs() > d.abs() {
                (finite, None)
            } else {
                (None, finite)
            };
        }
        let z1 = ((a - d) + disc) / (2.0 * c);
        let z2 = ((a - d) - disc) / (2.0 * c);
        // derivative at a fixed point z is 1/(cz + d)^2: attracting iff |cz + d| > 1
        if (c * z1 + d).abs() > (c * z2 + d).abs() {
            (Some(z2), Some(z1))
        } else {
            (Some(z1), Some(z2))
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}
