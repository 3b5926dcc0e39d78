//! Bowen balls and `(n, ε)`-separated sets, on `G` and on the quotient.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{reduce_complex, require_d2};
use crate::error::Result;
use crate::group::{enumerate_orbit, GroupSpec, Reduction};
use crate::isometry::{frame_distance, raw_distance, to_upper_half, Frame, Isometry, Mat2};

/// Whether `d(f₁ a_n, f₂ a_n) < ρ` for every integer `n ∈ [−N, N]`.
pub fn bowen_ball_test(f1: &Frame, f2: &Frame, n: usize, rho: f64) -> bool {
    let n = n as i64;
    (-n..=n).all(|k| frame_distance(&f1.flow(k as f64), &f2.flow(k as f64)) < rho)
}

/// Forward variant: `d(f₁ a_k, f₂ a_k) < ρ` for `k = 0, …, n − 1`.
pub fn bowen_ball_test_forward(f1: &Frame, f2: &Frame, n: usize, rho: f64) -> bool {
    (0..n).all(|k| frame_distance(&f1.flow(k as f64), &f2.flow(k as f64)) < rho)
}

/// `frame_distance ≥ d · d(base points)`: every frame-vector term samples the
/// base points at time 0.
fn base_lower_bound(f1: &Frame, f2: &Frame) -> f64 {
    let (p, q) = (f1.base_point(), f2.base_point());
    f1.dim() as f64 * raw_distance(p.coords(), q.coords())
}

/// Size of a greedy maximal `(n, ε)`-separated subset of `points` (in input
/// order) for `d_n(x, y) = max_{0≤i<n} d(x a_i, y a_i)` on `G`.
pub fn separated_count(points: &[Frame], n: usize, eps: f64) -> usize {
    let n = n.max(1);
    let traj: Vec<Vec<Frame>> = points.iter().map(|p| (0..n).map(|i| p.flow(i as f64)).collect()).collect();
    let separated = |a: &[Frame], b: &[Frame]| {
        a.iter().zip(b).any(|(x, y)| base_lower_bound(x, y) > eps)
            || a.iter().zip(b).any(|(x, y)| frame_distance(x, y) > eps)
    };
    let mut kept: Vec<usize> = Vec::new();
    for (i, t) in traj.iter().enumerate() {
        if kept.par_iter().all(|&j| separated(t, &traj[j])) {
            kept.push(i);
        }
    }
    kept.len()
}

/// A frame moved into the fundamental domain, with its base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedFrame {
    pub frame: Frame,
    pub z: Complex64,
    /// `d(i, z)`.
    pub dist_to_i: f64,
}

/// Frame distance on `Γ\G` for d = 2 presets:
/// `d_Γ(f₁, f₂) = min_γ d(f₁, γ f₂)` over reduced frames.
///
/// Candidates `γ` are found from the base points `z₁, z₂`. For `γ ∉ Stab(∞)`
/// the height of `γ z₂` is at most `1/y₂` (the lower-left entry of such an
/// element has modulus at least 1 in the preset lattices), so these `γ` can
/// only matter when `y₁ y₂ ≤ e^{ε/d}`, and then `d(i, γi) ≤ d(i, z₁) + d(i, z₂)
/// + ε/d`; they are read from a precomputed orbit ball. Otherwise only the
/// cusp translations next to `Re z₁ − Re z₂` can qualify. When the needed
/// radius exceeds the precomputed ball the search is truncated (so the
/// distance can only be overestimated) and the event is counted.
pub struct QuotientMetric {
    spec: GroupSpec,
    ball: Vec<(Mat2, f64)>,
    radius: f64,
    width: Option<f64>,
    truncated: AtomicUsize,
}

impl QuotientMetric {
    pub fn new(spec: &GroupSpec, radius: f64) -> Result<Self> {
        require_d2(spec)?;
        let ball = enumerate_orbit(spec, &spec.base_point(), radius)?
            .entries
            .into_iter()
            .map(|e| (*e.iso.exact_2x2().expect("d = 2 preset"), e.displacement))
            .collect();
        let width = match (spec.reduction, spec.cusps.first()) {
            (Reduction::TranslateInvert { width }, Some(c)) if c.xi.is_infinity() => Some(width),
            _ => None,
        };
        Ok(Self { spec: spec.clone(), ball, radius, width, truncated: AtomicUsize::new(0) })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    /// Number of searches that needed more than the precomputed radius.
    pub fn truncated(&self) -> usize {
        self.truncated.load(Ordering::Relaxed)
    }

    pub fn reduce(&self, f: &Frame) -> Result<ReducedFrame> {
        let z = to_upper_half(&f.base_point())?.to_complex();
        let (zr, w) = reduce_complex(&self.spec, z)?;
        Ok(self.reduced_with(f, zr, w))
    }

    fn reduced_with(&self, f: &Frame, zr: Complex64, w: Mat2) -> ReducedFrame {
        let frame = f.translate(&Isometry::from_sl2_unchecked(w));
        let dist_to_i = ((zr.norm_sqr() + 1.0) / (2.0 * zr.im)).max(1.0).acosh();
        ReducedFrame { frame, z: zr, dist_to_i }
    }

    /// Reduced frames `f a_i`, `i = 0, …, n − 1`, reduced incrementally.
    pub fn reduced_trajectory(&self, f: &Frame, n: usize) -> Result<Vec<ReducedFrame>> {
        let mut w = Mat2::IDENTITY;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let g = f.flow(i as f64);
            let z = to_upper_half(&g.base_point())?.to_complex();
            let (zr, step) = reduce_complex(&self.spec, w.apply(z))?;
            w = step * w;
            out.push(self.reduced_with(&g, zr, w));
        }
        Ok(out)
    }

    /// `min(d_Γ(a, b), cutoff)`.
    pub fn distance(&self, a: &ReducedFrame, b: &ReducedFrame, cutoff: f64) -> f64 {
        let dim = 2.0;
        let mut best = cutoff;
        let mut consider = |g: &Mat2| {
            let w = g.apply(b.z);
            let base = 2.0 * ((a.z - w).norm_sqr() / (4.0 * a.z.im * w.im)).sqrt().asinh();
            if dim * base < best {
                let fd = frame_distance(&a.frame, &b.frame.translate(&Isometry::from_sl2_unchecked(*g)));
                best = best.min(fd);
            }
        };
        if let Some(width) = self.width {
            let k = ((a.z.re - b.z.re) / width).round() as i64;
            for j in k - 1..=k + 1 {
                consider(&Mat2::new(1.0, j as f64 * width, 0.0, 1.0));
            }
        }
        if self.width.is_none() || a.z.im * b.z.im <= (cutoff / dim).exp() {
            let need = a.dist_to_i + b.dist_to_i + cutoff / dim;
            if need > self.radius {
                self.truncated.fetch_add(1, Ordering::Relaxed);
            }
            let end = self.ball.partition_point(|e| e.1 <= need);
            for (g, _) in &self.ball[..end] {
                consider(g);
            }
        }
        best
    }
}

/// Greedy `(n, ε)`-separated subset on `Γ\G` (frames are reduced at every
/// time step and compared with [`QuotientMetric::distance`]).
pub fn separated_count_quotient(metric: &QuotientMetric, points: &[Frame], n: usize, eps: f64) -> Result<usize> {
    let n = n.max(1);
    let traj: Vec<Vec<ReducedFrame>> =
        points.par_iter().map(|p| metric.reduced_trajectory(p, n)).collect::<Result<_>>()?;
    let cut = eps * (1.0 + 1e-9) + 1e-12;
    let close = |a: &[ReducedFrame], b: &[ReducedFrame]| a.iter().zip(b).all(|(x, y)| metric.distance(x, y, cut) <= eps);
    let mut kept: Vec<usize> = Vec::new();
    for (i, t) in traj.iter().enumerate() {
        if !kept.par_iter().any(|&j| close(t, &traj[j])) {
            kept.push(i);
        }
    }
    Ok(kept.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isometry::random_isometry;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::new(random_isometry(2, &mut rng, 1.5))
    }

    /// `D(v) = d(e, n(v))` for the horocyclic subgroup `n` is increasing in
    /// `v`; solve `D(v) = ρ` by bisection.
    fn solve(n: fn(usize, &[f64]) -> Isometry, rho: f64) -> f64 {
        let d = |v: f64| frame_distance(&Frame::identity(2), &Frame::new(n(2, &[v])));
        let (mut lo, mut hi) = (0.0, 1.0);
        while d(hi) < rho {
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if d(mid) < rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn identical_frames_are_always_close() {
        let f = frame(1);
        assert!(bowen_ball_test(&f, &f, 10, 1e-9));
    }

    #[test]
    fn stable_direction_contracts_forward_and_expands_backward() {
        // f and f·n⁻(u) at distance ρ/2
        let rho = 0.4;
        let u = solve(Isometry::horocyclic_minus, rho / 2.0);
        let f = frame(2);
        let g = Frame::new(f.g.compose(&Isometry::horocyclic_minus(2, &[u])));
        assert!((frame_distance(&f, &g) - rho / 2.0).abs() < 1e-9);
        for n in [1, 5, 20] {
            assert!(bowen_ball_test_forward(&f, &g, n, rho));
        }
        // the two-sided ball also looks backward, where n⁻ expands
        assert!(!bowen_ball_test(&f, &g, 20, rho));
    }

    #[test]
    fn unstable_direction_fails_when_the_expansion_reaches_rho() {
        // d(f a_n, f n⁺(u) a_n) = D(e^n u), so the first failing time is the
        // first n with e^n u ≥ v*, where D(v*) = ρ
        let rho = 0.5;
        let v_star = solve(Isometry::horocyclic_plus, rho);
        let f = frame(3);
        for u in [solve(Isometry::horocyclic_plus, rho / 2.0), rho / 200.0] {
            let g = Frame::new(f.g.compose(&Isometry::horocyclic_plus(2, &[u])));
            let predicted = (v_star / u).ln().ceil() as usize;
            let first_fail = (0..30).find(|&n| !bowen_ball_test_forward(&f, &g, n + 1, rho)).unwrap();
            assert_eq!(first_fail, predicted, "u = {u}");
            assert!(!bowen_ball_test(&f, &g, predicted, rho));
            assert!(bowen_ball_test(&f, &g, predicted - 1, rho));
        }
    }

    #[test]
    fn separated_count_examples() {
        assert_eq!(separated_count(&[frame(4)], 5, 0.1), 1);
        // base points 1 apart along a geodesic: all separated at ε = 0.5
        let pts: Vec<Frame> = (0..6).map(|k| Frame::identity(2).flow(k as f64)).collect();
        assert_eq!(separated_count(&pts, 1, 0.5), 6);
        // duplicates are dropped
        let dup = vec![frame(5), frame(5), frame(6)];
        assert_eq!(separated_count(&dup, 3, 0.1), 2);
    }

    #[test]
    fn quotient_distance_sees_group_translates() {
        let g = GroupSpec::modular();
        let metric = QuotientMetric::new(&g, 6.0).unwrap();
        let f = frame(7);
        let t = Isometry::from_sl2(Mat2::new(2.0, 1.0, 1.0, 1.0)).unwrap();
        let a = metric.reduce(&f).unwrap();
        let b = metric.reduce(&f.translate(&t)).unwrap();
        assert!(metric.distance(&a, &b, 1.0) < 1e-9);
        // and the quotient distance never exceeds the distance of the lifts
        let h = frame(8);
        let c = metric.reduce(&h).unwrap();
        let lift = frame_distance(&f, &h).min(5.0);
        assert!(metric.distance(&a, &c, 5.0) <= lift + 1e-12);
    }

    #[test]
    fn quotient_distance_in_the_cusp_uses_translations() {
        let g = GroupSpec::modular();
        let metric = QuotientMetric::new(&g, 4.0).unwrap();
        // two frames high in the cusp, 0.9 apart horizontally, i.e. 0.1 modulo T
        // base points −0.45 + 36i and 0.45 + 36i
        let f1 = Frame::new(Isometry::from_sl2(Mat2::new(6.0, -0.075, 0.0, 1.0 / 6.0)).unwrap());
        let f2 = Frame::new(Isometry::from_sl2(Mat2::new(1.0, 0.9, 0.0, 1.0)).unwrap().compose(&f1.g));
        let (a, b) = (metric.reduce(&f1).unwrap(), metric.reduce(&f2).unwrap());
        let shifted = Isometry::from_sl2(Mat2::new(1.0, -1.0, 0.0, 1.0)).unwrap().compose(&f2.g);
        let direct = frame_distance(&f1, &Frame::new(shifted));
        assert!(direct < frame_distance(&f1, &f2));
        assert!((metric.distance(&a, &b, 5.0) - direct).abs() < 1e-9);
        assert_eq!(metric.truncated(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bowen_balls_are_monotone(seed in 0u64..1000, n in 0usize..5, rho in 0.05f64..3.0, eps in 0.0f64..1.0) {
            let f1 = frame(seed);
            let f2 = Frame::new(f1.g.compose(&Isometry::horocyclic_plus(2, &[0.01])).compose(&Isometry::rotation(2, 1, 2, 0.01)));
            if bowen_ball_test(&f1, &f2, n, rho) {
                prop_assert!(bowen_ball_test(&f1, &f2, n.saturating_sub(1), rho + eps));
                prop_assert!(bowen_ball_test(&f2, &f1, n, rho));
            }
        }
    }
}
