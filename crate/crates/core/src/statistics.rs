//! Measures on `Γ\G` built from closed geodesics: equidistribution, escape of
//! mass, β-fraction counting and the entropy experiments.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{GeoError, Result};
use crate::fit::least_squares;
use crate::flow::{
    axis_matrix, cusp_height, epsilon_for_height, excursion_profile, itinerary, reduce_complex, region_rank,
    require_d2, separated_count_quotient, ExcursionProfile, QuotientMetric, Y_MIN,
};
use crate::group::{census, ClosedGeodesic, Family, GroupSpec};
use crate::isometry::{to_upper_half, Frame, Isometry, Mat2};
use crate::report::{Report, Table, Verdict};
use crate::spectral::reference_delta;

/// Frames per unit length when none is given.
pub const SAMPLES_PER_UNIT: usize = 20;
/// Slack of the β-fraction counting bound.
pub const BETA_SLACK: f64 = 0.25;
/// Slack of the entropy inequality.
pub const ENTROPY_SLACK: f64 = 0.3;
/// Slack of the per-itinerary covering bound.
pub const COVERING_SLACK: f64 = 0.35;
/// Largest `N` accepted by the covering experiment.
pub const COVERING_MAX_N: usize = 8;
/// Points drawn by the covering experiment when none is given.
pub const COVERING_SAMPLE_SIZE: usize = 4000;
/// Tolerance on `|average − reference|` in the equidistribution experiment.
pub const EQUI_TOL: f64 = 0.12;
/// Allowed increase of the error from the first to the last length bound.
pub const EQUI_TREND_SLACK: f64 = 0.02;
/// Length of the trajectory behind Birkhoff reference values.
pub const BIRKHOFF_LENGTH: f64 = 1e5;
/// Flow step for trajectories and itineraries.
pub const TRAJECTORY_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Provenance {
    /// Average over the closed geodesics of length at most `t`.
    GeodesicAverage { t: f64 },
    /// Equally spaced samples along one trajectory.
    Trajectory { length: f64 },
    Custom,
}

/// A finitely supported measure on `Γ\G`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub samples: Vec<(Frame, f64)>,
    pub total_weight: f64,
    pub provenance: Provenance,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<(Frame, f64)>, provenance: Provenance) -> Result<Self> {
        if samples.is_empty() {
            return Err(GeoError::EmptyInput("measure without samples".into()));
        }
        if let Some((_, w)) = samples.iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(GeoError::InvalidArgument(format!("sample weight {w} is not positive")));
        }
        let weights: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let total_weight = pairwise_sum(&weights);
        Ok(Self { samples, total_weight, provenance })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Push-forward by the flow for time `t`.
    pub fn flowed(&self, t: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|(f, w)| (f.flow(t), *w)).collect(),
            total_weight: self.total_weight,
            provenance: self.provenance,
        }
    }

    /// `m` frames chosen by systematic resampling (the `(j + ½)/m` quantiles
    /// of the cumulative weight), in sample order.
    pub fn resample(&self, m: usize) -> Vec<Frame> {
        if m >= self.samples.len() {
            return self.samples.iter().map(|s| s.0).collect();
        }
        let mut out = Vec::with_capacity(m);
        let mut acc = 0.0;
        let mut j = 0;
        for (f, w) in &self.samples {
            acc += w / self.total_weight;
            while j < m && (j as f64 + 0.5) / m as f64 <= acc {
                out.push(*f);
                j += 1;
            }
        }
        // round-off can leave the last quantile unassigned
        while out.len() < m {
            out.push(self.samples.last().expect("nonempty").0);
        }
        out
    }
}

/// Sum with pairwise splitting: the result does not depend on thread counts
/// and the error grows like `log n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

fn frame_of(m: &Mat2) -> Frame {
    Frame::new(Isometry::from_sl2_unchecked(*m))
}

fn flow_mat(t: f64) -> Mat2 {
    let h = (t / 2.0).exp();
    Mat2::new(h, 0.0, 0.0, 1.0 / h)
}

/// `k` equally spaced reduced frames along the periodic orbit of `g`, with
/// their reduced base points.
fn orbit_samples(spec: &GroupSpec, g: &ClosedGeodesic, k: usize) -> Result<Vec<(Mat2, Complex64)>> {
    let m0 = axis_matrix(&g.axis.0, &g.axis.1)?;
    let dt = g.length / k as f64;
    let mut w = Mat2::IDENTITY;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let f = w * m0 * flow_mat(j as f64 * dt);
        let (zr, step) = reduce_complex(spec, f.apply(Complex64::new(0.0, 1.0)))?;
        w = step * w;
        out.push((step * f, zr));
    }
    Ok(out)
}

fn samples_for(g: &ClosedGeodesic, rate: usize) -> usize {
    ((g.length * rate as f64).ceil() as usize).max(1)
}

/// `μ_T = (1/|list|) Σ μ_l`: each geodesic contributes `⌈length · rate⌉`
/// equally weighted frames along its orbit and every orbit has mass
/// `1/|list|`.
pub fn geodesic_measure(spec: &GroupSpec, geodesics: &[ClosedGeodesic], rate: usize) -> Result<EmpiricalMeasure> {
    require_d2(spec)?;
    if geodesics.is_empty() {
        return Err(GeoError::EmptyInput("no closed geodesics to average over".into()));
    }
    if rate == 0 {
        return Err(GeoError::InvalidArgument("sampling rate must be positive".into()));
    }
    let per: Vec<Vec<(Frame, f64)>> = geodesics
        .par_iter()
        .map(|g| {
            let k = samples_for(g, rate);
            let w = 1.0 / (geodesics.len() * k) as f64;
            Ok(orbit_samples(spec, g, k)?.into_iter().map(|(m, _)| (frame_of(&m), w)).collect())
        })
        .collect::<Result<_>>()?;
    let t = geodesics.iter().map(|g| g.length).fold(0.0, f64::max);
    EmpiricalMeasure::new(per.into_iter().flatten().collect(), Provenance::GeodesicAverage { t })
}

/// Built-in test functions on `Γ\G`; all depend on the base point only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// Indicator of `{height ≥ y}` in any cusp.
    CuspIndicator { y: f64 },
    /// `min(height, y)^σ`.
    HeightPower { y: f64, sigma: f64 },
    /// `exp(1 − 1/(1 − (d/r)²))` for `d = d(z, center) < r`, else 0. Exact on
    /// the quotient when `center` is the centre of the Dirichlet domain used
    /// by the reduction (the base point `i` for Schottky presets) and `r` is
    /// below its inradius.
    Bump { center: Complex64, radius: f64 },
}

impl TestFunction {
    /// Parse `one`, `const:<c>`, `cusp`, `height:<σ>`, `bump:<r>` or
    /// `bump:<x>,<y>,<r>`; `y` is the cusp height for the cusp-based functions.
    pub fn parse(s: &str, y: f64) -> Result<Self> {
        let bad = || GeoError::InvalidArgument(format!("unknown test function {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        let f = match (name, arg) {
            ("one", None) => TestFunction::Constant(1.0),
            ("const", Some(c)) => TestFunction::Constant(num(c)?),
            ("cusp", None) => TestFunction::CuspIndicator { y },
            ("height", Some(sig)) => TestFunction::HeightPower { y, sigma: num(sig)? },
            ("height", None) => TestFunction::HeightPower { y, sigma: 1.0 },
            ("bump", arg) => {
                let parts: Vec<f64> = match arg {
                    None => vec![0.5],
                    Some(a) => a.split(',').map(num).collect::<Result<_>>()?,
                };
                match parts[..] {
                    [r] => TestFunction::Bump { center: Complex64::new(0.0, 1.0), radius: r },
                    [x, yy, r] if yy > 0.0 => TestFunction::Bump { center: Complex64::new(x, yy), radius: r },
                    _ => return Err(bad()),
                }
            }
            _ => return Err(bad()),
        };
        if let TestFunction::Bump { radius, .. } = f {
            if !(radius > 0.0) {
                return Err(GeoError::InvalidArgument("bump radius must be positive".into()));
            }
        }
        Ok(f)
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("const:{c}"),
            TestFunction::CuspIndicator { y } => format!("cusp(Y={y})"),
            TestFunction::HeightPower { y, sigma } => format!("height(Y={y},sigma={sigma})"),
            TestFunction::Bump { center, radius } => format!("bump({},{};r={radius})", center.re, center.im),
        }
    }

    /// Value at a reduced base point.
    pub fn eval_reduced(&self, spec: &GroupSpec, z: Complex64) -> f64 {
        match *self {
            TestFunction::Constant(c) => c,
            TestFunction::CuspIndicator { y } => f64::from(region_rank(spec, z, y) > 0),
            TestFunction::HeightPower { y, sigma } => height(spec, z).min(y).powf(sigma),
            TestFunction::Bump { center, radius } => {
                let d = 2.0 * ((z - center).norm() / (2.0 * (z.im * center.im).sqrt())).asinh();
                if d >= radius {
                    0.0
                } else {
                    let u = d / radius;
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
        }
    }

    pub fn eval(&self, spec: &GroupSpec, f: &Frame) -> Result<f64> {
        let z = to_upper_half(&f.base_point())?.to_complex();
        let (zr, _) = reduce_complex(spec, z)?;
        Ok(self.eval_reduced(spec, zr))
    }
}

/// Largest cusp height of a reduced point (its imaginary part when there is
/// no cusp).
fn height(spec: &GroupSpec, z: Complex64) -> f64 {
    spec.cusps.iter().map(|c| cusp_height(c, z)).fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h)))).unwrap_or(z.im)
}

/// `∫ f dμ / μ(Γ\G)`.
pub fn average(spec: &GroupSpec, mu: &EmpiricalMeasure, f: &TestFunction) -> Result<f64> {
    let vals: Vec<f64> = mu.samples.par_iter().map(|(fr, w)| Ok(w * f.eval(spec, fr)?)).collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals) / mu.total_weight)
}

/// `∫ f dμ_l` for each geodesic (the per-orbit averages behind `μ_T`).
pub fn orbit_averages(spec: &GroupSpec, geodesics: &[ClosedGeodesic], rate: usize, f: &TestFunction) -> Result<Vec<f64>> {
    require_d2(spec)?;
    geodesics
        .par_iter()
        .map(|g| {
            let vals: Vec<f64> =
                orbit_samples(spec, g, samples_for(g, rate))?.iter().map(|(_, z)| f.eval_reduced(spec, *z)).collect();
            Ok(mean(&vals))
        })
        .collect()
}

/// A census together with the excursion profile of every member.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfiledGeodesic {
    pub geodesic: ClosedGeodesic,
    pub profile: ExcursionProfile,
}

/// The primitive census up to `t` with excursion profiles above `y`.
pub fn profiled_census(spec: &GroupSpec, t: f64, y: f64) -> Result<Vec<ProfiledGeodesic>> {
    let list = census(spec, t, true)?.geodesics;
    profile_all(spec, list, y)
}

pub fn profile_all(spec: &GroupSpec, list: Vec<ClosedGeodesic>, y: f64) -> Result<Vec<ProfiledGeodesic>> {
    list.into_par_iter()
        .map(|g| {
            let profile = excursion_profile(spec, &g, y)?;
            Ok(ProfiledGeodesic { geodesic: g, profile })
        })
        .collect()
}

/// `Y ↦ μ_T({height ≥ Y})`, from the exact excursion profiles of the census.
pub fn escape_mass_curve(spec: &GroupSpec, t: f64, y_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let list = census(spec, t, true)?.geodesics;
    if list.is_empty() {
        return Err(GeoError::EmptyInput(format!("no closed geodesics of length ≤ {t}")));
    }
    y_grid
        .iter()
        .map(|&y| {
            let fr: Vec<f64> = list
                .par_iter()
                .map(|g| Ok(excursion_profile(spec, g, y)?.total_fraction))
                .collect::<Result<_>>()?;
            Ok((y, mean(&fr)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// `(parameter, value)`, sorted by parameter.
    pub grid: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

impl RateFit {
    /// Fit `log value` against the parameter.
    pub fn exponential(grid: Vec<(f64, f64)>) -> Result<Self> {
        let mut grid = grid;
        grid.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(p) = grid.iter().find(|p| !(p.1 > 0.0)) {
            return Err(GeoError::InsufficientData(format!("count {} at {} cannot be fitted on a log scale", p.1, p.0)));
        }
        let xs: Vec<f64> = grid.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = grid.iter().map(|p| p.1.ln()).collect();
        let fit = least_squares(&xs, &ys)?;
        Ok(Self { grid, slope: fit.slope, intercept: fit.intercept, residual: fit.residual })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaTail {
    pub beta: f64,
    pub fit: RateFit,
    /// `δ − (2δ − r_max)·β/2 + slack`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaTailReport {
    pub t: f64,
    pub y: f64,
    pub delta: f64,
    pub r_max: usize,
    pub tails: Vec<BetaTail>,
    pub slack: f64,
}

impl BetaTailReport {
    pub fn rates_strictly_decreasing(&self) -> bool {
        self.tails.windows(2).all(|w| w[1].fit.slope < w[0].fit.slope)
    }

    pub fn pass(&self) -> bool {
        self.tails.iter().all(|t| t.pass) && self.rates_strictly_decreasing()
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["beta", "T", "count", "rate", "bound"]);
        for tail in &self.tails {
            for &(t, c) in &tail.fit.grid {
                table.push(vec![json!(tail.beta), json!(t), json!(c as u64), json!(tail.fit.slope), json!(tail.bound)]);
            }
        }
        Report::new("beta-tails", table, Verdict::from_bool(self.pass()))
            .param("T", self.t)
            .param("Y", self.y)
            .param("delta", self.delta)
            .param("r_max", self.r_max as u64)
            .with_slack(self.slack)
    }
}

/// Counts of classes spending at least a fraction `β` of their length above
/// `y`, at length bounds `T − 2, T − 1, T`, with the fitted exponential rate.
pub fn beta_tail_counts(spec: &GroupSpec, t: f64, y: f64, betas: &[f64]) -> Result<BetaTailReport> {
    let delta = reference_delta(spec)?;
    let profiled = profiled_census(spec, t, y)?;
    beta_tails_from(spec, &profiled, t, y, betas, delta)
}

pub fn beta_tails_from(
    spec: &GroupSpec,
    profiled: &[ProfiledGeodesic],
    t: f64,
    y: f64,
    betas: &[f64],
    delta: f64,
) -> Result<BetaTailReport> {
    let mut betas = betas.to_vec();
    betas.sort_by(f64::total_cmp);
    let r_max = spec.r_max();
    let tails = betas
        .iter()
        .map(|&beta| {
            let grid = [t - 2.0, t - 1.0, t]
                .iter()
                .map(|&tt| {
                    let c = profiled
                        .iter()
                        .filter(|p| p.geodesic.length <= tt && p.profile.total_fraction >= beta)
                        .count();
                    (tt, c as f64)
                })
                .collect();
            let fit = RateFit::exponential(grid)?;
            let bound = delta - (2.0 * delta - r_max as f64) * beta / 2.0 + BETA_SLACK;
            Ok(BetaTail { beta, pass: fit.slope <= bound, fit, bound })
        })
        .collect::<Result<_>>()?;
    Ok(BetaTailReport { t, y, delta, r_max, tails, slack: BETA_SLACK })
}

/// `2 log log(2Y) / log(2Y)`, the height analogue of `2 log|log ε| / |log ε|`.
pub fn entropy_fudge(y: f64) -> f64 {
    let l = (2.0 * y).ln();
    2.0 * l.ln() / l
}

/// `μ(cusp regions of rank i at height y)` for each rank present.
pub fn cusp_mass_by_rank(spec: &GroupSpec, mu: &EmpiricalMeasure, y: f64) -> Result<BTreeMap<usize, f64>> {
    let ranks: Vec<u8> = mu
        .samples
        .par_iter()
        .map(|(f, _)| {
            let z = to_upper_half(&f.base_point())?.to_complex();
            let (zr, _) = reduce_complex(spec, z)?;
            Ok(region_rank(spec, zr, y))
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for c in &spec.cusps {
        out.entry(c.rank).or_insert(0.0);
    }
    for (r, (_, w)) in ranks.iter().zip(&mu.samples) {
        if *r > 0 {
            *out.entry(*r as usize).or_insert(0.0) += w / mu.total_weight;
        }
    }
    Ok(out)
}

/// `δ − Σᵢ ((2δ − i)/2)·μ(cusp rank i) + fudge(y)`.
pub fn entropy_rhs(delta: f64, cusp_mass: &BTreeMap<usize, f64>, y: f64) -> f64 {
    let cut: f64 = cusp_mass.iter().map(|(&i, &m)| (2.0 * delta - i as f64) / 2.0 * m).sum();
    delta - cut + entropy_fudge(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOptions {
    /// Points drawn from the measure (systematic resampling).
    pub max_points: usize,
    /// Radius of the orbit ball behind the quotient metric.
    pub metric_radius: f64,
    /// `δ` for the right-hand side; [`reference_delta`] when absent.
    pub delta: Option<f64>,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { max_points: 2000, metric_radius: 8.0, delta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyCheck {
    /// `(log S(n) − log S(n₀)) / (n − n₀)` with `n₀ = ⌊n/2⌋`.
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub fudge: f64,
    pub cusp_mass: BTreeMap<usize, f64>,
    /// `(n₀, S(n₀))` and `(n, S(n))`.
    pub counts: [(usize, usize); 2],
    pub points: usize,
    pub eps: f64,
    pub y: f64,
    pub truncated_searches: usize,
    pub slack: f64,
    pub pass: bool,
}

impl EntropyCheck {
    pub fn report(&self) -> Report {
        let mut table = Table::new(&["n", "separated"]);
        for (n, s) in self.counts {
            table.push(vec![json!(n as u64), json!(s as u64)]);
        }
        let mut r = Report::new("entropy-check", table, Verdict::from_bool(self.pass))
            .param("lhs", self.lhs)
            .param("rhs", self.rhs)
            .param("delta", self.delta)
            .param("fudge", self.fudge)
            .param("eps", self.eps)
            .param("Y", self.y)
            .param("points", self.points as u64)
            .param("truncated_searches", self.truncated_searches as u64)
            .with_slack(self.slack)
            .note("the fudge term is a modelled height analogue of the small-scale correction");
        for (i, m) in &self.cusp_mass {
            r = r.param(&format!("cusp_mass_rank{i}"), *m);
        }
        r
    }
}

/// Compare the separated-set growth rate of `mu` with the cusp-mass bound.
///
/// The left side is the difference quotient of `log S(n)` between `n₀ = ⌊n/2⌋`
/// and `n`, which cancels the `ε`-dependent number of balls needed at time 0.
pub fn entropy_bound_check(
    spec: &GroupSpec,
    mu: &EmpiricalMeasure,
    y: f64,
    n: usize,
    eps: f64,
    opts: &EntropyOptions,
) -> Result<EntropyCheck> {
    if n < 2 {
        return Err(GeoError::InvalidArgument("entropy check needs n ≥ 2".into()));
    }
    if !(eps > 0.0) {
        return Err(GeoError::InvalidArgument(format!("separation {eps} must be positive")));
    }
    if !(y >= Y_MIN) {
        return Err(GeoError::InvalidArgument(format!("horoball height {y} below the floor {Y_MIN}")));
    }
    let points = mu.resample(opts.max_points);
    if points.len() < 2 {
        return Err(GeoError::InsufficientData("need at least two sample points".into()));
    }
    let delta = match opts.delta {
        Some(d) => d,
        None => reference_delta(spec)?,
    };
    let metric = QuotientMetric::new(spec, opts.metric_radius)?;
    let n0 = n / 2;
    let s0 = separated_count_quotient(&metric, &points, n0, eps)?;
    let s1 = separated_count_quotient(&metric, &points, n, eps)?;
    let lhs = ((s1 as f64).ln() - (s0 as f64).ln()) / (n - n0) as f64;
    let cusp_mass = cusp_mass_by_rank(spec, mu, y)?;
    let rhs = entropy_rhs(delta, &cusp_mass, y);
    Ok(EntropyCheck {
        lhs,
        rhs,
        delta,
        fudge: entropy_fudge(y),
        cusp_mass,
        counts: [(n0, s0), (n, s1)],
        points: points.len(),
        eps,
        y,
        truncated_searches: metric.truncated(),
        slack: ENTROPY_SLACK,
        pass: lhs <= rhs + ENTROPY_SLACK,
    })
}

/// Where the covering experiment draws its points from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointSource {
    /// The census measure `μ_T`.
    Census { t: f64 },
    /// One long trajectory from [`generic_frame`], sampled every `spacing`.
    Trajectory { spacing: f64 },
}

impl PointSource {
    /// The Liouville (= Bowen–Margulis) trajectory for the Modular lattice,
    /// the census measure at `T = 10` otherwise.
    pub fn reference(spec: &GroupSpec) -> Self {
        if spec.family == Family::Modular {
            PointSource::Trajectory { spacing: TRAJECTORY_SPACING }
        } else {
            PointSource::Census { t: 10.0 }
        }
    }
}

/// Time between consecutive trajectory samples (incommensurable with the
/// integer itinerary times).
pub const TRAJECTORY_SPACING: f64 = 1.7;

/// `m` reduced frames along the trajectory of `start`, `spacing` apart.
pub fn trajectory_points(spec: &GroupSpec, start: &Mat2, m: usize, spacing: f64) -> Result<Vec<Frame>> {
    require_d2(spec)?;
    let a = flow_mat(spacing);
    let mut g = *start;
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let (_, w) = reduce_complex(spec, g.apply(Complex64::new(0.0, 1.0)))?;
        g = w * g;
        if k % 64 == 0 {
            g = g.normalized();
        }
        out.push(frame_of(&g));
        g = g * a;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringOptions {
    /// Where the points come from; [`PointSource::reference`] when absent.
    pub source: Option<PointSource>,
    /// Bowen-ball scale `η`.
    pub eta: f64,
    pub metric_radius: f64,
    pub delta: Option<f64>,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        Self { source: None, eta: 0.5, metric_radius: 8.0, delta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItineraryClass {
    pub values: Vec<u8>,
    /// `|V⁻¹(ℕ_{>0})|`.
    pub cusp_count: usize,
    pub points: usize,
    /// Greedy `(2N+1, η)`-separated subset size (two-sided Bowen balls).
    pub separated: usize,
    pub exponent: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringReport {
    pub n: usize,
    pub source: PointSource,
    pub sample_size: usize,
    pub y: f64,
    pub eta: f64,
    pub delta: f64,
    pub classes: Vec<ItineraryClass>,
    /// `(cusp count, mean exponent over its classes)`.
    pub trend: Vec<(usize, f64)>,
    /// `4 L³ e^{(3 log L / L) N}` with `L = |log ε(Y)|`.
    pub itinerary_bound: f64,
    pub slack: f64,
    pub truncated_searches: usize,
}

impl CoveringReport {
    pub fn bound_holds(&self) -> bool {
        self.classes.iter().all(|c| c.pass)
    }

    /// The mean exponent decreases with the cusp count.
    pub fn trend_decreasing(&self) -> bool {
        self.trend.len() >= 2 && self.trend.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn itinerary_count_holds(&self) -> bool {
        self.classes.len() as f64 <= self.itinerary_bound
    }

    pub fn pass(&self) -> bool {
        self.bound_holds() && self.trend_decreasing()
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["itinerary", "cusp_count", "points", "separated", "exponent", "bound"]);
        for c in &self.classes {
            let v: String = c.values.iter().map(|x| char::from(b'0' + x)).collect();
            table.push(vec![
                json!(v),
                json!(c.cusp_count as u64),
                json!(c.points as u64),
                json!(c.separated as u64),
                json!(c.exponent),
                json!(c.bound),
            ]);
        }
        Report::new("covering-exponents", table, Verdict::from_bool(self.pass()))
            .param("N", self.n as u64)
            .param("source", serde_json::to_value(self.source).expect("serializes"))
            .param("sample_size", self.sample_size as u64)
            .param("Y", self.y)
            .param("eta", self.eta)
            .param("delta", self.delta)
            .param("populated_itineraries", self.classes.len() as u64)
            .param("itinerary_bound", self.itinerary_bound)
            .param("itinerary_bound_holds", self.itinerary_count_holds())
            .param("trend_decreasing", self.trend_decreasing())
            .param("truncated_searches", self.truncated_searches as u64)
            .with_slack(self.slack)
    }
}

/// Group sample points by their itinerary over `[−N, N]` and estimate, per
/// group, the exponent `log(#Bowen (N, η)-balls)/(2N + 1)` from a greedy
/// separated set.
pub fn covering_number_experiment(
    spec: &GroupSpec,
    y: f64,
    n: usize,
    sample_size: usize,
    opts: &CoveringOptions,
) -> Result<CoveringReport> {
    if n > COVERING_MAX_N {
        return Err(GeoError::BudgetExceeded { cap: COVERING_MAX_N });
    }
    if spec.cusps.is_empty() {
        return Err(GeoError::UnsupportedGroup(format!("{} has no cusp", spec.family.name())));
    }
    let delta = match opts.delta {
        Some(d) => d,
        None => reference_delta(spec)?,
    };
    let source = opts.source.unwrap_or_else(|| PointSource::reference(spec));
    let points = match source {
        PointSource::Census { t } => {
            let list = census(spec, t, true)?.geodesics;
            geodesic_measure(spec, &list, SAMPLES_PER_UNIT)?.resample(sample_size)
        }
        PointSource::Trajectory { spacing } => trajectory_points(spec, &generic_frame(), sample_size, spacing)?,
    };
    let itins: Vec<Vec<u8>> = points
        .par_iter()
        .map(|p| Ok(itinerary(spec, p, n, TRAJECTORY_STEP, y)?.values))
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<Vec<u8>, Vec<Frame>> = BTreeMap::new();
    for (p, v) in points.iter().zip(itins) {
        groups.entry(v).or_default().push(p.flow(-(n as f64)));
    }
    let metric = QuotientMetric::new(spec, opts.metric_radius)?;
    let span = (2 * n + 1) as f64;
    let mut classes = Vec::new();
    for (values, starts) in groups {
        let separated = separated_count_quotient(&metric, &starts, 2 * n + 1, opts.eta)?;
        let exponent = (separated as f64).ln() / span;
        let mut cut = 0.0;
        for c in &spec.cusps {
            let i = c.rank as u8;
            cut += (2.0 * delta - i as f64) / 2.0 * values.iter().filter(|&&v| v == i).count() as f64 / span;
        }
        let bound = delta - cut;
        let cusp_count = values.iter().filter(|&&v| v > 0).count();
        classes.push(ItineraryClass {
            cusp_count,
            points: starts.len(),
            separated,
            exponent,
            bound,
            pass: exponent <= bound + COVERING_SLACK,
            values,
        });
    }
    let mut by_count: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for c in &classes {
        by_count.entry(c.cusp_count).or_default().push(c.exponent);
    }
    let trend = by_count.into_iter().map(|(k, v)| (k, mean(&v))).collect();
    let l_min = spec.cusps.iter().map(|c| c.l_min).fold(f64::INFINITY, f64::min);
    let l = epsilon_for_height(l_min, y).ln().abs();
    let itinerary_bound = 4.0 * l.powi(3) * (3.0 * l.ln() / l * n as f64).exp();
    Ok(CoveringReport {
        n,
        source,
        sample_size: points.len(),
        y,
        eta: opts.eta,
        delta,
        classes,
        trend,
        itinerary_bound,
        slack: COVERING_SLACK,
        truncated_searches: metric.truncated(),
    })
}

/// Birkhoff average of `f` along the trajectory of `start`, sampled at step
/// `h` with incremental reduction.
pub fn birkhoff_average(spec: &GroupSpec, start: &Mat2, length: f64, h: f64, f: &TestFunction) -> Result<f64> {
    require_d2(spec)?;
    let steps = (length / h).ceil() as usize;
    let a = flow_mat(h);
    let mut g = *start;
    let mut vals = Vec::with_capacity(steps);
    for k in 0..steps {
        let (zr, w) = reduce_complex(spec, g.apply(Complex64::new(0.0, 1.0)))?;
        g = w * g;
        if k % 64 == 0 {
            g = g.normalized();
        }
        vals.push(f.eval_reduced(spec, zr));
        g = g * a;
    }
    Ok(mean(&vals))
}

/// A generic starting frame for reference trajectories.
pub fn generic_frame() -> Mat2 {
    let (x, y, th): (f64, f64, f64) = (0.1234, 1.3, 1.0);
    let s = y.sqrt();
    Mat2::new(s, x / s, 0.0, 1.0 / s) * Mat2::new((th / 2.0).cos(), (th / 2.0).sin(), -(th / 2.0).sin(), (th / 2.0).cos())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceValue {
    pub value: f64,
    /// `analytic`, `birkhoff` or `census-proxy`.
    pub method: String,
}

/// `∫ f dm_BM`: analytic for constants and for Modular cusp indicators
/// (`3/(πY)`, the area above height `Y` over the area `π/3`), a long Birkhoff
/// average for other functions on the Modular surface, and otherwise the
/// census average at `proxy_t` (the limit in `T` is `m_BM`).
pub fn reference_value(spec: &GroupSpec, f: &TestFunction, proxy_t: f64) -> Result<ReferenceValue> {
    let modular = spec.family == Family::Modular;
    match *f {
        TestFunction::Constant(c) => Ok(ReferenceValue { value: c, method: "analytic".into() }),
        TestFunction::CuspIndicator { y } if modular && y >= 1.0 => {
            Ok(ReferenceValue { value: 3.0 / (std::f64::consts::PI * y), method: "analytic".into() })
        }
        _ if modular => Ok(ReferenceValue {
            value: birkhoff_average(spec, &generic_frame(), BIRKHOFF_LENGTH, TRAJECTORY_STEP, f)?,
            method: "birkhoff".into(),
        }),
        _ => {
            let list = census(spec, proxy_t, true)?.geodesics;
            if list.is_empty() {
                return Err(GeoError::EmptyInput(format!("no closed geodesics of length ≤ {proxy_t}")));
            }
            let v = orbit_averages(spec, &list, SAMPLES_PER_UNIT, f)?;
            Ok(ReferenceValue { value: mean(&v), method: format!("census-proxy(T={proxy_t})") })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistributionPoint {
    pub t: f64,
    pub count: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistributionCurve {
    pub function: String,
    pub points: Vec<EquidistributionPoint>,
    pub reference: ReferenceValue,
    pub tol: f64,
    pub trend_slack: f64,
}

impl EquidistributionCurve {
    pub fn final_error(&self) -> f64 {
        self.points.last().map_or(f64::INFINITY, |p| p.error)
    }

    pub fn trend_holds(&self) -> bool {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.error <= a.error + self.trend_slack,
            _ => false,
        }
    }

    pub fn pass(&self) -> bool {
        self.final_error() <= self.tol && self.trend_holds()
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(&["T", "count", "value", "reference", "error"]);
        for p in &self.points {
            table.push(vec![json!(p.t), json!(p.count as u64), json!(p.value), json!(self.reference.value), json!(p.error)]);
        }
        Report::new("equidistribute", table, Verdict::from_bool(self.pass()))
            .param("f", self.function.clone())
            .param("reference", self.reference.value)
            .param("reference_method", self.reference.method.clone())
            .param("tol", self.tol)
            .with_slack(self.trend_slack)
    }
}

/// `∫ f dμ_T` for each `T` in the grid against the reference value.
pub fn equidistribution_curve(spec: &GroupSpec, t_grid: &[f64], f: &TestFunction, rate: usize) -> Result<EquidistributionCurve> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let t_max = *ts.last().ok_or_else(|| GeoError::EmptyInput("empty length grid".into()))?;
    let list = census(spec, t_max, true)?.geodesics;
    let reference = reference_value(spec, f, t_max + 2.0)?;
    curve_from(spec, &list, &ts, f, rate, reference)
}

/// The curve over an explicit list of geodesics (sorted by length).
pub fn curve_from(
    spec: &GroupSpec,
    list: &[ClosedGeodesic],
    ts: &[f64],
    f: &TestFunction,
    rate: usize,
    reference: ReferenceValue,
) -> Result<EquidistributionCurve> {
    let avgs = orbit_averages(spec, list, rate, f)?;
    let points = ts
        .iter()
        .map(|&t| {
            let k = list.partition_point(|g| g.length <= t);
            if k == 0 {
                return Err(GeoError::EmptyInput(format!("no closed geodesics of length ≤ {t}")));
            }
            let value = mean(&avgs[..k]);
            Ok(EquidistributionPoint { t, count: k, value, error: (value - reference.value).abs() })
        })
        .collect::<Result<_>>()?;
    Ok(EquidistributionCurve { function: f.name(), points, reference, tol: EQUI_TOL, trend_slack: EQUI_TREND_SLACK })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::separated_count;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn modular_census(t: f64) -> Vec<ClosedGeodesic> {
        census(&GroupSpec::modular(), t, true).unwrap().geodesics
    }

    fn census8() -> &'static [ClosedGeodesic] {
        static C: OnceLock<Vec<ClosedGeodesic>> = OnceLock::new();
        C.get_or_init(|| modular_census(8.0))
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let xs: Vec<f64> = (1..=1000).map(|k| 1.0 / k as f64).collect();
        let plain: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - plain).abs() < 1e-12);
    }

    #[test]
    fn single_geodesic_measure_is_a_probability() {
        let g = GroupSpec::modular();
        let list = &census8()[..1];
        let mu = geodesic_measure(&g, list, 10).unwrap();
        assert!((mu.total_weight - 1.0).abs() < 1e-12);
        assert_eq!(mu.len(), (list[0].length * 10.0).ceil() as usize);
        assert!((average(&g, &mu, &TestFunction::Constant(1.0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_bad_inputs() {
        let g = GroupSpec::modular();
        assert!(matches!(geodesic_measure(&g, &[], 10), Err(GeoError::EmptyInput(_))));
        assert!(matches!(EmpiricalMeasure::new(vec![], Provenance::Custom), Err(GeoError::EmptyInput(_))));
        let f = Frame::identity(2);
        assert!(EmpiricalMeasure::new(vec![(f, 0.0)], Provenance::Custom).is_err());
        assert!(TestFunction::parse("bump:-1", 2.0).is_err());
        assert!(TestFunction::parse("nope", 2.0).is_err());
    }

    #[test]
    fn orbits_are_weighted_equally() {
        let g = GroupSpec::modular();
        let list = &census8()[..20];
        let mu = geodesic_measure(&g, list, 7).unwrap();
        let mut start = 0;
        for geo in list {
            let k = samples_for(geo, 7);
            let mass: f64 = mu.samples[start..start + k].iter().map(|s| s.1).sum();
            assert!((mass - 1.0 / 20.0).abs() < 1e-12);
            start += k;
        }
        assert_eq!(start, mu.len());
    }

    #[test]
    fn samples_lie_on_the_closed_orbit() {
        // the reduced samples of one period come back to the start
        let g = GroupSpec::modular();
        let geo = &census8()[5];
        let s = orbit_samples(&g, geo, 50).unwrap();
        let m0 = axis_matrix(&geo.axis.0, &geo.axis.1).unwrap();
        let end = m0 * flow_mat(geo.length);
        let (z_end, _) = reduce_complex(&g, end.apply(Complex64::new(0.0, 1.0))).unwrap();
        assert!((z_end - s[0].1).norm() < 1e-6, "{z_end} vs {}", s[0].1);
    }

    #[test]
    fn flow_pushforward_changes_averages_little() {
        let g = GroupSpec::modular();
        let rate = 10;
        let mu = geodesic_measure(&g, &census8()[..200], rate).unwrap();
        let f = TestFunction::HeightPower { y: 2.0, sigma: 1.0 };
        let a = average(&g, &mu, &f).unwrap();
        for t0 in [0.03, 0.37, 5.0] {
            let b = average(&g, &mu.flowed(t0), &f).unwrap();
            assert!((a - b).abs() < 2.0 / rate as f64, "t0 = {t0}: {a} vs {b}");
        }
    }

    #[test]
    fn doubling_the_rate_barely_moves_a_lipschitz_average() {
        let g = GroupSpec::modular();
        let f = TestFunction::HeightPower { y: 3.0, sigma: 1.0 };
        let a = mean(&orbit_averages(&g, census8(), 10, &f).unwrap());
        let b = mean(&orbit_averages(&g, census8(), 20, &f).unwrap());
        assert!((a - b).abs() < 0.01 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn cusp_average_matches_the_excursion_fractions() {
        // two independent computations of the same cusp mass
        let g = GroupSpec::modular();
        let y = 2.0;
        let mu = geodesic_measure(&g, census8(), 40).unwrap();
        let sampled = average(&g, &mu, &TestFunction::CuspIndicator { y }).unwrap();
        let exact: Vec<f64> = census8().iter().map(|c| excursion_profile(&g, c, y).unwrap().total_fraction).collect();
        let exact = mean(&exact);
        assert!((sampled - exact).abs() <= 0.02 * exact, "{sampled} vs {exact}");
    }

    #[test]
    fn sub_census_average_is_within_three_standard_errors() {
        let g = GroupSpec::modular();
        let f = TestFunction::HeightPower { y: 3.0, sigma: 1.0 };
        let v = orbit_averages(&g, census8(), 10, &f).unwrap();
        let full = mean(&v);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.shuffle(&mut rng);
        let half: Vec<f64> = idx[..v.len() / 2].iter().map(|&i| v[i]).collect();
        let m = half.len() as f64;
        let var = v.iter().map(|x| (x - full).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let se = (var / m * (1.0 - m / v.len() as f64)).sqrt();
        assert!((mean(&half) - full).abs() <= 3.0 * se, "{} vs {full}, se {se}", mean(&half));
    }

    #[test]
    fn escape_mass_curve_examples() {
        let g = GroupSpec::modular();
        let curve = escape_mass_curve(&g, 8.0, &[1.0, 1.5, 2.0, 4.0, 1e6]).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12, "{curve:?}");
        }
        assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.1)));
        assert_eq!(curve[4].1, 0.0);
    }

    #[test]
    fn escape_mass_moves_toward_the_area_value() {
        let g = GroupSpec::modular();
        let reference = 3.0 / (2.0 * std::f64::consts::PI);
        let errs: Vec<f64> = [6.0, 8.0, 10.0]
            .iter()
            .map(|&t| (escape_mass_curve(&g, t, &[2.0]).unwrap()[0].1 - reference).abs())
            .collect();
        assert!(errs[2] <= errs[0], "{errs:?}");
        let v10 = escape_mass_curve(&g, 10.0, &[2.0]).unwrap()[0].1;
        assert!((v10 - reference).abs() <= 0.25 * reference, "{v10}");
    }

    #[test]
    fn beta_tails_examples() {
        let g = GroupSpec::modular();
        let profiled = profiled_census(&g, 9.0, 2.0).unwrap();
        let rep = beta_tails_from(&g, &profiled, 9.0, 2.0, &[0.0, 0.4], 1.0).unwrap();
        // β = 0 counts the whole census
        let total = profiled.iter().filter(|p| p.geodesic.length <= 9.0).count();
        assert_eq!(rep.tails[0].fit.grid[2].1 as usize, total);
        assert!(rep.tails[1].fit.grid.iter().zip(&rep.tails[0].fit.grid).all(|(a, b)| a.1 <= b.1));
        assert!((rep.tails[1].bound - (1.0 - 0.2 + 0.25)).abs() < 1e-12);
        // β = 1 and a height above every apex: nothing qualifies
        assert!(matches!(
            beta_tails_from(&g, &profile_all(&g, census8().to_vec(), 1e4).unwrap(), 8.0, 1e4, &[1.0], 1.0),
            Err(GeoError::InsufficientData(_))
        ));
    }

    #[test]
    fn entropy_terms() {
        assert!((entropy_fudge(4.0) - 2.0 * 8f64.ln().ln() / 8f64.ln()).abs() < 1e-15);
        let mut m = BTreeMap::new();
        m.insert(1, 0.5);
        // δ − (2δ − 1)/2 · 0.5 + fudge
        assert!((entropy_rhs(1.0, &m, 4.0) - (1.0 - 0.25 + entropy_fudge(4.0))).abs() < 1e-15);
        let mut heavy = m.clone();
        heavy.insert(1, 0.9);
        assert!(entropy_rhs(1.0, &m, 4.0) - entropy_rhs(1.0, &heavy, 4.0) >= 0.5 * 0.4 - 1e-12);
    }

    #[test]
    fn entropy_of_one_closed_geodesic_is_small() {
        let g = GroupSpec::modular();
        let mu = geodesic_measure(&g, &census8()[10..11], 40).unwrap();
        let chk = entropy_bound_check(&g, &mu, 4.0, 6, 0.5, &EntropyOptions::default()).unwrap();
        assert!(chk.lhs.abs() < 0.15, "{chk:?}");
        assert!(chk.rhs > 0.0 && chk.pass);
    }

    #[test]
    fn separated_count_sanity_on_periodic_points() {
        // about 2000 periodic points of the Modular census at T = 8
        let g = GroupSpec::modular();
        let mu = geodesic_measure(&g, census8(), 2).unwrap();
        let pts = mu.resample(2000);
        let metric = QuotientMetric::new(&g, 8.0).unwrap();
        let s = separated_count_quotient(&metric, &pts, 6, 0.5).unwrap();
        let rate = (s as f64).ln() / 6.0;
        assert!((0.5..=1.4).contains(&rate), "{s} → {rate}");
        // the quotient count never exceeds the count on G
        assert!(s <= separated_count(&pts, 6, 0.5));
    }

    #[test]
    fn covering_rejects_large_n() {
        let g = GroupSpec::modular();
        assert!(matches!(
            covering_number_experiment(&g, 4.0, 9, 10, &CoveringOptions::default()),
            Err(GeoError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn birkhoff_average_of_a_constant() {
        let g = GroupSpec::modular();
        assert_eq!(birkhoff_average(&g, &generic_frame(), 10.0, 0.1, &TestFunction::Constant(2.5)).unwrap(), 2.5);
    }

    #[test]
    fn birkhoff_cusp_mass_matches_the_area_value() {
        let g = GroupSpec::modular();
        let v = birkhoff_average(&g, &generic_frame(), 2e4, TRAJECTORY_STEP, &TestFunction::CuspIndicator { y: 2.0 }).unwrap();
        assert!((v - 3.0 / (2.0 * std::f64::consts::PI)).abs() < 0.05, "{v}");
    }

    #[test]
    fn resampling_respects_weights() {
        let fs: Vec<Frame> = (0..4).map(|k| Frame::identity(2).flow(k as f64)).collect();
        let ws = [5.0, 1.0, 1.0, 1.0];
        let mu = EmpiricalMeasure::new(fs.iter().copied().zip(ws).collect(), Provenance::Custom).unwrap();
        // quantiles 1/6, 1/2, 5/6 against cumulative weights 5/8, 3/4, 7/8, 1
        assert_eq!(mu.resample(3), vec![fs[0], fs[0], fs[2]]);
        assert_eq!(mu.resample(10).len(), 4);
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!(TestFunction::parse("cusp", 2.0).unwrap(), TestFunction::CuspIndicator { y: 2.0 });
        assert_eq!(TestFunction::parse("const:0.5", 2.0).unwrap(), TestFunction::Constant(0.5));
        assert_eq!(
            TestFunction::parse("bump:0.3", 1.0).unwrap(),
            TestFunction::Bump { center: Complex64::new(0.0, 1.0), radius: 0.3 }
        );
        let b = TestFunction::parse("bump:0,2,0.5", 1.0).unwrap();
        let g = GroupSpec::modular();
        assert_eq!(b.eval_reduced(&g, Complex64::new(0.0, 2.0)), 1.0);
        assert_eq!(b.eval_reduced(&g, Complex64::new(0.0, 4.0)), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn average_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, start in 0usize..150) {
            let g = GroupSpec::modular();
            let mu = geodesic_measure(&g, &census8()[start..start + 5], 5).unwrap();
            let f1 = TestFunction::HeightPower { y: 3.0, sigma: 0.5 };
            let f2 = TestFunction::CuspIndicator { y: 1.5 };
            let lhs: f64 = mu.samples.iter().map(|(fr, w)| w * (a * f1.eval(&g, fr).unwrap() + b * f2.eval(&g, fr).unwrap())).sum::<f64>() / mu.total_weight;
            let rhs = a * average(&g, &mu, &f1).unwrap() + b * average(&g, &mu, &f2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn measures_are_normalized(start in 0usize..150, len in 1usize..30, rate in 1usize..12) {
            let g = GroupSpec::modular();
            let end = (start + len).min(census8().len());
            let mu = geodesic_measure(&g, &census8()[start..end], rate).unwrap();
            prop_assert!((mu.total_weight - 1.0).abs() < 1e-12);
        }
    }
}
