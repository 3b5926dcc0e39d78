//! The experiments behind each subcommand and the uniform exit codes.

use std::path::{Path, PathBuf};

use geolab::covers::{cover_delta, cover_equidistribution, mass_nonescape_check, CoverSpec};
use geolab::group::{census, GroupSpec};
use geolab::report::{format_float, svg_plot, Report, Table, Verdict};
use geolab::spectral::{default_window, estimate_delta, reference_delta, DeltaMethod};
use geolab::statistics::{
    beta_tail_counts, covering_number_experiment, entropy_bound_check, equidistribution_curve, geodesic_measure,
    profiled_census, CoveringOptions, EntropyOptions, TestFunction, SAMPLES_PER_UNIT,
};
use geolab::GeoError;
use serde_json::json;

use crate::config::{ConfigError, Resolved};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

/// Allowed gap between base and kernel exponents on a rank-1 or finite
/// quotient, and on higher-rank ℤ^k quotients.
const COVER_DELTA_TOL: f64 = 0.05;
const COVER_DELTA_TOL_HIGH_RANK: f64 = 0.07;
/// Tolerance of the `delta` verdict when the exponent is known.
const DELTA_TOL: f64 = 0.1;
/// Required margin above `r_max/2` for groups with cusps.
const BEARDON_MARGIN: f64 = 0.02;

#[derive(Debug)]
enum Failure {
    Config(String),
    Geo(GeoError),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<GeoError> for Failure {
    fn from(e: GeoError) -> Self {
        match e {
            GeoError::InvalidArgument(s) => Failure::Config(s),
            GeoError::UnsupportedGroup(s) => Failure::Config(format!("unsupported group: {s}")),
            e => Failure::Geo(e),
        }
    }
}

/// What a command produced besides its report.
struct Output {
    report: Report,
    svg: Option<String>,
    /// Extra `(file name, contents)` pairs.
    files: Vec<(String, String)>,
    /// Lines printed before the verdict line.
    lines: Vec<String>,
}

impl Output {
    fn new(report: Report) -> Self {
        Self { report, svg: None, files: Vec::new(), lines: Vec::new() }
    }
}

pub fn run(command: &str, cfg: Resolved) -> u8 {
    match execute(command, &cfg) {
        Ok(code) => code,
        Err(Failure::Config(s)) => {
            eprintln!("config error: {s}");
            EXIT_CONFIG
        }
        Err(Failure::Geo(GeoError::BudgetExceeded { cap })) => {
            eprintln!("budget exceeded: more than {cap} entries");
            EXIT_BUDGET
        }
        Err(Failure::Geo(e)) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
        Err(Failure::Io(s)) => {
            eprintln!("i/o error: {s}");
            EXIT_FAIL
        }
    }
}

fn execute(command: &str, cfg: &Resolved) -> Result<u8, Failure> {
    let threads: usize = cfg.get("threads")?;
    // a second build in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let mut spec = GroupSpec::preset(cfg.str("group")?)?;
    spec.budget = cfg.get("budget")?;
    let mut cfg = cfg.clone();
    let out = match command {
        "census" => cmd_census(&spec, &cfg)?,
        "delta" => {
            let (lo, hi) = default_window(&spec);
            for (k, v) in [("rmin", lo), ("rmax", hi)] {
                if !cfg.map.contains_key(k) {
                    cfg.set(k, format_float(v));
                }
            }
            cmd_delta(&spec, &cfg)?
        }
        "excursions" => cmd_excursions(&spec, &cfg)?,
        "equidistribute" => cmd_equidistribute(&spec, &cfg)?,
        "beta-tails" => cmd_beta_tails(&spec, &cfg)?,
        "entropy-check" => cmd_entropy(&spec, &cfg)?,
        "cover" => cmd_cover(spec, &cfg)?,
        "covering-exponents" => cmd_covering(&spec, &cfg)?,
        other => return Err(Failure::Config(format!("unknown command {other}"))),
    };
    finish(out, &cfg)
}

fn finish(mut out: Output, cfg: &Resolved) -> Result<u8, Failure> {
    out.report.config = Some(cfg.map.clone());
    let dir = PathBuf::from(cfg.str("output_dir")?);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let stem = out.report.experiment.clone();
    write(&dir, &format!("{stem}.json"), &out.report.to_json())?;
    write(&dir, &format!("{stem}.csv"), &out.report.table.to_csv())?;
    if let Some(svg) = &out.svg {
        write(&dir, &format!("{stem}.svg"), svg)?;
    }
    for (name, text) in &out.files {
        write(&dir, name, text)?;
    }
    for l in &out.lines {
        println!("{l}");
    }
    println!("{}", out.report.verdict_line());
    Ok(match out.report.verdict {
        Verdict::Fail => EXIT_FAIL,
        Verdict::Pass | Verdict::Info => EXIT_PASS,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
}

fn cmd_census(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let t: f64 = cfg.get("T")?;
    let c = census(spec, t, cfg.bool("primitive")?)?;
    let delta = reference_delta(spec)?;
    let count = c.geodesics.len();
    let main_term = (delta * t).exp() / (delta * t);
    let ratio = count as f64 / main_term;
    let mut jsonl = String::new();
    let mut table = Table::new(&["key", "length", "trace", "primitive", "power"]);
    for g in &c.geodesics {
        let key = spec.format_word(&g.class.key);
        let trace = g.trace.map_or("null".to_string(), format_float);
        jsonl.push_str(&format!(
            "{{\"key\":{},\"length\":{},\"trace\":{},\"primitive\":{},\"power\":{}}}\n",
            json!(key),
            format_float(g.length),
            trace,
            g.class.primitive,
            g.class.power
        ));
        table.push(vec![
            json!(key),
            json!(g.length),
            g.trace.map_or(serde_json::Value::Null, |x| json!(x)),
            json!(g.class.primitive),
            json!(g.class.power as u64),
        ]);
    }
    let report = Report::new("census", table, Verdict::Info)
        .param("T", t)
        .param("count", count as u64)
        .param("delta", delta)
        .param("ratio", ratio)
        .param("discarded", c.discarded as u64)
        .note("ratio = count / (exp(δT)/(δT))");
    let mut out = Output::new(report);
    out.files.push(("census.jsonl".into(), jsonl));
    out.lines.push(format!("count {count}"));
    out.lines.push(format!("ratio {}", format_float(ratio)));
    Ok(out)
}

fn cmd_delta(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let window = (cfg.get("rmin")?, cfg.get("rmax")?);
    let method = DeltaMethod::parse(cfg.str("method")?)?;
    let est = estimate_delta(spec, &spec.base_point(), window, method)?;
    let half = spec.r_max() as f64 / 2.0;
    let (verdict, rule) = match spec.delta_hint {
        Some(d) => (Verdict::from_bool((est.delta_hat - d).abs() <= DELTA_TOL), format!("|δ̂ − {d}| ≤ {DELTA_TOL}")),
        None if !spec.cusps.is_empty() => (
            Verdict::from_bool(est.delta_hat - half >= BEARDON_MARGIN && est.delta_hat < 1.0),
            format!("δ̂ − {half} ≥ {BEARDON_MARGIN} and δ̂ < 1"),
        ),
        None => (Verdict::Info, "none".to_string()),
    };
    let mut table = Table::new(&["r", "log_count"]);
    for &(r, l) in &est.points {
        table.push(vec![json!(r), json!(l)]);
    }
    let report = Report::new("delta", table, verdict)
        .param("delta_hat", est.delta_hat)
        .param("ci_low", est.ci_low)
        .param("ci_high", est.ci_high)
        .param("rule", rule);
    let mut out = Output::new(report);
    out.svg = Some(svg_plot("orbit counts", "r", "log N(r)", &[("log N".into(), est.points.clone())]));
    out.lines.push(format!("delta_hat {}", format_float(est.delta_hat)));
    Ok(out)
}

fn cmd_excursions(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let (t, y): (f64, f64) = (cfg.get("T")?, cfg.get("Y")?);
    let list = profiled_census(spec, t, y)?;
    let mut table = Table::new(&["key", "length", "excursions", "total_fraction", "max_height"]);
    for p in &list {
        let top = p.profile.excursions.iter().map(|e| e.max_height).fold(f64::NAN, f64::max);
        table.push(vec![
            json!(spec.format_word(&p.geodesic.class.key)),
            json!(p.geodesic.length),
            json!(p.profile.excursions.len() as u64),
            json!(p.profile.total_fraction),
            if top.is_nan() { serde_json::Value::Null } else { json!(top) },
        ]);
    }
    let mean = if list.is_empty() {
        0.0
    } else {
        list.iter().map(|p| p.profile.total_fraction).sum::<f64>() / list.len() as f64
    };
    let report = Report::new("excursions", table, Verdict::Info)
        .param("T", t)
        .param("Y", y)
        .param("count", list.len() as u64)
        .param("mean_fraction", mean);
    let mut out = Output::new(report);
    out.lines.push(format!("count {}", list.len()));
    out.lines.push(format!("mean_fraction {}", format_float(mean)));
    Ok(out)
}

fn cmd_equidistribute(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let (t, y): (f64, f64) = (cfg.get("T")?, cfg.get("Y")?);
    let f = TestFunction::parse(cfg.str("f")?, y)?;
    let grid: Vec<f64> = (0..4).map(|k| t - 3.0 + k as f64).filter(|&s| s > 0.0).collect();
    let curve = equidistribution_curve(spec, &grid, &f, SAMPLES_PER_UNIT)?;
    let series = vec![
        ("census average".to_string(), curve.points.iter().map(|p| (p.t, p.value)).collect()),
        ("reference".to_string(), curve.points.iter().map(|p| (p.t, curve.reference.value)).collect()),
    ];
    let mut out = Output::new(curve.report());
    out.svg = Some(svg_plot("equidistribution", "T", "average", &series));
    if let Some(p) = curve.points.last() {
        out.lines.push(format!("value {} reference {}", format_float(p.value), format_float(curve.reference.value)));
    }
    Ok(out)
}

fn cmd_beta_tails(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let r = beta_tail_counts(spec, cfg.get("T")?, cfg.get("Y")?, &cfg.list("betas")?)?;
    let series: Vec<(String, Vec<(f64, f64)>)> = r
        .tails
        .iter()
        .map(|b| (format!("β = {}", b.beta), b.fit.grid.iter().map(|&(t, c)| (t, c.max(1.0).ln())).collect()))
        .collect();
    let mut out = Output::new(r.report());
    out.svg = Some(svg_plot("β-tail counts", "T", "log count", &series));
    for b in &r.tails {
        out.lines.push(format!("beta {} rate {} bound {}", b.beta, format_float(b.fit.slope), format_float(b.bound)));
    }
    Ok(out)
}

fn cmd_entropy(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let (t, y): (f64, f64) = (cfg.get("T")?, cfg.get("Y")?);
    let b: f64 = cfg.get("min_cusp_fraction")?;
    let list: Vec<_> = if b > 0.0 {
        profiled_census(spec, t, y)?
            .into_iter()
            .filter(|p| p.profile.total_fraction >= b)
            .map(|p| p.geodesic)
            .collect()
    } else {
        census(spec, t, true)?.geodesics
    };
    let mu = geodesic_measure(spec, &list, SAMPLES_PER_UNIT)?;
    let check = entropy_bound_check(spec, &mu, y, cfg.get("n")?, cfg.get("eps")?, &EntropyOptions::default())?;
    let mut out = Output::new(check.report().param("classes", list.len() as u64));
    out.lines.push(format!("lhs {} rhs {}", format_float(check.lhs), format_float(check.rhs)));
    Ok(out)
}

fn cmd_cover(spec: GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let cover = CoverSpec::parse(spec, cfg.str("hom")?)?;
    let (t, y): (f64, f64) = (cfg.get("T")?, cfg.get("Y")?);
    let hom = cfg.str("hom")?.to_string();
    let out = match cfg.str("experiment")? {
        "delta" => {
            let tol = if cover.hom.rank() >= 2 && !cover.hom.is_finite() {
                COVER_DELTA_TOL_HIGH_RANK
            } else {
                COVER_DELTA_TOL
            };
            let r = cover_delta(&cover, default_window(&cover.base), DeltaMethod::OrbitCountFit, tol)?;
            let mut out = Output::new(r.report().param("hom", hom));
            out.lines.push(format!(
                "base {} kernel {} gap {}",
                format_float(r.base.delta_hat),
                format_float(r.kernel.delta_hat),
                format_float(r.gap())
            ));
            out
        }
        "equi" => {
            let f = TestFunction::parse(cfg.str("f")?, y)?;
            let grid: Vec<f64> = [t - 4.0, t - 2.0, t].into_iter().filter(|&s| s > 0.0).collect();
            let r = cover_equidistribution(&cover, &grid, &f)?;
            let mut out = Output::new(r.report().param("hom", hom));
            out.svg = Some(svg_plot(
                "cover equidistribution",
                "T",
                "average",
                &[("kernel census".to_string(), r.points.iter().map(|p| (p.t, p.value)).collect())],
            ));
            out
        }
        "mass" => {
            let grid: Vec<f64> = [t - 2.0, t - 1.0, t].into_iter().filter(|&s| s > 0.0).collect();
            match mass_nonescape_check(&cover, &grid, y, None) {
                Ok(r) => {
                    let mut out = Output::new(r.report().param("hom", hom));
                    out.lines.push(format!("beta0 {}", format_float(r.beta0)));
                    out
                }
                Err(GeoError::HypothesisNotMet(why)) => Output::new(
                    Report::new("cover-mass", Table::new(&["T", "kernel_count", "compact_mass"]), Verdict::Info)
                        .param("hom", hom)
                        .note(format!("hypothesis not met: {why}")),
                ),
                Err(e) => return Err(e.into()),
            }
        }
        other => return Err(Failure::Config(format!("unknown cover experiment {other:?} (delta | equi | mass)"))),
    };
    Ok(out)
}

fn cmd_covering(spec: &GroupSpec, cfg: &Resolved) -> Result<Output, Failure> {
    let r = covering_number_experiment(
        spec,
        cfg.get("Y")?,
        cfg.get("N")?,
        cfg.get("sample_size")?,
        &CoveringOptions::default(),
    )?;
    let series = vec![(
        "exponent".to_string(),
        r.trend.iter().map(|&(c, e)| (c as f64, e)).collect::<Vec<_>>(),
    )];
    let mut out = Output::new(r.report());
    out.svg = Some(svg_plot("covering exponents", "cusp blocks", "exponent", &series));
    Ok(out)
}
