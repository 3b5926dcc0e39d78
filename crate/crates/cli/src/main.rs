mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_file, ConfigError, Resolved, COMMON_KEYS};

#[derive(Parser, Debug)]
#[command(name = "geolab", version, about = "Closed-geodesic and cusp-excursion experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key=value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores); also read from GEOLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for JSON, CSV and SVG files.
    #[arg(long = "out", global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on enumerated entries.
    #[arg(long, global = true)]
    budget: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate closed geodesics up to length T.
    Census {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        /// Primitive classes only.
        #[arg(long)]
        primitive: bool,
    },
    /// Estimate the critical exponent from orbit counts.
    Delta {
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        /// orbit-count | annulus
        #[arg(long)]
        method: Option<String>,
    },
    /// Cusp-excursion profiles of the census.
    Excursions {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long = "Y")]
        y: Option<f64>,
    },
    /// Census averages of a test function against the reference value.
    Equidistribute {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        /// one | const:c | cusp | height[:σ] | bump[:r | :x,y,r]
        #[arg(long)]
        f: Option<String>,
        #[arg(long = "Y")]
        y: Option<f64>,
    },
    /// Growth rates of classes spending a fraction β of their time in the cusp.
    BetaTails {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long = "Y")]
        y: Option<f64>,
        /// Comma-separated β values.
        #[arg(long)]
        betas: Option<String>,
    },
    /// Separated-set growth against the cusp-mass entropy bound.
    EntropyCheck {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long = "Y")]
        y: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Keep only classes with at least this cusp fraction at Y.
        #[arg(long)]
        min_cusp_fraction: Option<f64>,
    },
    /// Experiments on the regular cover given by a homomorphism.
    Cover {
        #[arg(long)]
        group: Option<String>,
        /// `0`, `a`, `a,b`, `T%3`, …
        #[arg(long)]
        hom: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long = "Y")]
        y: Option<f64>,
        /// delta | equi | mass
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        f: Option<String>,
    },
    /// Bowen-ball covering exponents per cusp itinerary.
    CoveringExponents {
        #[arg(long)]
        group: Option<String>,
        #[arg(long = "Y")]
        y: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        sample_size: Option<usize>,
    },
}

fn opt<T: ToString>(key: &str, v: &Option<T>) -> Option<(String, String)> {
    v.as_ref().map(|v| (key.to_string(), v.to_string()))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Census { .. } => "census",
            Command::Delta { .. } => "delta",
            Command::Excursions { .. } => "excursions",
            Command::Equidistribute { .. } => "equidistribute",
            Command::BetaTails { .. } => "beta-tails",
            Command::EntropyCheck { .. } => "entropy-check",
            Command::Cover { .. } => "cover",
            Command::CoveringExponents { .. } => "covering-exponents",
        }
    }

    /// Command-specific keys with their defaults; `None` defaults are
    /// resolved from the group.
    fn defaults(&self) -> &'static [(&'static str, Option<&'static str>)] {
        match self {
            Command::Census { .. } => &[("T", Some("10")), ("primitive", Some("false"))],
            Command::Delta { .. } => &[("rmin", None), ("rmax", None), ("method", Some("orbit-count"))],
            Command::Excursions { .. } => &[("T", Some("8")), ("Y", Some("2"))],
            Command::Equidistribute { .. } => &[("T", Some("10")), ("f", Some("cusp")), ("Y", Some("2"))],
            Command::BetaTails { .. } => &[("T", Some("10")), ("Y", Some("2")), ("betas", Some("0.2,0.4,0.6"))],
            Command::EntropyCheck { .. } => &[
                ("T", Some("10")),
                ("Y", Some("4")),
                ("n", Some("6")),
                ("eps", Some("0.5")),
                ("min_cusp_fraction", Some("0")),
            ],
            Command::Cover { .. } => &[
                ("hom", Some("a")),
                ("T", Some("14")),
                ("Y", Some("4")),
                ("experiment", Some("delta")),
                ("f", Some("bump")),
            ],
            Command::CoveringExponents { .. } => &[("Y", Some("4")), ("N", Some("6")), ("sample_size", Some("4000"))],
        }
    }

    fn default_group(&self) -> &'static str {
        match self {
            Command::Cover { .. } => "schottky:default",
            _ => "modular",
        }
    }

    fn flags(&self) -> Vec<(String, String)> {
        let v = match self {
            Command::Census { group, t, primitive } => {
                vec![opt("group", group), opt("T", t), primitive.then(|| ("primitive".into(), "true".into()))]
            }
            Command::Delta { group, rmin, rmax, method } => {
                vec![opt("group", group), opt("rmin", rmin), opt("rmax", rmax), opt("method", method)]
            }
            Command::Excursions { group, t, y } => vec![opt("group", group), opt("T", t), opt("Y", y)],
            Command::Equidistribute { group, t, f, y } => {
                vec![opt("group", group), opt("T", t), opt("f", f), opt("Y", y)]
            }
            Command::BetaTails { group, t, y, betas } => {
                vec![opt("group", group), opt("T", t), opt("Y", y), opt("betas", betas)]
            }
            Command::EntropyCheck { group, t, y, n, eps, min_cusp_fraction } => vec![
                opt("group", group),
                opt("T", t),
                opt("Y", y),
                opt("n", n),
                opt("eps", eps),
                opt("min_cusp_fraction", min_cusp_fraction),
            ],
            Command::Cover { group, hom, t, y, experiment, f } => vec![
                opt("group", group),
                opt("hom", hom),
                opt("T", t),
                opt("Y", y),
                opt("experiment", experiment),
                opt("f", f),
            ],
            Command::CoveringExponents { group, y, n, sample_size } => {
                vec![opt("group", group), opt("Y", y), opt("N", n), opt("sample_size", sample_size)]
            }
        };
        v.into_iter().flatten().collect()
    }
}

fn resolve(cli: &Cli) -> Result<Resolved, ConfigError> {
    let cmd = &cli.command;
    let mut allowed: Vec<&str> = COMMON_KEYS.to_vec();
    allowed.extend(cmd.defaults().iter().map(|(k, _)| *k));

    let mut r = Resolved::default();
    r.set("group", cmd.default_group());
    r.set("seed", "0");
    r.set("threads", "0");
    r.set("output_dir", "geolab-out");
    r.set("budget", geolab::group::DEFAULT_BUDGET.to_string());
    for (k, v) in cmd.defaults() {
        if let Some(v) = v {
            r.set(k, *v);
        }
    }
    if let Some(path) = &cli.common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        r.layer(parse_file(&text, &allowed)?);
    }
    if let Ok(t) = std::env::var("GEOLAB_THREADS") {
        r.set("threads", t);
    }
    let c = &cli.common;
    r.layer(
        [
            opt("threads", &c.threads),
            c.output_dir.as_ref().map(|p| ("output_dir".to_string(), p.display().to_string())),
            opt("seed", &c.seed),
            opt("budget", &c.budget),
        ]
        .into_iter()
        .flatten(),
    );
    r.layer(cmd.flags());
    Ok(r)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let resolved = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(commands::EXIT_CONFIG);
        }
    };
    ExitCode::from(commands::run(cli.command.name(), resolved))
}
