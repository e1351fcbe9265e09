use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use nucstab::io::{self, AnalyzeOptions, InstanceFile};
use nucstab::model::{self, PlantSpec, QRole};
use nucstab::selftest;
use nucstab::stability::StabilityReport;
use nucstab::Error;

/// Stability analysis for nuclear-norm-regularized convex programs.
#[derive(Parser)]
#[command(name = "nucstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check RCQ, SOSC and SRCQ at a KKT point and optionally probe calmness.
    ///
    /// Exit codes: 0 consistent, 1 bad input, 2 theorem inconsistency,
    /// 3 inconclusive verdict, 4 RCQ fails.
    Analyze {
        path: PathBuf,
        /// Run the perturbation experiment.
        #[arg(long)]
        calmness: bool,
        #[arg(long, num_args = 1.., default_values_t = vec![1e-2, 1e-3, 1e-4])]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solver tolerance on the KKT residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an instance around a chosen KKT point.
    Plant {
        /// m n d e
        #[arg(long, num_args = 4, value_names = ["M", "N", "D", "E"])]
        dims: Vec<usize>,
        /// Sizes of the index sets a b1 b2 b3.
        #[arg(long, num_args = 4, value_names = ["A", "B1", "B2", "B3"])]
        counts: Vec<usize>,
        /// Singular values above 1 (one per index in a).
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        sigma: Vec<f64>,
        /// Singular values of W strictly inside (0, 1) (one per index in b2).
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        wspec: Vec<f64>,
        /// One letter per constraint row: z(ero), a(ctive), i(nactive), d(egenerate), f(ree).
        #[arg(long, default_value = "")]
        qpattern: String,
        #[arg(long, value_enum, default_value_t = FMapArg::Identity)]
        fmap: FMapArg,
        #[arg(long, value_enum, default_value_t = AMapArg::Gaussian)]
        amap: AMapArg,
        #[arg(long, value_enum, default_value_t = FramesArg::Identity)]
        frames: FramesArg,
        /// Mix the b block of W with a random rotation.
        #[arg(long)]
        mix_w: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant suites.
    Selftest {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FMapArg {
    Identity,
    Gaussian,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum AMapArg {
    Gaussian,
    Zero,
    Redundant,
}

#[derive(Clone, Copy, ValueEnum)]
enum FramesArg {
    Identity,
    Random,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Level {
    Fast,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { path, calmness, radii, trials, seed, tol, out } => {
            let opts = AnalyzeOptions { seed, calmness, radii, trials, tol };
            analyze(&path, &opts, out.as_deref())
        }
        Command::Plant { dims, counts, sigma, wspec, qpattern, fmap, amap, frames, mix_w, seed, out } => {
            let spec = plant_spec(&dims, &counts, sigma, wspec, &qpattern, fmap, amap, frames, mix_w);
            spec.and_then(|spec| plant(&spec, seed, out.as_deref())).map(|_| ExitCode::SUCCESS)
        }
        Command::Selftest { level } => Ok(run_selftest(level)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn analyze(path: &Path, opts: &AnalyzeOptions, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = InstanceFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = match io::analyze(&file, opts) {
        Ok(r) => r,
        Err(Error::RcqViolated { witness }) => {
            println!("RCQ fails: y = {witness:?} satisfies A^T y = 0 and y in N_Q(A X - b)");
            return Ok(ExitCode::from(4));
        }
        Err(e) => return Err(e.into()),
    };
    print_summary(&report.report);
    let json = report.to_json();
    match out {
        Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    let r = &report.report;
    Ok(if r.has_inconsistency() {
        ExitCode::from(2)
    } else if r.has_inconclusive() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn verdict(h: Option<bool>) -> &'static str {
    match h {
        Some(true) => "holds",
        Some(false) => "fails",
        None => "inconclusive",
    }
}

fn print_summary(r: &StabilityReport) {
    let rows = [
        ("RCQ", &r.rcq),
        ("primal SOSC", &r.sosc_primal),
        ("dual SRCQ", &r.srcq_dual),
        ("primal SRCQ", &r.srcq_primal),
        ("dual SOSC", &r.sosc_dual),
    ];
    for (name, c) in rows {
        eprintln!("{name:<12} {:<13} ({:?})", verdict(c.holds), c.method);
    }
    let flag = |f: Option<bool>| match f {
        Some(true) => "consistent",
        Some(false) => "INCONSISTENT",
        None => "undecided",
    };
    eprintln!("primal SOSC vs dual SRCQ: {}", flag(r.thm51_consistent));
    eprintln!("dual SOSC vs primal SRCQ: {}", flag(r.thm52_consistent));
    eprintln!("conditions vs calmness:   {}", flag(r.thm53_consistent));
    if let Some(c) = &r.calmness {
        eprintln!("calmness: kappa_hat {:.3e}, ratio variation {:.2}, solvable {:?}", c.kappa_hat, c.variation, c.solvable_fraction);
    }
}

#[allow(clippy::too_many_arguments)]
fn plant_spec(
    dims: &[usize],
    counts: &[usize],
    sigma: Vec<f64>,
    wspec: Vec<f64>,
    qpattern: &str,
    fmap: FMapArg,
    amap: AMapArg,
    frames: FramesArg,
    mix_w: bool,
) -> anyhow::Result<PlantSpec> {
    let (m, n, d, e) = (dims[0], dims[1], dims[2], dims[3]);
    let q_roles = qpattern
        .chars()
        .map(QRole::from_char)
        .collect::<nucstab::Result<Vec<_>>>()?;
    if q_roles.len() != e {
        bail!("--qpattern has {} letters but e = {e}", q_roles.len());
    }
    let spec = PlantSpec {
        m,
        n,
        d,
        counts: [counts[0], counts[1], counts[2], counts[3]],
        sigma,
        w_interior: wspec,
        q_roles,
        fmap: match fmap {
            FMapArg::Identity => model::FMap::Identity,
            FMapArg::Gaussian => model::FMap::Gaussian,
            FMapArg::Zero => model::FMap::Zero,
        },
        amap: match amap {
            AMapArg::Gaussian => model::AMap::Gaussian,
            AMapArg::Zero => model::AMap::Zero,
            AMapArg::Redundant => model::AMap::Redundant,
        },
        frames: match frames {
            FramesArg::Identity => model::Frames::Identity,
            FramesArg::Random => model::Frames::Random,
        },
        mix_w,
    };
    spec.validate()?;
    Ok(spec)
}

fn plant(spec: &PlantSpec, seed: u64, out: Option<&Path>) -> anyhow::Result<()> {
    let (inst, point) = model::plant_instance(spec, seed)?;
    let mut file = InstanceFile::from_instance(&inst, Some(&point));
    file.metadata.insert("seed".into(), seed.into());
    if spec.has_sd_block() {
        file.metadata.insert("sd_block present".into(), true.into());
    }
    let json = file.to_json();
    match out {
        Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run_selftest(level: Level) -> ExitCode {
    let outcomes = match level {
        Level::Fast => selftest::run_fast(),
        Level::Full => {
            let mut out = vec![selftest::worked_examples()];
            out.extend(selftest::run_all(&selftest::SuiteConfig::full()));
            out
        }
    };
    for o in &outcomes {
        println!("{}", o.line());
    }
    match outcomes.iter().find(|o| !o.passed) {
        Some(o) => {
            println!("first failure: {}: {}", o.title, o.detail);
            ExitCode::from(1)
        }
        None => {
            println!("all {} suites pass", outcomes.len());
            ExitCode::SUCCESS
        }
    }
}
