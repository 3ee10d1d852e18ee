//! `magnon`: parameter derivation, simulation, sweeps, Wigner functions and
//! the validation suite.
//!
//! Exit codes: 0 success, 1 runtime or numerical failure, 2 configuration
//! error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magnon_core::experiments::{run_scenario, run_wigner, RunConfig, Scenario};
use magnon_core::lindblad::ModelKind;
use magnon_core::observables::GridSpec;
use magnon_core::params::check_regime;
use magnon_core::validate::{run_suite, Fixture};
use magnon_core::{derive, Error};

#[derive(Parser, Debug)]
#[command(
    name = "magnon",
    version,
    about = "Magnon squeezing near the Rabi critical point"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the derived parameters and regime warnings.
    DeriveParams {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Integrate one model and write its trajectory CSV and manifest.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Model to integrate.
        #[arg(long, value_enum, default_value = "rabi")]
        model: ModelArg,
    },
    /// Run the scenario named in the config (fig2 to fig5).
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Worker threads.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
    /// Wigner function of one run at maximum squeezing or a given time.
    Wigner {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Model to integrate.
        #[arg(long, value_enum, default_value = "rabi")]
        model: ModelArg,
        /// Output time in ns (nearest grid point); default is the time of
        /// maximum squeezing.
        #[arg(long)]
        time_ns: Option<f64>,
        /// Half-width of the square phase-space window.
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Run the built-in oracle and invariant suite.
    Validate {
        /// Inject a deliberate fault to exercise the suite.
        #[arg(long, value_enum)]
        fixture: Option<FixtureArg>,
        /// Print JSON instead of text lines.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON config file; the built-in operating point when omitted.
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set system.kappa=1.0`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory [default: config `output_dir`, then $MAGNON_OUTPUT_DIR, then ./magnon-out].
    #[arg(long = "out", value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Full,
    Rabi,
    Effective,
    Quadratic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Full => ModelKind::Full,
            ModelArg::Rabi => ModelKind::Rabi,
            ModelArg::Effective => ModelKind::Effective,
            ModelArg::Quadratic => ModelKind::Quadratic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureArg {
    RateSignFlip,
    UnderTruncation,
}

impl From<FixtureArg> for Fixture {
    fn from(f: FixtureArg) -> Self {
        match f {
            FixtureArg::RateSignFlip => Fixture::RateSignFlip,
            FixtureArg::UnderTruncation => Fixture::UnderTruncation,
        }
    }
}

fn load(args: &ConfigArgs) -> Result<RunConfig, Error> {
    let cfg = match &args.config {
        Some(path) => RunConfig::from_file(path, &args.overrides)?,
        None => RunConfig::from_json_str("{}", &args.overrides)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig, args: &OutputArgs) -> PathBuf {
    cfg.resolve_output_dir(args.out.as_deref())
}

fn derive_params(args: &ConfigArgs, json: bool) -> Result<(), Error> {
    let cfg = load(args)?;
    let d = derive(&cfg.system)?;
    let warnings = check_regime(&d, &cfg.system);
    if json {
        let doc = serde_json::json!({ "derived": d, "warnings": warnings });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
        return Ok(());
    }
    let rows = [
        ("Delta_q/2pi", d.delta_cq, "MHz"),
        ("Delta_m/2pi", d.delta_cm, "MHz"),
        ("nu_q", d.nu_q, "MHz"),
        ("nu_m", d.nu_m, "MHz"),
        ("G/2pi", d.jc_coupling, "MHz"),
        ("G/2pi (formula)", d.jc_coupling_formula, "MHz"),
        ("g/2pi", d.rabi_coupling, "MHz"),
        ("delta_m/2pi", d.delta_m, "MHz"),
        ("delta_q/2pi", d.delta_q, "MHz"),
        ("Delta_12/2pi", d.delta_12, "MHz"),
        ("g_c", d.g_c, ""),
        ("zeta", d.zeta, ""),
        ("nbar_m", d.nbar_m, ""),
        ("nbar_q", d.nbar_q, ""),
    ];
    for (k, v, unit) in rows {
        println!("{k:<18} {v:>14.6} {unit}");
    }
    for w in warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn simulate(config: &ConfigArgs, output: &OutputArgs, model: ModelArg) -> Result<(), Error> {
    let mut cfg = load(config)?;
    cfg.scenario = Scenario::Single {
        model: model.into(),
    };
    let dir = output_dir(&cfg, output);
    let out = run_scenario(&cfg, &dir, 1)?;
    report(&out.files, &dir);
    for r in &out.runs {
        println!(
            "{}: S_max = {:.4} dB at t = {} ns",
            r.spec.label, r.max.s_max_db, r.max.t_opt_ns
        );
    }
    Ok(())
}

fn sweep(config: &ConfigArgs, output: &OutputArgs, jobs: usize) -> Result<(), Error> {
    let cfg = load(config)?;
    let dir = output_dir(&cfg, output);
    let out = run_scenario(&cfg, &dir, jobs)?;
    report(&out.files, &dir);
    Ok(())
}

fn report(files: &[PathBuf], dir: &Path) {
    println!("wrote {} files to {}", files.len(), dir.display());
}

fn wigner(
    config: &ConfigArgs,
    output: &OutputArgs,
    model: ModelArg,
    time_ns: Option<f64>,
    extent: f64,
    points: usize,
) -> Result<(), Error> {
    let cfg = load(config)?;
    let grid = GridSpec {
        re_min: -extent,
        re_max: extent,
        im_min: -extent,
        im_max: extent,
        points,
    };
    let dir = output_dir(&cfg, output);
    let (w, t, path) = run_wigner(&cfg, model.into(), &grid, time_ns, &dir)?;
    for m in &w.warnings {
        eprintln!("warning: {m}");
    }
    println!(
        "Wigner function at t = {t} ns written to {}",
        path.display()
    );
    Ok(())
}

fn validate(fixture: Option<FixtureArg>, json: bool) -> bool {
    let results = run_suite(fixture.map(Into::into));
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&results).expect("serializable")
        );
    } else {
        for r in &results {
            println!("{r}");
        }
    }
    results.iter().all(|r| r.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::DeriveParams { config, json } => derive_params(config, *json),
        Command::Simulate {
            config,
            output,
            model,
        } => simulate(config, output, *model),
        Command::Sweep {
            config,
            output,
            jobs,
        } => sweep(config, output, *jobs as usize),
        Command::Wigner {
            config,
            output,
            model,
            time_ns,
            extent,
            points,
        } => wigner(config, output, *model, *time_ns, *extent, *points),
        Command::Validate { fixture, json } => {
            return if validate(*fixture, *json) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
