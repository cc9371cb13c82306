//! `klshell` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klshell::model_file::ModelFile;
use klshell::presets::{preset, NAMES};
use klshell::runner::{compare, run, write_artifacts, write_comparison};
use klshell::ShellError;

#[derive(Parser)]
#[command(name = "klshell", version, about = "Nonlinear isogeometric Kirchhoff-Love shell analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the equilibrium path of one model.
    Run(RunArgs),
    /// Run all four constitutive models with identical settings.
    Compare(RunArgs),
    /// Print a preset model file as JSON.
    Preset {
        name: String,
        #[arg(long)]
        thickness: Option<f64>,
    },
    /// List the available presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Model file (JSON). Omit when using --preset.
    model: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    preset: Option<String>,
    /// Preset thickness variant.
    #[arg(long, requires = "preset")]
    thickness: Option<f64>,
    /// Constitutive model: Da, D0, D1 or D2.
    #[arg(long)]
    constitutive: Option<String>,
    /// Arc-length variant: linearized, cylindrical or modified_riks.
    #[arg(long)]
    variant: Option<String>,
    /// Maximum number of increments (arc-length) or number of load steps (Newton).
    #[arg(long)]
    increments: Option<usize>,
    /// Relative force tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for element assembly.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

enum Failure {
    Input(String),
    Solver(String),
    Other(String),
}

impl From<ShellError> for Failure {
    fn from(e: ShellError) -> Self {
        match e {
            ShellError::Io(e) => Failure::Other(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

fn load(args: &RunArgs) -> Result<ModelFile, Failure> {
    let mut file = match (&args.model, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            ModelFile::from_json(&text)?
        }
        (None, Some(name)) => preset(name, args.thickness)?,
        (None, None) => return Err(Failure::Input("give a model file or --preset".into())),
    };
    if let Some(c) = &args.constitutive {
        file.constitutive = c.clone();
    }
    if let Some(v) = &args.variant {
        file.solver.variant = v.clone();
    }
    if let Some(n) = args.increments {
        file.solver.max_increments = n;
        file.solver.increments = n;
    }
    if let Some(t) = args.tol {
        file.solver.tolerances.force = t;
    }
    file.validate()?;
    file.constitutive_model()?;
    Ok(file)
}

fn set_threads(n: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Other(e.to_string()))?;
    }
    Ok(())
}

fn fmt_monitors(names: &[String], values: &[f64]) -> String {
    names.iter().zip(values).map(|(n, v)| format!("{n} = {v:.6e}")).collect::<Vec<_>>().join(", ")
}

fn run_cmd(args: &RunArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let file = load(args)?;
    let a = run(&file)?;
    write_artifacts(&a, &args.out)?;
    let r = &a.report;
    println!(
        "{} {:?}: {} increments, {} iterations, {:.2} s, {} equations",
        r.constitutive, r.outcome, r.increments, r.total_iterations, r.seconds, r.equations
    );
    if let Some(p) = r.path.last() {
        println!("LPF {:.6}: {}", p.lpf, fmt_monitors(&r.monitors, &p.monitors));
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    println!("artifacts in {}", args.out.display());
    if r.completed() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{:?} (partial path written to {})", r.outcome, path_of(&args.out))))
    }
}

fn path_of(dir: &Path) -> String {
    dir.join("path.csv").display().to_string()
}

fn compare_cmd(args: &RunArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let file = load(args)?;
    let c = compare(&file)?;
    write_comparison(&c, &args.out)?;
    let names: Vec<String> = file.monitors.iter().map(|m| m.name.clone()).collect();
    let mut all = true;
    for s in &c.summaries {
        let rel: Vec<String> = s.relative_to_da.iter().map(|v| format!("{v:+.3e}")).collect();
        println!(
            "{:>2} {:?}: {} increments, {:.2} s (x{:.2} of D0), {} | rel. to Da [{}]",
            s.constitutive,
            s.outcome,
            s.increments,
            s.seconds,
            s.time_ratio_to_d0.unwrap_or(f64::NAN),
            fmt_monitors(&names, &s.final_monitors),
            rel.join(", ")
        );
        if let Some(e) = &s.error {
            eprintln!("{}: {e}", s.constitutive);
        }
        all &= s.error.is_none() && s.outcome == klshell::continuation::Outcome::Completed;
    }
    println!("artifacts in {}", args.out.display());
    if all {
        Ok(())
    } else {
        Err(Failure::Solver("not every model completed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Preset { name, thickness } => preset(name, *thickness).map(|f| println!("{}", f.to_json())).map_err(Failure::from),
        Command::Presets => {
            NAMES.iter().for_each(|n| println!("{n}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
