use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cuntz_core::catalog::witness_catalog;
use cuntz_core::error::{Error, Result};
use cuntz_core::report::{emit_reports, run_scenario_focused, Focus, Format, Report};
use cuntz_core::scenario::{load_scenario, to_json, Scenario};

#[derive(Parser)]
#[command(name = "cuntz", version, about = "Extension analysis for product automorphisms of Cuntz algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Telescope depth K (overrides the scenario).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Highest matrix-unit level to verify (overrides the scenario).
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Verification tolerance (overrides the scenario).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis that applies to each scenario.
    Analyze { files: Vec<PathBuf> },
    /// Innerness of a product automorphism, or the inner extension formula.
    Inner { files: Vec<PathBuf> },
    /// Extension verdict with the localization classification.
    Localize { files: Vec<PathBuf> },
    /// Extension to the diagonal for permutation sequences.
    Diagonal { files: Vec<PathBuf> },
    /// Compare a given unitary's endomorphism with the automorphism.
    Verify { files: Vec<PathBuf> },
    /// Peel a telescoped unitary level by level.
    Peel { files: Vec<PathBuf> },
    /// Run the built-in witness catalog.
    Witnesses {
        /// Also write each catalog scenario as JSON into this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn apply_overrides(s: &mut Scenario, o: &Opts) {
    if let Some(d) = o.depth {
        s.params.depth = d;
    }
    if let Some(k) = o.k_max {
        s.params.k_max = k;
    }
    if let Some(t) = o.tol {
        s.params.tolerances.verification = t;
    }
}

fn require_kind(s: &Scenario, allowed: &[&str], cmd: &str) -> Result<()> {
    if allowed.contains(&s.kind.name()) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "scenario {} has kind {}, which `{cmd}` does not accept",
            s.name,
            s.kind.name()
        )))
    }
}

fn run_one(mut s: Scenario, cmd: &Command, opts: &Opts) -> Result<Report> {
    apply_overrides(&mut s, opts);
    let focus = match cmd {
        Command::Inner { .. } => {
            require_kind(&s, &["uhf_product", "inner"], "inner")?;
            Focus::Innerness
        }
        Command::Localize { .. } => {
            require_kind(&s, &["uhf_product"], "localize")?;
            Focus::Extension
        }
        Command::Diagonal { .. } => {
            require_kind(&s, &["diagonal_product"], "diagonal")?;
            Focus::All
        }
        Command::Verify { .. } => {
            require_kind(&s, &["verify"], "verify")?;
            Focus::All
        }
        Command::Peel { .. } => {
            require_kind(&s, &["peel"], "peel")?;
            Focus::All
        }
        Command::Analyze { .. } | Command::Witnesses { .. } => Focus::All,
    };
    let report = run_scenario_focused(&s, focus)?;
    if report.expected_match == Some(false) {
        return Err(Error::InternalConsistency(format!(
            "scenario {} produced {:?}, not its recorded verdict",
            s.name,
            report.verdict()
        )));
    }
    Ok(report)
}

fn dump_catalog(dir: &Path, catalog: &[Scenario]) -> Result<()> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for s in catalog {
        let path = dir.join(format!("{}.json", s.name));
        let mut text = to_json(s)?;
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let scenarios: Vec<Scenario> = match &cli.command {
        Command::Witnesses { dump } => {
            let catalog = witness_catalog();
            if let Some(dir) = dump {
                dump_catalog(dir, &catalog)?;
            }
            catalog
        }
        Command::Analyze { files }
        | Command::Inner { files }
        | Command::Localize { files }
        | Command::Diagonal { files }
        | Command::Verify { files }
        | Command::Peel { files } => {
            if files.is_empty() {
                return Err(Error::Validation("no scenario files given".into()));
            }
            files
                .iter()
                .map(|f| load_scenario(f))
                .collect::<Result<_>>()?
        }
    };
    let reports = scenarios
        .into_iter()
        .map(|s| run_one(s, &cli.command, &cli.opts))
        .collect::<Result<Vec<_>>>()?;
    let format = match cli.opts.format {
        OutFormat::Text => Format::Text,
        OutFormat::Machine => Format::Machine,
    };
    let text = emit_reports(&reports, format)?;
    match &cli.opts.out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InternalConsistency(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
