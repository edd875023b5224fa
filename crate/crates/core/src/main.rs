use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wgm_blockade::model::{exceptional_angles, LossConvention};
use wgm_blockade::sweep::{
    parse_config, run_sweep, to_csv, to_json, Engine, SweepResult, SweepSpec,
};
use wgm_blockade::WgmError;

#[derive(Parser)]
#[command(name = "wgm", about = "Photon statistics of a scatterer-coupled Kerr microresonator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    IncludeEx,
    PaperLiteral,
}

impl ConventionArg {
    fn to_model(self) -> LossConvention {
        match self {
            ConventionArg::IncludeEx => LossConvention::IncludeExternal,
            ConventionArg::PaperLiteral => LossConvention::PaperLiteral,
        }
    }
}

#[derive(Args)]
struct Shared {
    /// Flat key-value config file (base.*, axes.*, engine, observables)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads (env WGM_JOBS overrides)
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the loss convention from the config
    #[arg(long, value_enum)]
    loss_convention: Option<ConventionArg>,
    /// Cap on Fock levels per mode for master-equation solves
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Semiclassical transmission spectrum T(delta)
    Transmission(Shared),
    /// Master-equation photon correlations g2, g3 and populations
    Correlation(Shared),
    /// Weak-drive analytic g2 estimate
    Weakdrive(Shared),
    /// Scatterer angles at which the mode coupling has an exceptional point
    EpLocate(EpLocateArgs),
    /// Run a sweep exactly as configured (engine taken from the config)
    Sweep(Shared),
}

#[derive(Args)]
struct EpLocateArgs {
    #[command(flatten)]
    shared: Shared,
    /// Odd branch indices l to report
    #[arg(long, default_value = "1,3,5,7")]
    l_values: String,
}

fn install_thread_pool(shared: &Shared) -> Result<(), WgmError> {
    let jobs = std::env::var("WGM_JOBS")
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| WgmError::ConfigParse(format!("WGM_JOBS: not an integer: {v:?}")))
        })
        .transpose()?
        .or(shared.jobs);
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| WgmError::ConfigParse(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Convenience subcommands imply the engine/observables; a config file only
/// needs to supply what it wants to override.
fn load_spec(shared: &Shared, implied: Option<(&str, &str)>) -> Result<SweepSpec, WgmError> {
    let mut text = match &shared.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    if let Some((engine, observables)) = implied {
        let snapshot = text.clone();
        let has = move |prefix: &str| {
            snapshot.lines().any(|l| {
                l.split('#').next().unwrap_or("").trim_start().starts_with(prefix)
            })
        };
        if !has("engine") {
            text.push_str(&format!("\nengine = {engine}\n"));
        }
        if !has("observables") {
            text.push_str(&format!("observables = {observables}\n"));
        }
        if !has("axes.") {
            text.push_str("axes.0.name = delta\naxes.0.start = -6\naxes.0.stop = 6\naxes.0.count = 241\n");
        }
    }
    let mut spec = parse_config(&text)?;
    if let Some(conv) = shared.loss_convention {
        spec.base.loss_convention = conv.to_model();
    }
    if let Some(nmax) = shared.nmax {
        spec.truncation.n_cap = nmax;
        spec.truncation.n_start = spec.truncation.n_start.min(nmax);
    }
    spec.validate()?;
    Ok(spec)
}

fn write_out(shared: &Shared, text: &str) -> Result<(), WgmError> {
    match &shared.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_result(shared: &Shared, result: &SweepResult) -> Result<ExitCode, WgmError> {
    let text = match shared.format {
        FormatArg::Csv => to_csv(result),
        FormatArg::Json => to_json(result),
    };
    write_out(shared, &text)?;
    let failed = result.failed_fraction();
    if failed > 0.10 {
        eprintln!("warning: {:.1}% of grid points failed", failed * 100.0);
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn run_engine_command(shared: &Shared, implied: Option<(&str, &str)>) -> Result<ExitCode, WgmError> {
    install_thread_pool(shared)?;
    let spec = load_spec(shared, implied)?;
    if spec.engine == Engine::Lindblad {
        let h = wgm_blockade::model::build_hamiltonian(&spec.base, 3)?;
        let defect = wgm_blockade::model::hermiticity_defect(&h);
        if defect > 1e-10 {
            eprintln!(
                "note: Hamiltonian is non-Hermitian (max defect {defect:.3e}); \
                 the commutator uses it verbatim"
            );
        }
    }
    let result = run_sweep(&spec)?;
    emit_result(shared, &result)
}

fn run_ep_locate(args: &EpLocateArgs) -> Result<ExitCode, WgmError> {
    let shared = &args.shared;
    let spec = load_spec(shared, Some(("weakdrive", "eigenvalues")))?;
    let l_values: Vec<i64> = args
        .l_values
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| WgmError::ConfigParse(format!("--l-values: bad integer {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let angles = exceptional_angles(&spec.base, &l_values)?;
    let rows: Vec<(i64, f64, f64)> = l_values
        .iter()
        .zip(angles.chunks(2))
        .map(|(&l, pair)| (l, pair[0], pair[1]))
        .collect();
    let text = match shared.format {
        FormatArg::Csv => {
            let mut s = String::from("l,beta_c_minus,beta_c_plus\n");
            for (l, lo, hi) in &rows {
                s.push_str(&format!("{l},{lo},{hi}\n"));
            }
            s
        }
        FormatArg::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|(l, lo, hi)| {
                    serde_json::json!({"l": l, "beta_c_minus": lo, "beta_c_plus": hi})
                })
                .collect();
            serde_json::to_string_pretty(&v).expect("serializable") + "\n"
        }
    };
    write_out(shared, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: &Cli) -> Result<ExitCode, WgmError> {
    match &cli.command {
        Command::Transmission(s) => run_engine_command(s, Some(("meanfield", "T"))),
        Command::Correlation(s) => run_engine_command(s, Some(("lindblad", "g2, g3, n_C, n_A"))),
        Command::Weakdrive(s) => run_engine_command(s, Some(("weakdrive", "g2_weak"))),
        Command::EpLocate(args) => run_ep_locate(args),
        Command::Sweep(s) => run_engine_command(s, None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
