use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdwg::cases::{builtin_case, case_ids};
use pdwg::cli::{self, parse_config, parse_levels, resolve_case, RunConfig, SolveSummary};
use pdwg::{ElementKind, Mesh};

#[derive(Parser)]
#[command(name = "pdwg", version, about = "Primal-dual weak Galerkin solver for first-order convection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in benchmark cases.
    ListCases,
    /// Solve once on the finest requested level and print a summary.
    Solve(RunArgs),
    /// Run a convergence study and write the rate table as CSV.
    Convergence(RunArgs),
    /// Solve once and export `x,y,lambda0` samples as CSV.
    PlotExport(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Configuration file (`key = value` lines, optional `[case]` section).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in case id.
    #[arg(long)]
    case: Option<String>,
    /// Polynomial degree (1 or 2).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tau1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau2: Option<f64>,
    /// Levels: `a..b`, `a,b,c`, or `n` for `0..n`.
    #[arg(long)]
    levels: Option<String>,
    /// Element shape: tri or rect.
    #[arg(long)]
    element: Option<ElementKind>,
    /// Output path for the rate table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output path for plot samples.
    #[arg(long)]
    plot_out: Option<PathBuf>,
    /// Sample points per direction and element.
    #[arg(long)]
    density: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(c) = self.case {
            cfg.case = Some(c);
        }
        if let Some(k) = self.k {
            cfg.set_k(k)?;
        }
        if let Some(t) = self.tau1 {
            cfg.tau1 = t;
        }
        if let Some(t) = self.tau2 {
            cfg.set_tau2(t);
        }
        if let Some(l) = self.levels {
            cfg.levels = parse_levels(&l)?;
        }
        if let Some(e) = self.element {
            cfg.element = Some(e);
        }
        if let Some(o) = self.out {
            cfg.out = Some(o);
        }
        if let Some(o) = self.plot_out {
            cfg.plot_out = Some(o);
        }
        if let Some(d) = self.density {
            cfg.set_density(d)?;
        }
        for w in &cfg.warnings {
            eprintln!("warning: {w}");
        }
        Ok(cfg)
    }
}

/// Writes to stdout, exiting quietly when the reader has gone away.
fn emit(text: &str) -> Result<(), String> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
        r => r.map_err(|e| e.to_string()),
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::ListCases => {
            for id in case_ids() {
                let case = builtin_case(id).map_err(|e| e.to_string())?;
                let exact = if case.exact.is_some() { "exact" } else { "-" };
                emit(&format!(
                    "{id:<26} {:<15} {:<5} {exact:<6} {}\n",
                    case.domain, case.element_kind, case.description
                ))?;
            }
        }
        Command::Solve(args) => {
            let cfg = args.into_config()?;
            let case = resolve_case(&cfg).map_err(|e| e.to_string())?;
            let mesh = Mesh::at_level(case.domain, case.element_kind, cfg.finest_level()).map_err(|e| e.to_string())?;
            let params = cfg.params();
            let result = cli::solve_on(mesh, &case, &params).map_err(|e| e.to_string())?;
            let summary = SolveSummary {
                case: &case,
                params,
                result: &result,
            };
            emit(&summary.to_string())?;
        }
        Command::Convergence(args) => {
            let cfg = args.into_config()?;
            let table = cli::run_convergence(&cfg).map_err(|e| e.to_string())?;
            if cfg.out.is_none() {
                emit(&table.to_csv())?;
            } else {
                eprintln!("wrote {} rows", table.rows.len());
            }
        }
        Command::PlotExport(args) => {
            let cfg = args.into_config()?;
            let csv = cli::export_plot(&cfg).map_err(|e| e.to_string())?;
            if cfg.plot_out.is_none() {
                emit(&csv)?;
            } else {
                eprintln!("wrote {} samples", csv.lines().count() - 1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
