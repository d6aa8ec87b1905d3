use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phifem_cli::{conditioning_study, run_case, sigma_sweep, write_csv, CaseId, CliError, Row, RunConfig};

#[derive(Parser)]
#[command(name = "phifem", version, about = "Fictitious-domain finite element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study at one sigma.
    Run(Common),
    /// Refinement study for each sigma in the config (or --sigmas).
    SigmaSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sigma values.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
    },
    /// Condition number per level plus the log-log slope.
    Conditioning(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    case: Option<CaseId>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Cells per side on the coarsest level.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = self.case {
            cfg.case = c;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if self.l.is_some() {
            cfg.l = self.l;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(n) = self.n {
            cfg.n_start = n;
        }
        if let Some(l) = self.levels {
            cfg.levels = l;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &RunConfig, rows: &[Row]) -> Result<(), CliError> {
    match &cfg.output {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_csv(rows, &mut w)?;
            w.flush()?;
        }
        None => write_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<Vec<Row>, CliError> {
    let (cfg, rows) = match cli.command {
        Command::Run(c) => {
            let cfg = c.resolve()?;
            let rows = run_case(&cfg);
            (cfg, rows)
        }
        Command::SigmaSweep { common, sigmas } => {
            let mut cfg = common.resolve()?;
            if let Some(s) = sigmas {
                cfg.sigmas = s;
                cfg.validate()?;
            }
            let rows = sigma_sweep(&cfg);
            (cfg, rows)
        }
        Command::Conditioning(c) => {
            let cfg = c.resolve()?;
            let rows = conditioning_study(&cfg);
            (cfg, rows)
        }
    };
    emit(&cfg, &rows)?;
    Ok(rows)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(rows) => match rows.iter().find(|r| !r.is_ok()) {
            Some(r) => {
                eprintln!("error: {}", r.status);
                ExitCode::from(3)
            }
            None => ExitCode::SUCCESS,
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
