use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use subpoisson::sweep::{
    emit_csv, parse_grid, run_sweep_with, verify_mode, Family, GridSpec, SweepConfig, SweepError,
};
use subpoisson::Execution;

const EXIT_VERIFY_FAILED: u8 = 4;

/// Critical transmittance sweeps for sub-Poissonian light in a fluctuating
/// thermal-loss channel. Writes CSV with columns
/// state,r,phi,beta_sq,F,n_th,n_in,q_in,g,tau_c.
#[derive(Debug, Parser)]
#[command(name = "subpoisson", version)]
struct Cli {
    /// TOML file whose keys mirror the flags below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input family: squeezed, cat or fock.
    #[arg(long)]
    state: Option<String>,
    /// Squeezing magnitude.
    #[arg(long)]
    r: Option<f64>,
    /// Relative phase theta - psi/2 in radians.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Displacement phase (with --psi, instead of --phi).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Squeezing phase.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<f64>,
    /// |beta|^2 grid: "a,b,c", "start:stop:count" or "log:start:stop:count".
    #[arg(long = "beta-sq")]
    beta_sq: Option<String>,
    /// Fock photon numbers, comma separated.
    #[arg(long = "fock-n")]
    fock_n: Option<String>,
    /// Fluctuation strengths.
    #[arg(long = "f-list")]
    f_list: Option<String>,
    /// Mean thermal photon numbers.
    #[arg(long = "nth-list")]
    nth_list: Option<String>,
    /// hbar*omega/(k_B*T) values converted to thermal occupancies.
    #[arg(long = "hw-kt-list")]
    hw_kt_list: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check a subsample of points against the Fock-space oracle.
    #[arg(long)]
    verify: bool,
    /// Number of grid points checked by --verify.
    #[arg(long = "verify-samples")]
    verify_samples: Option<usize>,
    /// Largest Fock truncation the oracle may use.
    #[arg(long)]
    truncation: Option<usize>,
    /// Evaluate grid points on a single thread.
    #[arg(long)]
    sequential: bool,
}

fn list(field: &str, text: &str) -> Result<Vec<f64>, SweepError> {
    parse_grid(text).map_err(|message| SweepError::Config {
        field: field.into(),
        message,
    })
}

fn build_config(cli: &Cli) -> Result<SweepConfig, SweepError> {
    let mut cfg = match &cli.config {
        Some(path) => SweepConfig::from_file(path)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = &cli.state {
        cfg.state = Some(s.parse::<Family>()?);
    }
    if cli.r.is_some() {
        cfg.r = cli.r;
    }
    if cli.phi.is_some() {
        cfg.phi = cli.phi;
        cfg.theta = None;
        cfg.psi = None;
    }
    if cli.theta.is_some() || cli.psi.is_some() {
        if cli.phi.is_none() {
            cfg.phi = None;
        }
        cfg.theta = cli.theta.or(cfg.theta);
        cfg.psi = cli.psi.or(cfg.psi);
    }
    if let Some(b) = &cli.beta_sq {
        cfg.beta_sq = Some(GridSpec::Text(b.clone()));
    }
    if let Some(s) = &cli.fock_n {
        cfg.fock_n = s
            .split(',')
            .map(|x| {
                x.trim().parse::<u32>().map_err(|_| SweepError::Config {
                    field: "fock_n".into(),
                    message: format!("`{}` is not a photon number", x.trim()),
                })
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(s) = &cli.f_list {
        cfg.f_list = list("f_list", s)?;
    }
    if let Some(s) = &cli.nth_list {
        cfg.n_th_list = list("n_th_list", s)?;
    }
    if let Some(s) = &cli.hw_kt_list {
        cfg.hbar_omega_over_kt = list("hbar_omega_over_kt", s)?;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.verify {
        cfg.verify = true;
    }
    if let Some(n) = cli.verify_samples {
        cfg.verify_samples = n;
    }
    if let Some(n) = cli.truncation {
        cfg.truncation = n;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, SweepError> {
    let cfg = build_config(cli)?;
    cfg.resolve()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let points = run_sweep_with(&cfg, exec)?;
    match &cfg.out {
        Some(path) => emit_csv(&points, path)?,
        None => subpoisson::sweep::write_csv(&points, BufWriter::new(io::stdout().lock()))?,
    }
    if cfg.verify {
        let report = verify_mode(&cfg, &points, exec);
        eprintln!("{report}");
        if !report.passed() {
            return Ok(ExitCode::from(EXIT_VERIFY_FAILED));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
