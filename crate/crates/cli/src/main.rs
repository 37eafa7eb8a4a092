use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splithmc_cli::commands;
use splithmc_cli::config::{
    parse_config, HarmonicConfig, PhmcConfig, SampleConfig, ScalingConfig, SchemeConfig, TuneConfig,
};
use splithmc_cli::CliError;

/// Splitting integrators and Hamiltonian Monte Carlo samplers.
#[derive(Parser)]
#[command(name = "splithmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for subcommands that fan out independent chains.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Step matrix, rotation parameters and energy-error function of a
    /// splitting scheme over a step-size grid.
    Harmonic {
        #[command(flatten)]
        common: Common,
        /// Scheme name (velocity_verlet, position_verlet, lie_trotter,
        /// two_stage, three_stage, blanes_two_stage, blanes_three_stage,
        /// verlet_concat).
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Upper end of the step-size grid.
        #[arg(long)]
        h_max: Option<f64>,
        /// Number of grid points.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Velocity-Verlet errors on the unit oscillator after one and ten
    /// periods, for four step sizes.
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// Run a sampler chain (or several) and stream the positions as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Preconditioned bridge sampler: acceptance sweep over step sizes,
    /// with an optional long-run variance table.
    Phmc {
        #[command(flatten)]
        common: Common,
    },
    /// Minimize the worst-case energy-error function of the two- or
    /// three-stage family over (0, c].
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Upper end of the nondimensional step-size range.
        #[arg(long)]
        c: f64,
        /// Family size: 2 or 3.
        #[arg(long, default_value_t = 2)]
        stages: u32,
    },
    /// Tune the step size toward a target acceptance rate
    /// (default 0.651, the optimum for second-order integrators).
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_acceptance: Option<f64>,
    },
    /// Acceptance of product targets under the step-size scaling law,
    /// against the predicted high-dimension limit.
    Scaling {
        #[command(flatten)]
        common: Common,
    },
}

fn read_config<T: for<'de> serde::Deserialize<'de>>(common: &Common) -> Result<T, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this subcommand".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn apply_overrides(seed: &mut u64, out: &mut String, common: &Common) {
    if let Some(s) = common.seed {
        *seed = s;
    }
    if let Some(o) = &common.out {
        *out = o.to_string_lossy().into_owned();
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Harmonic {
            common,
            scheme,
            a,
            b,
            n,
            h_max,
            points,
        } => {
            let mut cfg: HarmonicConfig = match &common.config {
                Some(_) => read_config(&common)?,
                None => HarmonicConfig {
                    seed: 0,
                    out: String::new(),
                    scheme: SchemeConfig::default(),
                    h_max: 2.5,
                    points: 100,
                },
            };
            if let Some(kind) = scheme {
                cfg.scheme = SchemeConfig { kind, a, b, n };
            }
            if let Some(hm) = h_max {
                cfg.h_max = hm;
            }
            if let Some(p) = points {
                cfg.points = p;
            }
            apply_overrides(&mut cfg.seed, &mut cfg.out, &common);
            if cfg.out.is_empty() {
                return Err(CliError::Config("out: an output path is required".into()));
            }
            commands::cmd_harmonic(&cfg)?;
            eprintln!("harmonic: wrote {}", cfg.out);
            Ok(())
        }
        Command::Table1 { common } => {
            let out = common
                .out
                .clone()
                .ok_or_else(|| CliError::Config("--out is required for table1".into()))?;
            commands::cmd_table1(&out)?;
            eprintln!("table1: wrote {}", out.display());
            Ok(())
        }
        Command::Sample { common } => {
            let mut cfg: SampleConfig = read_config(&common)?;
            apply_overrides(&mut cfg.seed, &mut cfg.out, &common);
            let summary = commands::cmd_sample(&cfg, common.threads)?;
            eprintln!(
                "sample: wrote {} (acceptance {:.4}, mean delta H {:.3e})",
                cfg.out, summary.acceptance, summary.mean_delta_h
            );
            Ok(())
        }
        Command::Phmc { common } => {
            let mut cfg: PhmcConfig = read_config(&common)?;
            apply_overrides(&mut cfg.seed, &mut cfg.out, &common);
            commands::cmd_phmc(&cfg, common.threads)?;
            eprintln!("phmc: wrote {}", cfg.out);
            Ok(())
        }
        Command::Optimize { common, c, stages } => {
            let report = commands::cmd_optimize(c, stages, common.out.as_deref())?;
            match report.a {
                Some(a) => println!(
                    "a = {:.12}, b = {:.12}, sup rho = {:.6e}",
                    a, report.b, report.sup_rho
                ),
                None => println!("b = {:.12}, sup rho = {:.6e}", report.b, report.sup_rho),
            }
            Ok(())
        }
        Command::Tune {
            common,
            target_acceptance,
        } => {
            let mut cfg: TuneConfig = read_config(&common)?;
            apply_overrides(&mut cfg.seed, &mut cfg.out, &common);
            if let Some(t) = target_acceptance {
                cfg.target_acceptance = t;
            }
            let report = commands::cmd_tune(&cfg)?;
            println!(
                "h = {:.6}, observed acceptance = {:.4}{}",
                report.h,
                report.observed,
                if report.bracketed {
                    ""
                } else {
                    " (failed to bracket the target)"
                }
            );
            Ok(())
        }
        Command::Scaling { common } => {
            let mut cfg: ScalingConfig = read_config(&common)?;
            apply_overrides(&mut cfg.seed, &mut cfg.out, &common);
            commands::cmd_scaling(&cfg)?;
            eprintln!("scaling: wrote {}", cfg.out);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
