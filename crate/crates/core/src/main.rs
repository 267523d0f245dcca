//! Command-line front end: run simulations from config files or named
//! presets, and evaluate the closed-form predictors without simulating.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coalsim::bessel::{bessel_index, classify_origin};
use coalsim::config::RunConfig;
use coalsim::diagnostics::{
    mpks_blowup_condition, mpks_m_max, mpks_moment_rate, predicted_slope_regularized,
};
use coalsim::model::{critical_mass, SystemParams};
use coalsim::presets::{preset, PRESET_NAMES};
use coalsim::run::RunSummary;
use coalsim::SimResult;

/// Environment variable overriding the default output directory.
const OUT_ENV: &str = "COALSIM_OUT";

#[derive(Parser)]
#[command(
    name = "coalsim",
    about = "Planar coalescing stochastic particle simulator",
    version
)]
struct Cli {
    /// Rayon thread count (1 for strictly serial execution). Results are
    /// identical for any value; this only affects speed.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by an INI config file.
    Simulate {
        /// Path to the config file.
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a named built-in experiment.
    Preset {
        /// One of the built-in experiment names.
        name: String,
        /// Override the initial particle count.
        #[arg(long)]
        particles: Option<usize>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the macro time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the end time.
        #[arg(long)]
        t_end: Option<f64>,
        /// Override the grid resolution (nodes per axis).
        #[arg(long)]
        nx: Option<usize>,
        /// Write the resolved config to the output directory and exit
        /// without simulating.
        #[arg(long)]
        config_only: bool,
    },
    /// List the built-in experiment names.
    Presets,
    /// Evaluate the closed-form predictors without simulating.
    #[command(subcommand)]
    Predict(Predict),
}

#[derive(Subcommand)]
enum Predict {
    /// Second-moment slope of a regularized single-species system with
    /// the given atoms already formed.
    Slope(SlopeArgs),
    /// Multispecies second-moment rate and blow-up condition.
    MpksRate(MpksRateArgs),
    /// Largest two-species masses admitting an expanding blow-up.
    MMax(MMaxArgs),
    /// Bessel index and origin classification of a particle subsystem.
    Index(IndexArgs),
}

#[derive(Args)]
struct SlopeArgs {
    #[arg(long)]
    chi: f64,
    #[arg(long)]
    mu: f64,
    /// Total mass M.
    #[arg(long)]
    mass: f64,
    /// Comma-separated atomic masses already formed.
    #[arg(long, value_delimiter = ',')]
    atoms: Vec<f64>,
}

#[derive(Args)]
struct MpksRateArgs {
    #[arg(long)]
    chi: f64,
    /// Species as comma-separated mu:mass pairs, e.g. 17.5:4,2.9167:24.
    #[arg(long, value_delimiter = ',')]
    species: Vec<String>,
}

#[derive(Args)]
struct MMaxArgs {
    #[arg(long)]
    chi: f64,
    #[arg(long)]
    mu1: f64,
    #[arg(long)]
    mu2: f64,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    chi: f64,
    /// Particle-level diffusion scale.
    #[arg(long)]
    mu_tilde: f64,
    /// Comma-separated particle masses.
    #[arg(long, value_delimiter = ',')]
    masses: Vec<f64>,
}

fn print_summary(summary: &RunSummary) {
    let first = summary.records.first();
    let last = summary.records.last();
    if let (Some(first), Some(last)) = (first, last) {
        println!(
            "t = {:.6}: Y = {:.6e} -> {:.6e}, F = {:.6e} -> {:.6e}",
            last.time, first.y_norm, last.y_norm, first.f_total, last.f_total
        );
        println!(
            "particles: {} -> {}, merges: {}, atoms: {} (mass {:.6e}, threshold {:.6e})",
            first.n_particles,
            last.n_particles,
            summary.events.len(),
            last.n_atoms(),
            last.atom_mass_total(),
            summary.atom_threshold
        );
    }
}

fn default_out(config: &mut RunConfig, explicit: Option<PathBuf>) {
    if let Some(out) = explicit {
        config.output_dir = out;
    } else if let Ok(base) = std::env::var(OUT_ENV) {
        // Keep the config's final path component under the overridden base.
        let leaf = config
            .output_dir
            .file_name()
            .map(|s| s.to_os_string())
            .unwrap_or_default();
        config.output_dir = PathBuf::from(base).join(leaf);
    }
}

fn execute(cli: Cli) -> SimResult<()> {
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut config = RunConfig::load(&config)?;
            default_out(&mut config, out);
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let summary = coalsim::run::run(&config)?;
            println!("wrote {}", config.output_dir.display());
            print_summary(&summary);
        }
        Command::Preset {
            name,
            particles,
            seed,
            out,
            dt,
            t_end,
            nx,
            config_only,
        } => {
            let mut config = preset(&name)?;
            if let Some(n0) = particles {
                config.n0 = n0;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(dt) = dt {
                config.dt = dt;
            }
            if let Some(t_end) = t_end {
                config.t_end = t_end;
            }
            if let Some(nx) = nx {
                config.nx = nx;
            }
            default_out(&mut config, out);
            config.validate()?;
            if config_only {
                std::fs::create_dir_all(&config.output_dir).map_err(|e| {
                    coalsim::SimError::io(config.output_dir.display().to_string(), e)
                })?;
                let path = config.output_dir.join("config.ini");
                config.save(&path)?;
                println!("wrote {}", path.display());
            } else {
                let summary = coalsim::run::run(&config)?;
                println!("wrote {}", config.output_dir.display());
                print_summary(&summary);
            }
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
        }
        Command::Predict(predict) => match predict {
            Predict::Slope(args) => {
                let slope =
                    predicted_slope_regularized(args.mass, args.mu, args.chi, &args.atoms)?;
                println!("slope = {slope:.6}");
                println!(
                    "critical mass = {:.6}",
                    critical_mass(args.chi, args.mu)
                );
            }
            Predict::MpksRate(args) => {
                let species = parse_species(&args.species)?;
                let rate = mpks_moment_rate(args.chi, &species);
                println!("rate = {rate:.6}");
                println!(
                    "blow-up (contracting moment): {}",
                    mpks_blowup_condition(args.chi, &species)
                );
            }
            Predict::MMax(args) => {
                let (m1, m2) = mpks_m_max(args.chi, args.mu1, args.mu2)?;
                println!("M1_max = {m1:.6}");
                println!("M2_max = {m2:.6}");
            }
            Predict::Index(args) => {
                let params = SystemParams::laplace(args.chi, args.mu_tilde)?;
                let nu = bessel_index(&args.masses, &params)?;
                println!("nu = {nu:.6}");
                println!("origin: {:?}", classify_origin(nu)?);
            }
        },
    }
    Ok(())
}

fn parse_species(entries: &[String]) -> SimResult<Vec<(f64, f64)>> {
    entries
        .iter()
        .map(|entry| {
            let (mu, mass) = entry.split_once(':').ok_or_else(|| {
                coalsim::SimError::config(format!(
                    "species {entry:?} is not of the form mu:mass"
                ))
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    coalsim::SimError::config(format!("bad number {s:?} in species {entry:?}"))
                })
            };
            Ok((parse(mu)?, parse(mass)?))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
