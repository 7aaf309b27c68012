//! `qws-lab`: scattering matrices, Wigner-Smith eigenchannels and optimal
//! probe states for a disordered waveguide, written to CSV/JSON files.

mod commands;
mod grids;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qws_core::{Category, ThetaKind};

#[derive(Parser)]
#[command(name = "qws-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Parameter θ: x, y (target position) or omega.
    #[arg(long)]
    pub theta: Option<ThetaKind>,
    /// Finite-difference step for θ.
    #[arg(long)]
    pub step: Option<f64>,
    /// Interior grid points across the width.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Disorder seed, overriding the file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "qws-out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Which {
    Max,
    Min,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Probe {
    Coherent,
    Gaussian,
    Noon,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Preset {
    Reference,
    Empty,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering matrix as (row, col, re, im) CSV.
    Smatrix {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// GWS matrix Q_θ, its eigenvalues and eigenvectors.
    Gws {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Intensity of the field launched by the extreme GWS eigenvector.
    EigenstateMaps {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "max")]
        which: Which,
        /// Also write an 8-bit grayscale PNG.
        #[arg(long)]
        png: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Single-photon NOON density |ψ_1 + ψ_N|²/2 over the extreme eigenchannels.
    NoonMaps {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        png: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal squeezing for force-noise reduction over a photon-number grid.
    OptimizeManip {
        /// Photon numbers: a,b,c or lo:hi:lin:n or lo:hi:log[:per_decade].
        #[arg(long, default_value = "1:1e6:log")]
        nu: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quantum Fisher information of an optimal probe for the scenario's θ.
    Qfi {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        probe: Probe,
        #[arg(long)]
        nu: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// QFI of the three optimal probe families for a random GWS spectrum.
    Scaling {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1:1e4:log:20")]
        nu: String,
        /// Number of channels in the random spectrum.
        #[arg(long, default_value_t = 40)]
        modes: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Vacuum force conjugate to θ over a band of kW/π values.
    VacuumScan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// kW/π values: lo:hi:lin:n or a list.
        #[arg(long)]
        band: String,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        /// Also compute tr Q_E for a Krein check along the scan.
        #[arg(long)]
        krein: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Writes a ready-made scenario file.
    Preset {
        #[arg(value_enum)]
        name: Preset,
        /// Destination file.
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<qws_core::Error>().map(|e| e.category()) {
        Some(Category::Scenario) => 2,
        Some(Category::Solver) => 3,
        Some(Category::Tolerance) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Smatrix { scenario, out } => commands::smatrix(&scenario, &out),
        Command::Gws { scenario, out } => commands::gws(&scenario, &out),
        Command::EigenstateMaps {
            scenario,
            which,
            png,
            out,
        } => commands::eigenstate_maps(&scenario, which, png, &out),
        Command::NoonMaps { scenario, png, out } => commands::noon_maps(&scenario, png, &out),
        Command::OptimizeManip { nu, out } => commands::optimize_manip(&nu, &out),
        Command::Qfi {
            scenario,
            probe,
            nu,
            out,
        } => commands::qfi(&scenario, probe, nu, &out),
        Command::Scaling {
            seed,
            nu,
            modes,
            out,
        } => commands::scaling(seed, &nu, modes, &out),
        Command::VacuumScan {
            scenario,
            band,
            kappa,
            krein,
            out,
        } => commands::vacuum_scan(&scenario, &band, kappa, krein, &out),
        Command::Preset { name, path, seed } => commands::preset(name, &path, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
