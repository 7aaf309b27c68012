//! One function per subcommand.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use qws_core::gws::{eigendecompose, gws_from_samples, krein_check, GwsEigenSystem, ThetaSamples};
use qws_core::linalg::{symmetry_defect, unitarity_defect, CMatrix, CVector};
use qws_core::metrology::{
    optimal_coherent_probe, optimal_gaussian_probe, optimal_noon_probe,
    scaling_experiment, spectrum_system, uniform_spectrum,
};
use qws_core::micromanip::manipulation_table;
use qws_core::scenario::ScenarioFile;
use qws_core::solver::{solve_scenario, FieldMap};
use qws_core::vacuum::{vacuum_force_with, VacuumOptions};
use qws_core::{Error, Scenario, ThetaKind};
use serde::Serialize;

use crate::grids::parse_grid;
use crate::output::Run;
use crate::{OutArgs, Preset, Probe, ScenarioArgs, Which};

/// Reads the scenario file and applies the command-line overrides.
fn load(args: &ScenarioArgs) -> Result<Scenario> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| Error::InvalidScenario(format!("cannot read {}: {e}", args.scenario.display())))
        .context("stage: scenario")?;
    let mut file: ScenarioFile = serde_json::from_str(&text)
        .map_err(Error::from)
        .context("stage: scenario")?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    if let Some(res) = args.resolution {
        file.grid_resolution = res;
    }
    if let Some(kind) = args.theta {
        file.theta.kind = kind;
    }
    if args.step.is_some() {
        file.theta.step = args.step;
    }
    file.resolve().context("stage: scenario")
}

fn start(args: &ScenarioArgs, out: &OutArgs, command: &str, scenario: &Scenario) -> Result<Run> {
    Run::new(&out.out, command, Some(&args.scenario), Some(scenario.seed))
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

/// S samples for the scenario's θ, Q_θ and its eigensystem.
fn gws_stage(scenario: &Scenario, run: &mut Run) -> Result<(ThetaSamples, CMatrix, GwsEigenSystem)> {
    let samples = ThetaSamples::for_scenario(scenario).context("stage: gws sampling")?;
    qws_core::gws::check_samples(&samples, qws_core::gws::DEFAULT_UNITARITY_THRESHOLD)
        .context("stage: gws sampling")?;
    let q = gws_from_samples(&samples, scenario.theta.kind);
    run.tolerance("max_unitarity_defect", samples.max_unitarity_defect);
    run.tolerance("hermiticity_defect", q.hermiticity_defect);
    let sys = eigendecompose(&q.matrix);
    run.tolerance(
        "eigen_reconstruction_relative",
        (sys.reconstruct() - &q.matrix).norm() / q.matrix.norm().max(f64::MIN_POSITIVE),
    );
    Ok((samples, q.matrix, sys))
}

pub fn smatrix(args: &ScenarioArgs, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "smatrix", &scenario)?;
    let s = qws_core::scattering_matrix(&scenario).context("stage: solve")?;
    let defect = unitarity_defect(&s.matrix);
    run.tolerance("unitarity_defect", defect);
    run.tolerance("symmetry_defect", symmetry_defect(&s.matrix));
    if defect > qws_core::gws::DEFAULT_UNITARITY_THRESHOLD {
        return Err(Error::SolverQuality {
            defect,
            threshold: qws_core::gws::DEFAULT_UNITARITY_THRESHOLD,
        })
        .context("stage: solve");
    }
    run.write_complex_matrix("smatrix.csv", &s.matrix)?;
    report(&run.finish()?);
    Ok(())
}

pub fn gws(args: &ScenarioArgs, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "gws", &scenario)?;
    let (samples, q, sys) = gws_stage(&scenario, &mut run)?;
    let kind = scenario.theta.kind;
    let krein = krein_check(&samples, kind).context("stage: krein")?;
    run.tolerance("krein_relative_defect", krein.relative_defect);
    let label = kind.label();
    #[derive(Serialize)]
    struct Eigenvalue {
        index: usize,
        lambda: f64,
    }
    let values: Vec<Eigenvalue> = sys
        .values
        .iter()
        .enumerate()
        .map(|(index, &lambda)| Eigenvalue { index, lambda })
        .collect();
    run.write_complex_matrix(&format!("Q_{label}.csv"), &q)?;
    run.write_records(&format!("eigenvalues_{label}.csv"), &values)?;
    run.write_complex_matrix(&format!("W_{label}.csv"), &sys.vectors)?;
    report(&run.finish()?);
    Ok(())
}

/// Σ_c w_c ψ_c over the per-channel scattering fields.
fn superpose(fields: &[FieldMap], w: &CVector) -> CMatrix {
    let mut total = CMatrix::zeros(fields[0].values.nrows(), fields[0].values.ncols());
    for (f, &coef) in fields.iter().zip(w.iter()) {
        total += &f.values * coef;
    }
    total
}

fn solve_fields(scenario: &Scenario) -> Result<Vec<FieldMap>> {
    let sol = solve_scenario(scenario, true).context("stage: field solve")?;
    if sol.fields.is_empty() {
        bail!("solver returned no field maps");
    }
    Ok(sol.fields)
}

pub fn eigenstate_maps(args: &ScenarioArgs, which: Which, png: bool, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "eigenstate-maps", &scenario)?;
    let (_, _, sys) = gws_stage(&scenario, &mut run)?;
    let (index, tag) = match which {
        Which::Max => (sys.i_max, "max"),
        Which::Min => (sys.i_min, "min"),
    };
    let fields = solve_fields(&scenario)?;
    let intensity = superpose(&fields, &sys.vector(index)).map(|v| v.norm_sqr());
    let name = format!("field_{tag}_{}", scenario.theta.kind.label());
    run.tolerance("eigenvalue", sys.values[index]);
    run.write_grid(&format!("{name}.csv"), &intensity)?;
    if png {
        run.write_png(&format!("{name}.png"), &intensity)?;
    }
    report(&run.finish()?);
    Ok(())
}

pub fn noon_maps(args: &ScenarioArgs, png: bool, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "noon-maps", &scenario)?;
    let (_, _, sys) = gws_stage(&scenario, &mut run)?;
    let fields = solve_fields(&scenario)?;
    let first = superpose(&fields, &sys.vector(sys.i_max));
    let last = superpose(&fields, &sys.vector(sys.i_min));
    let mut density: DMatrix<f64> = (first + last).map(|v| 0.5 * v.norm_sqr());
    let cell = fields[0].grid.spacing.powi(2);
    let total = density.sum() * cell;
    if total > 0.0 {
        density /= total;
    }
    let name = format!("noon_density_{}", scenario.theta.kind.label());
    run.write_grid(&format!("{name}.csv"), &density)?;
    if png {
        run.write_png(&format!("{name}.png"), &density)?;
    }
    report(&run.finish()?);
    Ok(())
}

pub fn optimize_manip(nu: &str, out: &OutArgs) -> Result<()> {
    let grid = parse_grid(nu)?;
    let mut run = Run::new(&out.out, "optimize-manip", None, None)?;
    #[derive(Serialize)]
    struct Row {
        nu: f64,
        beta_opt: f64,
        #[serde(rename = "p_opt_dB")]
        p_opt_db: f64,
        sigma_ratio: f64,
    }
    let table = manipulation_table(&grid).context("stage: optimize")?;
    let constraint = table
        .iter()
        .map(|r| (r.beta_abs.powi(2) + r.p.sinh().powi(2) - r.nu).abs() / r.nu.max(1.0))
        .fold(0.0, f64::max);
    run.tolerance("photon_number_constraint", constraint);
    let rows: Vec<Row> = table
        .iter()
        .map(|r| Row {
            nu: r.nu,
            beta_opt: r.beta_abs,
            p_opt_db: r.p_db(),
            sigma_ratio: r.sigma_ratio,
        })
        .collect();
    run.write_records("manipulation.csv", &rows)?;
    report(&run.finish()?);
    Ok(())
}

pub fn qfi(args: &ScenarioArgs, probe: Probe, nu: f64, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "qfi", &scenario)?;
    let (_, _, sys) = gws_stage(&scenario, &mut run)?;
    match probe {
        Probe::Coherent | Probe::Gaussian => {
            let (state, report_) = if matches!(probe, Probe::Coherent) {
                optimal_coherent_probe(&sys, nu)
            } else {
                optimal_gaussian_probe(&sys, nu)
            }
            .context("stage: probe")?;
            run.write_json("qfi_report.json", &report_)?;
            run.write_bytes("probe_state.json", state.to_json().as_bytes())?;
        }
        Probe::Noon => {
            if nu.fract() != 0.0 || nu < 1.0 {
                return Err(Error::Domain(format!("NOON probes need a whole photon number, got {nu}")))
                    .context("stage: probe");
            }
            let (noon, report_) = optimal_noon_probe(&sys.values, nu as usize).context("stage: probe")?;
            run.write_json("qfi_report.json", &report_)?;
            run.write_json("probe_state.json", &noon)?;
        }
    }
    report(&run.finish()?);
    Ok(())
}

pub fn scaling(seed: u64, nu: &str, modes: usize, out: &OutArgs) -> Result<()> {
    let grid = parse_grid(nu)?;
    let mut run = Run::new(&out.out, "scaling", None, Some(seed))?;
    let lambda = uniform_spectrum(modes, seed);
    let table = scaling_experiment(&lambda, &grid).context("stage: scaling")?;
    #[derive(Serialize)]
    struct Summary {
        modes: usize,
        seed: u64,
        lambda_hav: f64,
        spread: f64,
        slope_coherent: f64,
        slope_gaussian: f64,
        slope_noon: f64,
    }
    let sys = spectrum_system(&lambda);
    run.write_records("scaling.csv", &table.rows)?;
    run.write_json(
        "scaling_summary.json",
        &Summary {
            modes,
            seed,
            lambda_hav: sys.lambda_hav(),
            spread: sys.lambda_max() - sys.lambda_min(),
            slope_coherent: table.slopes[0],
            slope_gaussian: table.slopes[1],
            slope_noon: table.slopes[2],
        },
    )?;
    report(&run.finish()?);
    Ok(())
}

pub fn vacuum_scan(args: &ScenarioArgs, band: &str, kappa: f64, krein: bool, out: &OutArgs) -> Result<()> {
    let scenario = load(args)?;
    let mut run = start(args, out, "vacuum-scan", &scenario)?;
    let energies: Vec<f64> = parse_grid(band)?
        .into_iter()
        .map(|v| v * std::f64::consts::PI / scenario.width)
        .collect();
    let options = VacuumOptions {
        kappa,
        energy_trace: krein,
        ..VacuumOptions::default()
    };
    let scan = vacuum_force_with(&scenario, &energies, &options).context("stage: vacuum scan")?;
    run.tolerance("max_unitarity_defect", scan.max_unitarity_defect);
    if let Some(defect) = scan.krein_defect() {
        run.tolerance("krein_scan_defect", defect);
    }
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "E")]
        energy: f64,
        #[serde(rename = "trQ")]
        trace: f64,
        eta: f64,
        integrand: f64,
    }
    let rows: Vec<Row> = (0..energies.len())
        .map(|i| Row {
            energy: scan.energies[i],
            trace: scan.traces[i],
            eta: scan.eta[i],
            integrand: scan.integrand[i],
        })
        .collect();
    #[derive(Serialize)]
    struct Summary {
        theta: ThetaKind,
        value: f64,
        error_estimate: f64,
        kappa: f64,
        extrapolation_kappas: [f64; 2],
        extrapolated: f64,
        tail_estimate: Option<f64>,
    }
    run.write_records("vacuum_scan.csv", &rows)?;
    run.write_json(
        "vacuum_summary.json",
        &Summary {
            theta: scan.kind,
            value: scan.value,
            error_estimate: scan.error_estimate,
            kappa,
            extrapolation_kappas: [kappa, 2.0 * kappa],
            extrapolated: scan.extrapolated,
            tail_estimate: scan.tail_estimate,
        },
    )?;
    report(&run.finish()?);
    Ok(())
}

pub fn preset(name: Preset, path: &Path, seed: u64) -> Result<()> {
    let file = match name {
        Preset::Reference => Scenario::reference_file(seed),
        Preset::Empty => {
            let mut f = Scenario::reference_file(seed);
            f.scatterers.clear();
            f.disorder = None;
            f
        }
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}
