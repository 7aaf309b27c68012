//! Vacuum forces from the trace of the GWS matrix: scattering phase,
//! density-of-states correction and the damped spectral integral
//! (1/4π)∫ tr Q_θ(E) e^{−κE} dE over the open band.
//!
//! Energies are wavenumbers (ħ = c = 1).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gws::{
    check_samples, gws_from_samples, unwrap_scattering_phase_lenient, ThetaSamples,
    DEFAULT_UNITARITY_THRESHOLD,
};
use crate::linalg::{trace, CMatrix};
use crate::scenario::{Scenario, ThetaKind, ThetaSpec};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// (1/2π) tr Q_E, the scattering part of the density of states.
pub fn dos_correction(q_energy: &CMatrix) -> f64 {
    trace(q_energy).re / (2.0 * std::f64::consts::PI)
}

/// tr Q_θ(E) e^{−κE} / 4π.
pub fn vacuum_integrand(energy: f64, trace_q: f64, kappa: f64) -> f64 {
    trace_q * (-kappa * energy).exp() / FOUR_PI
}

/// Trapezoid rule on a possibly non-uniform grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Damped band integral of the vacuum integrand.
pub fn band_integral(energies: &[f64], traces: &[f64], kappa: f64) -> f64 {
    let y: Vec<f64> = energies
        .iter()
        .zip(traces)
        .map(|(&e, &t)| vacuum_integrand(e, t, kappa))
        .collect();
    trapezoid(energies, &y)
}

/// |I(h) − I(2h)|/3 from the full grid and every second point.
pub fn step_halving_error(energies: &[f64], traces: &[f64], kappa: f64) -> f64 {
    if energies.len() < 3 {
        return f64::NAN;
    }
    // an even point count drops the last panel so both rules share an interval
    let n = energies.len() - 1 + energies.len() % 2;
    let (energies, traces) = (&energies[..n], &traces[..n]);
    let coarse_e: Vec<f64> = energies.iter().step_by(2).copied().collect();
    let coarse_t: Vec<f64> = traces.iter().step_by(2).copied().collect();
    (band_integral(energies, traces, kappa) - band_integral(&coarse_e, &coarse_t, kappa)).abs() / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumOptions {
    pub kappa: f64,
    /// Also compute tr Q_E at every sample (four extra solves each) for the
    /// Krein consistency check along the scan.
    pub energy_trace: bool,
    pub unitarity_threshold: f64,
}

impl Default for VacuumOptions {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            energy_trace: false,
            unitarity_threshold: DEFAULT_UNITARITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VacuumScan {
    pub kind: ThetaKind,
    pub energies: Vec<f64>,
    /// tr Q_θ(E); zero below the first cutoff.
    pub traces: Vec<f64>,
    /// Unwrapped scattering phase η(E).
    pub eta: Vec<f64>,
    pub integrand: Vec<f64>,
    pub kappa: f64,
    /// Band-limited damped integral.
    pub value: f64,
    pub error_estimate: f64,
    /// Damped contribution above the band, assuming tr Q_θ stays at its last
    /// sampled value: integrand(E_max)/κ. Absent without damping.
    pub tail_estimate: Option<f64>,
    /// 2V(κ) − V(2κ), a first-order κ → 0 extrapolation; equals `value`
    /// when κ = 0.
    pub extrapolated: f64,
    pub max_unitarity_defect: f64,
    pub energy_traces: Option<Vec<f64>>,
    #[serde(skip)]
    pub gws: Vec<CMatrix>,
}

impl VacuumScan {
    /// Largest |Δη − ½(trQ_E(i) + trQ_E(i+1))ΔE| / |½(...)ΔE| along the scan,
    /// skipping steps where the channel count changes.
    pub fn krein_defect(&self) -> Option<f64> {
        let te = self.energy_traces.as_ref()?;
        let mut worst: f64 = 0.0;
        for i in 0..self.energies.len().saturating_sub(1) {
            if self.gws[i].nrows() != self.gws[i + 1].nrows() || self.gws[i].nrows() == 0 {
                continue;
            }
            let expected = 0.5 * (te[i] + te[i + 1]) * (self.energies[i + 1] - self.energies[i]);
            let d_eta = self.eta[i + 1] - self.eta[i];
            worst = worst.max((d_eta - expected).abs() / expected.abs().max(f64::MIN_POSITIVE));
        }
        Some(worst)
    }
}

struct EnergySample {
    s: CMatrix,
    q: CMatrix,
    energy_trace: Option<f64>,
    defect: f64,
}

fn sample_energy(scenario: &Scenario, energy: f64, options: &VacuumOptions) -> Result<EnergySample> {
    let at = scenario.with_wavenumber(energy);
    if at.open_modes_continuum() == 0 {
        return Ok(EnergySample {
            s: CMatrix::zeros(0, 0),
            q: CMatrix::zeros(0, 0),
            energy_trace: options.energy_trace.then_some(0.0),
            defect: 0.0,
        });
    }
    let samples = ThetaSamples::for_scenario(&at)?;
    check_samples(&samples, options.unitarity_threshold)?;
    let q = gws_from_samples(&samples, at.theta.kind).matrix;
    let mut defect = samples.max_unitarity_defect;
    let energy_trace = if options.energy_trace {
        let omega = at.with_theta(ThetaSpec {
            kind: ThetaKind::Frequency,
            step: None,
            richardson: at.theta.richardson,
        });
        let qe_samples = ThetaSamples::for_scenario(&omega)?;
        check_samples(&qe_samples, options.unitarity_threshold)?;
        defect = defect.max(qe_samples.max_unitarity_defect);
        Some(gws_from_samples(&qe_samples, ThetaKind::Frequency).trace())
    } else {
        None
    };
    Ok(EnergySample {
        s: samples.mid,
        q,
        energy_trace,
        defect,
    })
}

/// Vacuum force conjugate to the scenario's θ over an energy grid.
pub fn vacuum_force(scenario: &Scenario, energies: &[f64], kappa: f64) -> Result<VacuumScan> {
    vacuum_force_with(
        scenario,
        energies,
        &VacuumOptions {
            kappa,
            ..VacuumOptions::default()
        },
    )
}

pub fn vacuum_force_with(
    scenario: &Scenario,
    energies: &[f64],
    options: &VacuumOptions,
) -> Result<VacuumScan> {
    if !(options.kappa >= 0.0 && options.kappa.is_finite()) {
        return Err(Error::Domain(format!("damping κ = {} must be >= 0", options.kappa)));
    }
    if energies.len() < 2 || energies.windows(2).any(|w| !(w[1] > w[0])) || energies[0] <= 0.0 {
        return Err(Error::Domain(
            "energy grid needs at least two strictly increasing positive points".into(),
        ));
    }
    let samples = energies
        .par_iter()
        .map(|&e| sample_energy(scenario, e, options))
        .collect::<Result<Vec<_>>>()?;
    let open: Vec<CMatrix> = samples
        .iter()
        .filter(|s| s.s.nrows() > 0)
        .map(|s| s.s.clone())
        .collect();
    let mut open_eta = unwrap_scattering_phase_lenient(&open).into_iter();
    let eta: Vec<f64> = samples
        .iter()
        .map(|s| if s.s.nrows() > 0 { open_eta.next().unwrap_or(0.0) } else { 0.0 })
        .collect();
    let traces: Vec<f64> = samples.iter().map(|s| trace(&s.q).re).collect();
    let kappa = options.kappa;
    let integrand = energies
        .iter()
        .zip(&traces)
        .map(|(&e, &t)| vacuum_integrand(e, t, kappa))
        .collect();
    let value = band_integral(energies, &traces, kappa);
    let n = energies.len() - 1;
    let last = vacuum_integrand(energies[n], traces[n], kappa);
    let tail_estimate = (kappa > 0.0).then(|| last / kappa);
    let extrapolated = if kappa > 0.0 {
        2.0 * value - band_integral(energies, &traces, 2.0 * kappa)
    } else {
        value
    };
    Ok(VacuumScan {
        kind: scenario.theta.kind,
        energies: energies.to_vec(),
        integrand,
        eta,
        value,
        error_estimate: step_halving_error(energies, &traces, kappa),
        tail_estimate,
        extrapolated,
        kappa,
        max_unitarity_defect: samples.iter().map(|s| s.defect).fold(0.0, f64::max),
        energy_traces: options
            .energy_trace
            .then(|| samples.iter().map(|s| s.energy_trace.unwrap_or(0.0)).collect()),
        gws: samples.into_iter().map(|s| s.q).collect(),
        traces,
    })
}

/// Uniform grid of `points` energies on [lo, hi].
pub fn energy_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
