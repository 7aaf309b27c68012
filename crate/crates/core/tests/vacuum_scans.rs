//! Vacuum-force scans on small waveguides: symmetry, Krein consistency and
//! agreement with the spectral force functional.

use qws_core::micromanip::{force_spectral_expectation, SpectralSample};
use qws_core::gaussian::GaussianState;
use qws_core::linalg::CVector;
use qws_core::vacuum::{energy_grid, vacuum_force, vacuum_force_with, VacuumOptions};
use qws_core::{Scenario, ScattererSpec, Shape, ThetaKind, ThetaSpec};
use std::f64::consts::PI;

const RESOLUTION: usize = 40;

fn band() -> Vec<f64> {
    energy_grid(3.1 * PI, 3.9 * PI, 9)
}

fn disk(x: f64, y: f64, r: f64) -> Shape {
    Shape::Circle { center: [x, y], radius: r }
}

fn theta(kind: ThetaKind) -> ThetaSpec {
    ThetaSpec { kind, ..ThetaSpec::default() }
}

fn asymmetric() -> Scenario {
    let mut s = Scenario::empty(1.0, 1.0, 3.5, RESOLUTION);
    s.scatterers = vec![
        ScattererSpec::metallic(disk(0.4, 0.55, 0.12)).as_target(),
        ScattererSpec::dielectric(disk(0.75, 0.3, 0.1), 1.5),
    ];
    s
}

#[test]
fn empty_guide_has_no_vacuum_force() {
    let s = Scenario::empty(1.0, 1.0, 3.5, RESOLUTION);
    let scan = vacuum_force(&s, &band(), 0.1).unwrap();
    assert!(scan.traces.iter().all(|&t| t == 0.0));
    assert!(scan.value.abs() <= scan.error_estimate.max(1e-14));
}

#[test]
fn mirror_in_x_flips_the_sign() {
    let s = asymmetric();
    let a = vacuum_force(&s, &band(), 0.0).unwrap();
    let b = vacuum_force(&s.mirrored_x(), &band(), 0.0).unwrap();
    assert!(a.value.abs() > 10.0 * a.error_estimate, "{a:?}");
    let bar = a.error_estimate + b.error_estimate;
    assert!((a.value + b.value).abs() <= bar.max(1e-8 * a.value.abs()), "{} vs {}", a.value, b.value);
}

#[test]
fn vertically_symmetric_scenario_has_no_vertical_force() {
    let mut s = Scenario::empty(1.0, 1.0, 3.5, RESOLUTION).with_theta(theta(ThetaKind::TargetY));
    s.scatterers = vec![
        ScattererSpec::metallic(disk(0.45, 0.5, 0.12)).as_target(),
        ScattererSpec::dielectric(disk(0.75, 0.25, 0.1), 1.5),
        ScattererSpec::dielectric(disk(0.75, 0.75, 0.1), 1.5),
    ];
    assert_eq!(s.mirrored_y().scatterers.len(), 3);
    let scan = vacuum_force(&s, &band(), 0.0).unwrap();
    let scale: f64 = scan.traces.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let reference = vacuum_force(&asymmetric().with_theta(theta(ThetaKind::TargetY)), &band(), 0.0).unwrap();
    assert!(scan.value.abs() <= scan.error_estimate.max(1e-6 * reference.value.abs()), "{scan:?} scale {scale}");
}

#[test]
fn scattering_phase_tracks_energy_trace() {
    let opts = VacuumOptions { energy_trace: true, ..VacuumOptions::default() };
    let scan = vacuum_force_with(&asymmetric(), &energy_grid(3.3 * PI, 3.4 * PI, 6), &opts).unwrap();
    let defect = scan.krein_defect().unwrap();
    assert!(defect <= 1e-3, "Krein defect along scan {defect}");
}

#[test]
fn spectral_functional_shares_the_vacuum_integral() {
    let s = asymmetric();
    let energies = band();
    for kappa in [0.0, 0.05] {
        let scan = vacuum_force(&s, &energies, kappa).unwrap();
        let samples: Vec<SpectralSample> = energies
            .iter()
            .zip(&scan.gws)
            .map(|(&e, q)| SpectralSample {
                energy: e,
                weight: 0.3,
                q: q.clone(),
                state: GaussianState::coherent(CVector::zeros(q.nrows())),
            })
            .collect();
        let f = force_spectral_expectation(&samples, kappa).unwrap();
        assert!((f.vacuum - scan.value).abs() <= 1e-12 * scan.value.abs().max(1.0));
        assert_eq!(f.injected, 0.0);
    }
}

#[test]
fn damping_extrapolation_and_tail() {
    let scan = vacuum_force(&asymmetric(), &band(), 0.02).unwrap();
    assert!(scan.tail_estimate.is_some());
    let undamped = vacuum_force(&asymmetric(), &band(), 0.0).unwrap();
    // the first-order extrapolation removes most of the damping bias
    assert!((scan.extrapolated - undamped.value).abs() < (scan.value - undamped.value).abs());
}

#[test]
fn reference_scan_is_stable_under_step_halving() {
    // stays below kW/π ≈ 20.63, where the lattice opens a 21st mode
    let s = Scenario::reference(0).unwrap();
    let energies = energy_grid(20.05 * PI, 20.6 * PI, 17);
    let scan = vacuum_force(&s, &energies, 0.0).unwrap();
    let coarse_e: Vec<f64> = energies.iter().step_by(2).copied().collect();
    let coarse_t: Vec<f64> = scan.traces.iter().step_by(2).copied().collect();
    let coarse = qws_core::vacuum::band_integral(&coarse_e, &coarse_t, 0.0);
    assert!(scan.value.is_finite() && scan.value != 0.0);
    assert_eq!(coarse.signum(), scan.value.signum());
    assert!((coarse - scan.value).abs() < 0.05 * scan.value.abs(), "{} vs {coarse}", scan.value);
}
