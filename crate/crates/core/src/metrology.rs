//! Quantum Fisher information of coherent, Gaussian and photon-number probes
//! for a parameter encoded through a GWS eigensystem, and the optimal probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockSector, SectorState};
use crate::gaussian::{polar_decompose, GaussianState, Representation};
use crate::gws::{index_of_largest_magnitude, GwsEigenSystem};
use crate::linalg::{c, hermitian_function, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Coherent,
    Gaussian,
    Noon,
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coherent" => Ok(ProbeKind::Coherent),
            "gaussian" | "squeezed" => Ok(ProbeKind::Gaussian),
            "noon" => Ok(ProbeKind::Noon),
            other => Err(Error::Domain(format!("unknown probe `{other}`"))),
        }
    }
}

/// Probe settings in the eigenchannel basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeParameters {
    /// Channels carrying light (0-based, descending-eigenvalue order).
    pub channels: Vec<usize>,
    /// Coherent amplitude per listed channel.
    pub amplitude: Vec<f64>,
    /// Squeezing strength per listed channel.
    pub squeezing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QfiReport {
    pub probe: ProbeKind,
    pub nu: f64,
    pub qfi: f64,
    pub parameters: ProbeParameters,
}

impl QfiReport {
    /// Cramér-Rao bound 1/(M F) on the variance of an unbiased estimator
    /// from M repetitions; infinite when F = 0.
    pub fn cramer_rao_bound(&self, repetitions: usize) -> f64 {
        if self.qfi > 0.0 && repetitions > 0 {
            1.0 / (repetitions as f64 * self.qfi)
        } else {
            f64::INFINITY
        }
    }
}

fn check_dims(n: usize, found: usize) -> Result<()> {
    if n == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: n, found })
    }
}

/// F = 4α†Q²α = 4‖Qα‖².
pub fn qfi_coherent(alpha: &CVector, q: &CMatrix) -> Result<f64> {
    check_dims(q.nrows(), alpha.len())?;
    Ok(4.0 * (q * alpha).norm_squared())
}

/// Per-channel occupations ν_i and photon-number covariance corrections μ_ij
/// of the Gaussian state (β, Ξ), with Ξ = P e^{iΨ}:
///
/// μ_ij = |C_ij|² + |K_ij|² − 2Re(β_i*β_j* C_ij) + 2Re(β_i*β_j K_ij),
/// C = cosh P e^{iΨᵀ} sinh Pᵀ,  K = sinh²P,
///
/// so that Cov(n_i, n_j) = δ_ij ν_i + μ_ij.
pub fn gaussian_number_covariance(beta: &CVector, xi: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = beta.len();
    check_dims(n, xi.nrows())?;
    check_dims(n, xi.ncols())?;
    let polar = polar_decompose(xi);
    let cosh_p = hermitian_function(&polar.r, f64::cosh);
    let sinh_p = hermitian_function(&polar.r, f64::sinh);
    let k = hermitian_function(&polar.r, |x| x.sinh().powi(2));
    let cc = cosh_p * polar.unitary.transpose() * sinh_p.transpose();
    let nu = (0..n).map(|i| beta[i].norm_sqr() + k[(i, i)].re).collect();
    let mu = CMatrix::from_fn(n, n, |i, j| {
        let (bi, bj) = (beta[i], beta[j]);
        let v = cc[(i, j)].norm_sqr() + k[(i, j)].norm_sqr()
            - 2.0 * (bi.conj() * bj.conj() * cc[(i, j)]).re
            + 2.0 * (bi.conj() * bj * k[(i, j)]).re;
        c(v, 0.0)
    });
    Ok((nu, mu))
}

/// F = 4Σλ_i²ν_i + 4Σλ_iλ_jμ_ij for a Gaussian state given in the eigenbasis.
pub fn qfi_gaussian(beta: &CVector, xi: &CMatrix, lambda: &[f64]) -> Result<f64> {
    check_dims(beta.len(), lambda.len())?;
    let (nu, mu) = gaussian_number_covariance(beta, xi)?;
    let mut f = 0.0;
    for i in 0..lambda.len() {
        f += lambda[i] * lambda[i] * nu[i];
        for j in 0..lambda.len() {
            f += lambda[i] * lambda[j] * mu[(i, j)].re;
        }
    }
    Ok(4.0 * f)
}

/// F for diagonal squeezing Ξ = diag(p_i e^{iψ_i}):
/// 4Σλ_i²(|β_i|² cosh 2p_i + 2cosh²p_i sinh²p_i − 2cosh p_i sinh p_i Re(β_i*² e^{iψ_i})).
pub fn qfi_gaussian_diagonal(beta: &CVector, p: &[f64], psi: &[f64], lambda: &[f64]) -> Result<f64> {
    let n = lambda.len();
    check_dims(n, beta.len())?;
    check_dims(n, p.len())?;
    check_dims(n, psi.len())?;
    Ok(4.0
        * (0..n)
            .map(|i| {
                let (ch, sh) = (p[i].cosh(), p[i].sinh());
                let b = beta[i];
                let rot = num_complex::Complex64::from_polar(1.0, psi[i]);
                lambda[i].powi(2)
                    * (b.norm_sqr() * (2.0 * p[i]).cosh() + 2.0 * ch * ch * sh * sh
                        - 2.0 * ch * sh * (b.conj() * b.conj() * rot).re)
            })
            .sum::<f64>())
}

/// √ν in the channel of largest |λ|: F = 4λ_hav²ν.
pub fn optimal_coherent_probe(sys: &GwsEigenSystem, nu: f64) -> Result<(GaussianState, QfiReport)> {
    check_nu(nu)?;
    let n = sys.dim();
    let i = sys.i_hav;
    let mut beta = CVector::zeros(n);
    if n > 0 {
        beta[i] = c(nu.sqrt(), 0.0);
    }
    let q = diagonal(&sys.values);
    let qfi = qfi_coherent(&beta, &q)?;
    let state = GaussianState {
        alpha: beta,
        z: CMatrix::zeros(n, n),
        representation: Representation::Eigen {
            w: sys.vectors.clone(),
        },
    };
    Ok((
        state,
        QfiReport {
            probe: ProbeKind::Coherent,
            nu,
            qfi,
            parameters: ProbeParameters {
                channels: vec![i],
                amplitude: vec![nu.sqrt()],
                squeezing: vec![0.0],
            },
        },
    ))
}

/// Squeezed vacuum Ξ = arsinh(√ν) e_hav e_havᵀ with zero squeezing angle:
/// F = 8λ_hav²ν(ν+1).
pub fn optimal_gaussian_probe(sys: &GwsEigenSystem, nu: f64) -> Result<(GaussianState, QfiReport)> {
    check_nu(nu)?;
    let n = sys.dim();
    if sys.values.iter().all(|&v| v == 0.0) {
        log::warn!("all GWS eigenvalues vanish; every probe has zero Fisher information");
    }
    let i = sys.i_hav;
    let r = nu.sqrt().asinh();
    let mut xi = CMatrix::zeros(n, n);
    if n > 0 {
        xi[(i, i)] = c(r, 0.0);
    }
    let beta = CVector::zeros(n);
    let qfi = qfi_gaussian(&beta, &xi, &sys.values)?;
    let state = GaussianState {
        alpha: beta,
        z: xi,
        representation: Representation::Eigen {
            w: sys.vectors.clone(),
        },
    };
    Ok((
        state,
        QfiReport {
            probe: ProbeKind::Gaussian,
            nu,
            qfi,
            parameters: ProbeParameters {
                channels: vec![i],
                amplitude: vec![0.0],
                squeezing: vec![r],
            },
        },
    ))
}

/// (|ν e_first⟩ + |ν e_last⟩)/√2 in the eigenchannel basis, phases zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoonProbe {
    pub modes: usize,
    pub photons: usize,
    pub first: usize,
    pub last: usize,
}

impl NoonProbe {
    pub fn sector_state(&self) -> Result<SectorState> {
        let sector = FockSector::new(self.modes, self.photons)?;
        let mut amps = CVector::zeros(sector.dim());
        let mut occ = vec![0; self.modes];
        occ[self.first] = self.photons;
        let a = sector.index_of(&occ).expect("occupation in sector");
        occ[self.first] = 0;
        occ[self.last] = self.photons;
        let b = sector.index_of(&occ).expect("occupation in sector");
        let w = std::f64::consts::FRAC_1_SQRT_2;
        amps[a] += c(w, 0.0);
        amps[b] += c(w, 0.0);
        Ok(SectorState::in_sector(sector, amps))
    }
}

/// NOON state across the extreme channels: F = (λ_1 − λ_N)²ν².
pub fn optimal_noon_probe(lambda: &[f64], nu: usize) -> Result<(NoonProbe, QfiReport)> {
    let n = lambda.len();
    if n < 2 {
        return Err(Error::Domain("NOON probes need at least two channels".into()));
    }
    if nu < 1 {
        return Err(Error::Domain("NOON probes need at least one photon".into()));
    }
    let spread = lambda[0] - lambda[n - 1];
    if spread == 0.0 {
        log::warn!("degenerate GWS spectrum; the NOON probe carries no information");
    }
    let qfi = spread * spread * (nu as f64).powi(2);
    Ok((
        NoonProbe {
            modes: n,
            photons: nu,
            first: 0,
            last: n - 1,
        },
        QfiReport {
            probe: ProbeKind::Noon,
            nu: nu as f64,
            qfi,
            parameters: ProbeParameters {
                channels: vec![0, n - 1],
                amplitude: vec![std::f64::consts::FRAC_1_SQRT_2; 2],
                squeezing: vec![0.0; 2],
            },
        },
    ))
}

/// ν²(λ_1 − λ_N)²/4: the largest variance of Q̂ over states of sharp photon
/// number ν.
pub fn popoviciu_bound(lambda: &[f64], nu: f64) -> f64 {
    match (lambda.first(), lambda.last()) {
        (Some(a), Some(b)) => nu * nu * (a - b).powi(2) / 4.0,
        _ => 0.0,
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mean photon number {nu} must be >= 0")))
    }
}

fn diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// GWS eigensystem of diag(λ) for a spectrum given directly.
pub fn spectrum_system(lambda: &[f64]) -> GwsEigenSystem {
    let mut values = lambda.to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    let n = values.len();
    GwsEigenSystem {
        i_hav: index_of_largest_magnitude(&values),
        i_max: 0,
        i_min: n.saturating_sub(1),
        vectors: CMatrix::identity(n, n),
        values,
    }
}

/// Spectrum of `n` eigenvalues drawn from U(−1, 1), sorted descending.
pub fn uniform_spectrum(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Integer photon numbers spread logarithmically over [lo, hi], deduplicated.
pub fn integer_log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.max(1.0).ln(), hi.max(lo).ln());
    let mut out: Vec<f64> = (0..points.max(2))
        .map(|i| (a + (b - a) * i as f64 / (points.max(2) - 1) as f64).exp().round())
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub nu: f64,
    #[serde(rename = "F_coherent")]
    pub coherent: f64,
    #[serde(rename = "F_gaussian")]
    pub gaussian: f64,
    #[serde(rename = "F_noon")]
    pub noon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Log-log slopes (coherent, Gaussian, NOON) over the top decade of ν.
    pub slopes: [f64; 3],
}

/// QFI of the three optimal probe families on a grid of ν. NOON values use
/// the nearest integer photon number.
pub fn scaling_experiment(lambda: &[f64], nu_grid: &[f64]) -> Result<ScalingTable> {
    if nu_grid.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("photon-number grid must be positive".into()));
    }
    let sys = spectrum_system(lambda);
    let rows = nu_grid
        .par_iter()
        .map(|&nu| {
            Ok(ScalingRow {
                nu,
                coherent: optimal_coherent_probe(&sys, nu)?.1.qfi,
                gaussian: optimal_gaussian_probe(&sys, nu)?.1.qfi,
                noon: optimal_noon_probe(&sys.values, nu.round().max(1.0) as usize)?.1.qfi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let top = nu_grid.iter().cloned().fold(0.0, f64::max);
    let decade: Vec<&ScalingRow> = rows.iter().filter(|r| r.nu >= top / 10.0).collect();
    let slope = |f: fn(&ScalingRow) -> f64| {
        let pts: Vec<(f64, f64)> = decade
            .iter()
            .filter(|r| f(r) > 0.0)
            .map(|r| (r.nu.ln(), f(r).ln()))
            .collect();
        least_squares_slope(&pts)
    };
    let slopes = [
        slope(|r| r.coherent),
        slope(|r| r.gaussian),
        slope(|r| r.noon),
    ];
    Ok(ScalingTable { rows, slopes })
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Uniformly random normalized amplitudes on the ν-photon sector.
pub fn random_number_state<R: Rng + ?Sized>(rng: &mut R, modes: usize, photons: usize) -> Result<SectorState> {
    let sector = FockSector::new(modes, photons)?;
    let v = crate::linalg::sampling::random_vector(rng, sector.dim());
    let v = &v / c(v.norm(), 0.0);
    Ok(SectorState::in_sector(sector, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::truncated_gaussian_vector;
    use crate::linalg::sampling::random_vector;
    use proptest::prelude::*;

    #[test]
    fn coherent_examples() {
        let q = diagonal(&[1.0, -1.0]);
        let nu = 3.0;
        let a = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]) * c((nu / 2.0f64).sqrt(), 0.0);
        assert!((qfi_coherent(&a, &q).unwrap() - 4.0 * nu).abs() < 1e-12);
        assert_eq!(qfi_coherent(&CVector::zeros(2), &q).unwrap(), 0.0);
        assert!(qfi_coherent(&CVector::zeros(3), &q).is_err());
    }

    #[test]
    fn optimal_probe_values() {
        let sys = spectrum_system(&[1.0, 0.3, -0.2]);
        let (_, g) = optimal_gaussian_probe(&sys, 1.0).unwrap();
        assert!((g.qfi - 16.0).abs() < 1e-12);
        let (_, g0) = optimal_gaussian_probe(&sys, 0.0).unwrap();
        assert_eq!(g0.qfi, 0.0);
        let (_, n) = optimal_noon_probe(&[1.0, -1.0], 2).unwrap();
        assert!((n.qfi - 16.0).abs() < 1e-12);
        assert!(optimal_noon_probe(&[1.0], 2).is_err());
        assert_eq!(popoviciu_bound(&[1.0, -1.0], 0.0), 0.0);
        assert!((g.cramer_rao_bound(4) - 1.0 / 64.0).abs() < 1e-15);
        assert!(g0.cramer_rao_bound(4).is_infinite());
    }

    #[test]
    fn gaussian_beats_coherent_and_twice_noon() {
        for seed in 0..20 {
            let lambda = uniform_spectrum(8, seed);
            let sys = spectrum_system(&lambda);
            for nu in [0.5, 1.0, 2.0, 10.0, 100.0] {
                let g = optimal_gaussian_probe(&sys, nu).unwrap().1.qfi;
                let coh = optimal_coherent_probe(&sys, nu).unwrap().1.qfi;
                assert!(g > coh);
                let lh = sys.lambda_hav();
                assert!((g - 8.0 * lh * lh * nu * (nu + 1.0)).abs() <= 1e-12 * g);
                if nu >= 1.0 {
                    let noon = optimal_noon_probe(&lambda, nu as usize).unwrap().1.qfi;
                    assert!(g >= 2.0 * noon);
                }
            }
        }
    }

    #[test]
    fn phase_squeezed_diagonal_form() {
        // ψ_i = 2 arg β_i + π turns the bracket into |β|² e^{2p} + 2cosh²p sinh²p
        let beta = CVector::from_vec(vec![c(0.3, 0.9), c(-1.1, 0.2)]);
        let p: [f64; 2] = [0.4, 0.25];
        let psi: Vec<f64> = (0..2).map(|i| 2.0 * beta[i].arg() + std::f64::consts::PI).collect();
        let lambda: [f64; 2] = [0.7, -1.3];
        let closed: f64 = 4.0
            * (0..2)
                .map(|i| {
                    lambda[i].powi(2)
                        * (beta[i].norm_sqr() * (2.0 * p[i]).exp()
                            + 2.0 * p[i].cosh().powi(2) * p[i].sinh().powi(2))
                })
                .sum::<f64>();
        let diag = qfi_gaussian_diagonal(&beta, &p, &psi, &lambda).unwrap();
        let xi = CMatrix::from_diagonal(&CVector::from_iterator(
            2,
            (0..2).map(|i| num_complex::Complex64::from_polar(p[i], psi[i])),
        ));
        let general = qfi_gaussian(&beta, &xi, &lambda).unwrap();
        assert!((diag - closed).abs() < 1e-12 * closed);
        assert!((general - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn single_mode_variance_against_fock_expansion() {
        let (beta, p, psi) = (c(0.8, -0.4), 0.35, 1.2);
        let v = truncated_gaussian_vector(beta, p, psi, 60).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (n, a) in v.iter().enumerate() {
            m1 += n as f64 * a.norm_sqr();
            m2 += (n * n) as f64 * a.norm_sqr();
        }
        let lambda = [1.7];
        let f = qfi_gaussian(
            &CVector::from_vec(vec![beta]),
            &CMatrix::from_element(1, 1, num_complex::Complex64::from_polar(p, psi)),
            &lambda,
        )
        .unwrap();
        assert!((f - 4.0 * lambda[0].powi(2) * (m2 - m1 * m1)).abs() < 1e-9 * f);
    }

    #[test]
    fn scaling_slopes() {
        let lambda = uniform_spectrum(40, 7);
        let grid = integer_log_grid(1.0, 1e4, 60);
        let table = scaling_experiment(&lambda, &grid).unwrap();
        assert!((table.slopes[0] - 1.0).abs() <= 0.01);
        assert!((table.slopes[1] - 2.0).abs() <= 0.02);
        assert!((table.slopes[2] - 2.0).abs() <= 0.02);
        let last = table.rows.last().unwrap();
        assert!(last.gaussian > last.noon && last.noon > last.coherent);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn unsqueezed_gaussian_is_coherent(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let beta = random_vector(&mut rng, n);
            let lambda = uniform_spectrum(n, seed);
            let g = qfi_gaussian(&beta, &CMatrix::zeros(n, n), &lambda).unwrap();
            let coh = qfi_coherent(&beta, &diagonal(&lambda)).unwrap();
            prop_assert!((g - coh).abs() <= 1e-12 * coh.max(1.0));
        }

        #[test]
        fn optimal_families_are_monotone(seed in any::<u64>(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let sys = spectrum_system(&uniform_spectrum(5, seed));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(optimal_gaussian_probe(&sys, lo).unwrap().1.qfi <= optimal_gaussian_probe(&sys, hi).unwrap().1.qfi);
            prop_assert!(optimal_coherent_probe(&sys, lo).unwrap().1.qfi <= optimal_coherent_probe(&sys, hi).unwrap().1.qfi);
            let (ilo, ihi) = (lo.floor().max(1.0) as usize, hi.floor().max(1.0) as usize);
            prop_assert!(optimal_noon_probe(&sys.values, ilo).unwrap().1.qfi <= optimal_noon_probe(&sys.values, ihi).unwrap().1.qfi);
        }
    }
}
