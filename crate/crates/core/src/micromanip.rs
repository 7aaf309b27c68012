//! Optimal force states: all photons in the channel of largest GWS
//! eigenvalue, then amplitude squeezing to minimize the force fluctuations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{db_of, GaussianState, Representation};
use crate::gws::GwsEigenSystem;
use crate::linalg::{c, trace, CMatrix, CVector};
use crate::vacuum::{band_integral, trapezoid};

/// Σν_iλ_i + ½Σλ_i.
pub fn qws_expectation(occupations: &[f64], lambda: &[f64]) -> Result<f64> {
    if occupations.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda.len(),
            found: occupations.len(),
        });
    }
    if occupations.iter().any(|&n| !(n >= 0.0)) {
        return Err(Error::Domain("occupations must be non-negative".into()));
    }
    Ok(occupations.iter().zip(lambda).map(|(n, l)| n * l).sum::<f64>()
        + 0.5 * lambda.iter().sum::<f64>())
}

/// Closed-form squeezing that minimizes ν e^{−2p} + sinh²p (1 + sinh 2p),
/// the single-channel variance of Q̂ at fixed mean photon number ν.
pub fn p_opt(nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let s = 1.0 + 2.0 * nu;
    let radicand = 2916.0 * s.powi(4) - 1728.0;
    if radicand < 0.0 {
        return Err(Error::Domain(format!("negative radicand {radicand} at ν = {nu}")));
    }
    let h = (54.0 * s * s + radicand.sqrt()).cbrt();
    let g = 4.0 / h + h / 3.0;
    let sg = g.sqrt();
    let p = 0.5 * (0.5 * (sg + (4.0 * s / sg - g).sqrt())).ln();
    // rounding can leave p a few ulps outside the feasible interval
    Ok(p.clamp(0.0, nu.sqrt().asinh()))
}

/// (1/6) ln(4ν), the large-ν behaviour of [`p_opt`].
pub fn p_opt_asymptotic(nu: f64) -> f64 {
    (4.0 * nu).ln() / 6.0
}

/// Variance of Q̂ per λ² for amplitude squeezing in one channel.
pub fn squeezed_variance(beta_abs: f64, p: f64) -> f64 {
    beta_abs * beta_abs * (-2.0 * p).exp() + 2.0 * (p.cosh() * p.sinh()).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinVarianceGaussian {
    pub nu: f64,
    pub beta_abs: f64,
    pub p: f64,
    /// σ_sq/σ_cl; 1 at ν = 0 where both vanish.
    pub sigma_ratio: f64,
}

impl MinVarianceGaussian {
    pub fn p_db(&self) -> f64 {
        db_of(self.p)
    }
}

/// |β_opt| = √(ν − sinh²p_opt) together with p_opt and σ_sq/σ_cl.
pub fn min_variance_gaussian(nu: f64) -> Result<MinVarianceGaussian> {
    let p = p_opt(nu)?;
    let beta_abs = (nu - p.sinh().powi(2)).max(0.0).sqrt();
    let sigma_ratio = if nu > 0.0 {
        (squeezed_variance(beta_abs, p) / nu).sqrt()
    } else {
        1.0
    };
    Ok(MinVarianceGaussian {
        nu,
        beta_abs,
        p,
        sigma_ratio,
    })
}

pub fn reduction_factor(nu: f64) -> Result<f64> {
    Ok(min_variance_gaussian(nu)?.sigma_ratio)
}

/// Optimal squeezing over a grid of mean photon numbers.
pub fn manipulation_table(nu_grid: &[f64]) -> Result<Vec<MinVarianceGaussian>> {
    nu_grid.iter().map(|&nu| min_variance_gaussian(nu)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceReport {
    pub i_max: usize,
    pub mean_force: f64,
    pub vacuum_term: f64,
    pub sigma: f64,
    pub beta_abs: f64,
    pub p: f64,
    pub psi: f64,
}

/// ν photons in channel i_max, amplitude-squeezed with real β so ψ = 0.
pub fn optimal_force_probe(sys: &GwsEigenSystem, nu: f64) -> Result<(GaussianState, ForceReport)> {
    let n = sys.dim();
    if n == 0 {
        return Err(Error::Domain("no channels".into()));
    }
    let opt = min_variance_gaussian(nu)?;
    let i = sys.i_max;
    let lambda_max = sys.lambda_max();
    let mut occupations = vec![0.0; n];
    occupations[i] = nu;
    let mean_force = qws_expectation(&occupations, &sys.values)?;
    let mut alpha = CVector::zeros(n);
    alpha[i] = c(opt.beta_abs, 0.0);
    let mut z = CMatrix::zeros(n, n);
    z[(i, i)] = c(opt.p, 0.0);
    let state = GaussianState {
        alpha,
        z,
        representation: Representation::Eigen {
            w: sys.vectors.clone(),
        },
    };
    Ok((
        state,
        ForceReport {
            i_max: i,
            mean_force,
            vacuum_term: 0.5 * sys.trace(),
            sigma: lambda_max.abs() * squeezed_variance(opt.beta_abs, opt.p).sqrt(),
            beta_abs: opt.beta_abs,
            p: opt.p,
            psi: 0.0,
        },
    ))
}

/// mean − κσ. Experimental: the mean-first ordering used by
/// [`optimal_force_probe`] is the supported optimization.
pub fn scalarized_objective(mean: f64, sigma: f64, kappa: f64) -> f64 {
    mean - kappa * sigma
}

/// One frequency bin of a spectrally extended probe.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub energy: f64,
    /// |c(E)|²
    pub weight: f64,
    /// Q_θ(E) in the lead-mode basis.
    pub q: CMatrix,
    pub state: GaussianState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralForce {
    pub injected: f64,
    pub vacuum: f64,
}

impl SpectralForce {
    pub fn total(&self) -> f64 {
        self.injected + self.vacuum
    }
}

/// ⟨[a†]ᵀQ[a]⟩ = α†Qα + tr(Q sinh²R) for a Gaussian state in lead modes.
pub fn normal_ordered_expectation(q: &CMatrix, state: &GaussianState) -> Result<f64> {
    let modes = state.to_modes();
    if modes.dim() != q.nrows() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            found: modes.dim(),
        });
    }
    Ok(modes.alpha.dotc(&(q * &modes.alpha)).re + trace(&(q * modes.sinh_squared())).re)
}

/// (1/2π)∫⟨ψ_E|[a†]ᵀQ[a]|ψ_E⟩|c(E)|²dE and (1/4π)∫tr Q e^{−κE}dE by the
/// trapezoid rule over the sample energies; bins are treated as independent.
pub fn force_spectral_expectation(samples: &[SpectralSample], kappa: f64) -> Result<SpectralForce> {
    if samples.len() < 2 || samples.windows(2).any(|w| !(w[1].energy > w[0].energy)) {
        return Err(Error::Domain(
            "spectral samples need at least two strictly increasing energies".into(),
        ));
    }
    if let Some(s) = samples.iter().find(|s| s.q.nrows() == 0) {
        return Err(Error::Domain(format!(
            "energy {} lies outside the open band of the solver",
            s.energy
        )));
    }
    let energies: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let injected_density = samples
        .par_iter()
        .map(|s| {
            if s.weight == 0.0 {
                Ok(0.0)
            } else {
                Ok(normal_ordered_expectation(&s.q, &s.state)? * s.weight)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let traces: Vec<f64> = samples.iter().map(|s| trace(&s.q).re).collect();
    Ok(SpectralForce {
        injected: trapezoid(&energies, &injected_density) / (2.0 * std::f64::consts::PI),
        vacuum: band_integral(&energies, &traces, kappa),
    })
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mean photon number {nu} must be >= 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::spectrum_system;
    use proptest::prelude::*;

    /// Minimizer of ν e^{−2p} + sinh²p(1 + sinh 2p) by bisection on the sign
    /// of its derivative over [0, arsinh √ν].
    fn bisection_minimizer(nu: f64) -> f64 {
        let d = |p: f64| {
            -2.0 * nu * (-2.0 * p).exp()
                + (2.0 * p).sinh() * (1.0 + (2.0 * p).sinh())
                + 2.0 * p.sinh().powi(2) * (2.0 * p).cosh()
        };
        let (mut lo, mut hi) = (0.0, nu.sqrt().asinh());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn forty_nine_photons() {
        let opt = min_variance_gaussian(49.0).unwrap();
        assert!((opt.p_db() - 7.65).abs() <= 0.01, "{}", opt.p_db());
        assert!(opt.sigma_ratio <= 0.5);
        assert!((p_opt_asymptotic(49.0) - opt.p).abs() < 0.05);
    }

    #[test]
    fn closed_form_matches_minimizer() {
        for nu in [1.0, 10.0, 100.0, 1e4] {
            let p = p_opt(nu).unwrap();
            assert!((p - bisection_minimizer(nu)).abs() <= 1e-9, "ν = {nu}");
        }
        let big = 1e6;
        assert!((p_opt(big).unwrap() - p_opt_asymptotic(big)).abs() <= 1e-4);
        assert_eq!(p_opt_asymptotic(0.25), 0.0);
    }

    #[test]
    fn zero_photons() {
        let opt = min_variance_gaussian(0.0).unwrap();
        assert!(opt.p.abs() < 1e-12);
        assert!(opt.beta_abs < 1e-6);
        assert!(squeezed_variance(opt.beta_abs, opt.p) < 1e-12);
        assert!(p_opt(-1.0).is_err());
    }

    #[test]
    fn expectation_values() {
        let lambda = [2.0, 0.5, -1.0];
        assert_eq!(qws_expectation(&[0.0; 3], &lambda).unwrap(), 0.75);
        assert_eq!(qws_expectation(&[3.0, 0.0, 0.0], &lambda).unwrap(), 6.75);
        assert!(qws_expectation(&[1.0, -1.0, 0.0], &lambda).is_err());
        let sys = spectrum_system(&lambda);
        let (_, report) = optimal_force_probe(&sys, 3.0).unwrap();
        assert_eq!(report.mean_force, 6.75);
        assert_eq!(report.vacuum_term, 0.75);
        assert!(report.sigma >= 0.0);
    }

    #[test]
    fn coherent_bin_matches_discretized_integral() {
        let q = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c([1.5, -0.5][i], 0.0)
            } else {
                c(0.2, if i < j { 0.3 } else { -0.3 })
            }
        });
        let alpha = CVector::from_vec(vec![c(0.4, -0.2), c(1.1, 0.5)]);
        let de = 0.1;
        let mk = |e: f64, w: f64| SpectralSample {
            energy: e,
            weight: w,
            q: q.clone(),
            state: GaussianState::coherent(alpha.clone()),
        };
        let single = [mk(1.0, 0.0), mk(1.1, 0.7), mk(1.2, 0.0)];
        let got = force_spectral_expectation(&single, 0.0).unwrap();
        let expected = de / (2.0 * std::f64::consts::PI) * 0.7 * alpha.dotc(&(&q * &alpha)).re;
        assert!((got.injected - expected).abs() < 1e-14);
        let dark: Vec<_> = single.iter().map(|s| SpectralSample { weight: 0.0, ..s.clone() }).collect();
        let none = force_spectral_expectation(&dark, 0.0).unwrap();
        assert_eq!(none.injected, 0.0);
        assert_eq!(none.total(), none.vacuum);
    }

    proptest! {
        #[test]
        fn squeezing_never_hurts(nu in 1e-6f64..1e5) {
            let opt = min_variance_gaussian(nu).unwrap();
            prop_assert!(opt.sigma_ratio < 1.0);
            prop_assert!(opt.p >= 0.0 && opt.p <= nu.sqrt().asinh());
            prop_assert!((opt.beta_abs.powi(2) + opt.p.sinh().powi(2) - nu).abs() <= 1e-12 * nu.max(1.0));
        }

        #[test]
        fn optimal_mean_is_maximal(seed in any::<u64>(), nu in 0.0f64..50.0) {
            use rand::{Rng, SeedableRng};
            let lambda = crate::metrology::uniform_spectrum(6, seed);
            let sys = spectrum_system(&lambda);
            let best = optimal_force_probe(&sys, nu).unwrap().1.mean_force;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let raw: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                let occ: Vec<f64> = raw.iter().map(|r| r / total * nu).collect();
                prop_assert!(qws_expectation(&occ, &lambda).unwrap() <= best + 1e-12 * (1.0 + best.abs()));
            }
        }
    }
}
