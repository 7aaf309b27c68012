//! Generalized Wigner-Smith matrices Q_θ = −i S†∂θS from finite differences
//! of the scattering matrix, their eigenchannels and the total scattering
//! phase η = −i ln det S.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    c, det, hermitian_eigen, hermitian_part, hermiticity_defect, small_eigenphase_sum, trace,
    unitarity_defect, CMatrix, CVector, I,
};
use crate::scenario::{Scenario, ThetaKind};
use crate::solver::{lead_modes, scattering_matrix, Grid, ScatteringMatrix};

/// Unitarity defect of an S sample above which Q is not formed.
pub const DEFAULT_UNITARITY_THRESHOLD: f64 = 1e-6;

/// Default position step as a fraction of the grid spacing.
pub const POSITION_STEP_FRACTION: f64 = 1e-2;

/// Default frequency step relative to k.
pub const FREQUENCY_STEP_FRACTION: f64 = 1e-4;

/// Finite-difference step used when the scenario does not set one.
pub fn default_step(scenario: &Scenario, kind: ThetaKind) -> f64 {
    match kind {
        ThetaKind::TargetX | ThetaKind::TargetY => {
            POSITION_STEP_FRACTION * Grid::for_scenario(scenario).spacing
        }
        ThetaKind::Frequency => FREQUENCY_STEP_FRACTION * scenario.k,
    }
}

/// S sampled around a reference θ: at the midpoint, at ±h/2 and, for
/// Richardson extrapolation, at ±h/4.
#[derive(Debug, Clone)]
pub struct ThetaSamples {
    pub step: f64,
    pub mid: CMatrix,
    pub outer: (CMatrix, CMatrix),
    pub inner: Option<(CMatrix, CMatrix)>,
    /// Largest unitarity defect over all samples.
    pub max_unitarity_defect: f64,
}

impl ThetaSamples {
    /// Samples an arbitrary family S(θ₀ + δ) given as a closure of δ.
    pub fn from_family(
        step: f64,
        richardson: bool,
        family: impl Fn(f64) -> Result<CMatrix> + Sync,
    ) -> Result<Self> {
        let mut offsets = vec![0.0, 0.5 * step, -0.5 * step];
        if richardson {
            offsets.extend([0.25 * step, -0.25 * step]);
        }
        let mut mats = offsets
            .par_iter()
            .map(|&d| family(d))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mid = mats.next().expect("midpoint sample");
        let outer = (mats.next().expect("+h/2"), mats.next().expect("−h/2"));
        let inner = if richardson {
            Some((mats.next().expect("+h/4"), mats.next().expect("−h/4")))
        } else {
            None
        };
        let max_unitarity_defect = std::iter::once(&mid)
            .chain([&outer.0, &outer.1])
            .chain(inner.iter().flat_map(|(a, b)| [a, b]))
            .map(unitarity_defect)
            .fold(0.0, f64::max);
        Ok(Self {
            step,
            mid,
            outer,
            inner,
            max_unitarity_defect,
        })
    }

    /// Samples the scenario's S along its θ.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        let kind = scenario.theta.kind;
        let step = scenario
            .theta
            .step
            .unwrap_or_else(|| default_step(scenario, kind));
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "finite-difference step must be positive, got {step}"
            )));
        }
        Self::from_family(step, scenario.theta.richardson, |d| {
            Ok(scattering_matrix(&scenario.displaced(kind, d))?.matrix)
        })
    }

    pub fn dim(&self) -> usize {
        self.mid.nrows()
    }

    /// Central-difference ∂θS, Richardson-extrapolated when inner samples exist.
    pub fn derivative(&self) -> CMatrix {
        let coarse = (&self.outer.0 - &self.outer.1) / c(self.step, 0.0);
        match &self.inner {
            None => coarse,
            Some((p, m)) => {
                let fine = (p - m) / c(0.5 * self.step, 0.0);
                (fine * c(4.0, 0.0) - coarse) / c(3.0, 0.0)
            }
        }
    }

    /// Finite-difference dη/dθ from the eigenphases of S₋†S₊, with the same
    /// extrapolation as [`ThetaSamples::derivative`].
    pub fn phase_derivative(&self) -> Result<f64> {
        let increment = |plus: &CMatrix, minus: &CMatrix| -> Result<f64> {
            small_eigenphase_sum(&(minus.adjoint() * plus)).ok_or_else(|| {
                Error::PhaseAliasing(
                    "S changes by more than a quarter turn across the step; reduce it".into(),
                )
            })
        };
        let coarse = increment(&self.outer.0, &self.outer.1)? / self.step;
        match &self.inner {
            None => Ok(coarse),
            Some((p, m)) => {
                let fine = increment(p, m)? / (0.5 * self.step);
                Ok((4.0 * fine - coarse) / 3.0)
            }
        }
    }
}

/// Hermitian GWS matrix for one parameter θ.
#[derive(Debug, Clone)]
pub struct GwsMatrix {
    pub matrix: CMatrix,
    pub kind: ThetaKind,
    pub step: f64,
    pub richardson: bool,
    /// Frobenius norm of the anti-Hermitian part before symmetrization.
    pub hermiticity_defect: f64,
}

impl GwsMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }
}

/// −i S†∂θS at the midpoint sample, symmetrized.
pub fn gws_from_samples(samples: &ThetaSamples, kind: ThetaKind) -> GwsMatrix {
    let raw = samples.mid.adjoint() * samples.derivative() * (-I);
    GwsMatrix {
        hermiticity_defect: hermiticity_defect(&raw),
        matrix: hermitian_part(&raw),
        kind,
        step: samples.step,
        richardson: samples.inner.is_some(),
    }
}

/// Q_θ for the scenario's θ, after checking every S sample is unitary.
pub fn gws_matrix(scenario: &Scenario) -> Result<GwsMatrix> {
    gws_matrix_checked(scenario, DEFAULT_UNITARITY_THRESHOLD)
}

pub fn gws_matrix_checked(scenario: &Scenario, threshold: f64) -> Result<GwsMatrix> {
    let samples = ThetaSamples::for_scenario(scenario)?;
    check_samples(&samples, threshold)?;
    Ok(gws_from_samples(&samples, scenario.theta.kind))
}

pub fn check_samples(samples: &ThetaSamples, threshold: f64) -> Result<()> {
    if samples.max_unitarity_defect > threshold {
        return Err(Error::SolverQuality {
            defect: samples.max_unitarity_defect,
            threshold,
        });
    }
    Ok(())
}

/// Group delays L dk_m^x/dω of the empty lead modes, one per channel in S
/// order, using the lattice dispersion and the lattice length.
pub fn empty_guide_delays(scenario: &Scenario) -> Result<Vec<f64>> {
    let grid = Grid::for_scenario(scenario);
    let lead = lead_modes(scenario.k, &grid, Some(0))?;
    let length = grid.length();
    let per_mode: Vec<f64> = (1..=lead.open)
        .map(|m| length / lead.group_velocity(m))
        .collect();
    Ok(per_mode.iter().chain(per_mode.iter()).copied().collect())
}

/// Eigenchannels of a GWS matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct GwsEigenSystem {
    pub values: Vec<f64>,
    /// Unitary W with the eigenvectors as columns.
    pub vectors: CMatrix,
    pub i_max: usize,
    pub i_min: usize,
    /// Channel of largest |λ|; ties go to the positive eigenvalue.
    pub i_hav: usize,
}

impl GwsEigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[self.i_max]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.i_min]
    }

    pub fn lambda_hav(&self) -> f64 {
        self.values[self.i_hav]
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    /// W diag(Λ) W†
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Index of largest |λ| in a descending spectrum; ties favour the positive end.
pub fn index_of_largest_magnitude(values: &[f64]) -> usize {
    let n = values.len();
    if n == 0 {
        return 0;
    }
    if values[n - 1].abs() > values[0].abs() {
        n - 1
    } else {
        0
    }
}

/// Relative gap below which eigenvalues are treated as one degenerate cluster.
const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Diagonalizes a Hermitian matrix with deterministic eigenvectors.
///
/// Within a degenerate cluster the basis is the Gram-Schmidt orthonormalization
/// of the cluster projector applied to e_1, e_2, …, which makes the first
/// nonzero entries follow lexicographic order. Each vector is then rotated so
/// that its largest-magnitude entry (first one on ties) is real and positive.
pub fn eigendecompose(q: &CMatrix) -> GwsEigenSystem {
    let n = q.nrows();
    let (values, raw) = hermitian_eigen(q);
    let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let mut vectors = CMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] <= DEGENERACY_TOLERANCE * scale {
            end += 1;
        }
        let block = raw.columns(start, end - start).into_owned();
        let basis = if end - start == 1 {
            block
        } else {
            canonical_cluster_basis(&block)
        };
        for (offset, col) in basis.column_iter().enumerate() {
            vectors.set_column(start + offset, &fix_phase(col.into_owned()));
        }
        start = end;
    }
    let i_hav = index_of_largest_magnitude(&values);
    GwsEigenSystem {
        i_max: 0,
        i_min: n.saturating_sub(1),
        i_hav,
        values,
        vectors,
    }
}

fn canonical_cluster_basis(block: &CMatrix) -> CMatrix {
    let (n, d) = block.shape();
    let projector = block * block.adjoint();
    let mut basis: Vec<CVector> = Vec::with_capacity(d);
    for e in 0..n {
        if basis.len() == d {
            break;
        }
        let mut v = projector.column(e).into_owned();
        for b in &basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / c(norm, 0.0));
        }
    }
    CMatrix::from_columns(&basis)
}

fn fix_phase(mut v: CVector) -> CVector {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // small relative slack keeps the choice stable against rounding noise
        if z.norm() > best_mag * (1.0 + 1e-9) {
            best = i;
            best_mag = z.norm();
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / best_mag;
        v *= phase;
        v[best] = c(v[best].re, 0.0);
    }
    v
}

/// α†Qα, real for Hermitian Q.
pub fn expected_classical_force(alpha: &CVector, q: &CMatrix) -> Result<f64> {
    if alpha.len() != q.nrows() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            found: alpha.len(),
        });
    }
    Ok(alpha.dotc(&(q * alpha)).re)
}

/// Unwrapped total scattering phase along a sequence of S matrices.
///
/// Consecutive samples of equal dimension are linked through the eigenphases
/// of S_{i−1}†S_i, which must each stay below a quarter turn. Where the channel
/// count changes (a mode opens) the increment falls back to the principal
/// argument of det S_i / det S_{i−1}.
pub fn unwrap_scattering_phase(samples: &[CMatrix]) -> Result<Vec<f64>> {
    unwrap_phase(samples, true)
}

/// Like [`unwrap_scattering_phase`], but steps whose eigenphases exceed a
/// quarter turn fall back to the principal argument of the determinant
/// ratio instead of failing, so each step stays below π in magnitude.
pub fn unwrap_scattering_phase_lenient(samples: &[CMatrix]) -> Vec<f64> {
    unwrap_phase(samples, false).expect("lenient unwrapping cannot fail")
}

fn unwrap_phase(samples: &[CMatrix], strict: bool) -> Result<Vec<f64>> {
    let mut eta = Vec::with_capacity(samples.len());
    let Some(first) = samples.first() else {
        return Ok(eta);
    };
    eta.push(det(first).arg());
    for (idx, pair) in samples.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        let principal = || (det(next) / det(prev)).arg();
        let step = if prev.nrows() == next.nrows() {
            match small_eigenphase_sum(&(prev.adjoint() * next)) {
                Some(v) => v,
                None if !strict => {
                    log::warn!("eigenphases alias between samples {idx} and {}; using det ratio", idx + 1);
                    principal()
                }
                None => {
                    return Err(Error::PhaseAliasing(format!(
                        "scattering phase jumps by π or more between samples {idx} and {}; refine the scan",
                        idx + 1
                    )))
                }
            }
        } else {
            principal()
        };
        eta.push(eta[idx] + step);
    }
    Ok(eta)
}

/// η(θ) and tr Q_θ over a grid of θ offsets from the scenario's reference.
#[derive(Debug, Clone)]
pub struct PhaseScan {
    pub kind: ThetaKind,
    pub offsets: Vec<f64>,
    pub eta: Vec<f64>,
    pub trace: Vec<f64>,
}

pub fn scattering_phase_scan(scenario: &Scenario, offsets: &[f64]) -> Result<PhaseScan> {
    let kind = scenario.theta.kind;
    let results = offsets
        .par_iter()
        .map(|&d| {
            let (s, q) = smatrix_and_gws(&scenario.displaced(kind, d))?;
            Ok((s.matrix, q.trace()))
        })
        .collect::<Result<Vec<(CMatrix, f64)>>>()?;
    let (mats, trace): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(PhaseScan {
        kind,
        offsets: offsets.to_vec(),
        eta: unwrap_scattering_phase(&mats)?,
        trace,
    })
}

/// dη/dθ against tr Q_θ from one set of samples.
#[derive(Debug, Clone, Copy)]
pub struct KreinCheck {
    pub phase_derivative: f64,
    pub trace: f64,
    pub relative_defect: f64,
}

pub fn krein_check(samples: &ThetaSamples, kind: ThetaKind) -> Result<KreinCheck> {
    let phase_derivative = samples.phase_derivative()?;
    let trace = gws_from_samples(samples, kind).trace();
    Ok(KreinCheck {
        phase_derivative,
        trace,
        relative_defect: (phase_derivative - trace).abs() / trace.abs().max(f64::MIN_POSITIVE),
    })
}

/// Convenience wrapper returning S at the reference θ together with Q.
pub fn smatrix_and_gws(scenario: &Scenario) -> Result<(ScatteringMatrix, GwsMatrix)> {
    let samples = ThetaSamples::for_scenario(scenario)?;
    check_samples(&samples, DEFAULT_UNITARITY_THRESHOLD)?;
    let q = gws_from_samples(&samples, scenario.theta.kind);
    Ok((ScatteringMatrix::new(samples.mid, scenario.k), q))
}
