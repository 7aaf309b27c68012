//! Exact number-sector representations of passive linear optics, used as a
//! brute-force reference for the closed-form quantum results.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gws::ThetaSamples;
use crate::linalg::{c, det, exp_i_hermitian, trace, unitarity_defect, CMatrix, CVector, C64, I};

/// Largest sector dimension built by default.
pub const DEFAULT_SECTOR_CAP: usize = 10_000;

/// Required ‖S†S − 1‖_F for a sector unitary.
pub const SECTOR_UNITARY_TOLERANCE: f64 = 1e-8;

/// C(n + k − 1, n): number of ways to put n photons into k modes.
pub fn sector_dimension(modes: usize, photons: usize) -> usize {
    if modes == 0 {
        return usize::from(photons == 0);
    }
    let mut value: u128 = 1;
    for i in 1..=photons as u128 {
        value = value * (modes as u128 - 1 + i) / i;
        if value > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    value as usize
}

/// All occupation vectors of `modes` modes holding `photons` photons, in
/// reverse-lexicographic order: (ν, 0, …), (ν−1, 1, 0, …), …, (0, …, ν).
#[derive(Debug, Clone)]
pub struct FockSector {
    pub modes: usize,
    pub photons: usize,
    basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FockSector {
    pub fn new(modes: usize, photons: usize) -> Result<Self> {
        Self::with_cap(modes, photons, DEFAULT_SECTOR_CAP)
    }

    pub fn with_cap(modes: usize, photons: usize, cap: usize) -> Result<Self> {
        let dimension = sector_dimension(modes, photons);
        if dimension > cap {
            return Err(Error::SectorTooLarge { dimension, cap });
        }
        let mut basis = Vec::with_capacity(dimension);
        let mut current = vec![0; modes];
        enumerate(&mut current, 0, photons, &mut basis);
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        Ok(Self {
            modes,
            photons,
            basis,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn enumerate(current: &mut Vec<usize>, mode: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if mode + 1 == current.len() {
        current[mode] = left;
        out.push(current.clone());
        return;
    }
    if current.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for n in (0..=left).rev() {
        current[mode] = n;
        enumerate(current, mode + 1, left - n, out);
    }
    current[mode] = 0;
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order.
pub fn permanent(m: &CMatrix) -> C64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent of a non-square matrix");
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut row_sums = vec![c(0.0, 0.0); n];
    let mut in_subset = vec![false; n];
    let mut total = c(0.0, 0.0);
    let mut size = 0usize;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let add = !in_subset[col];
        in_subset[col] = add;
        if add {
            size += 1;
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += m[(r, col)];
            }
        } else {
            size -= 1;
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(r, col)];
            }
        }
        let prod: C64 = row_sums.iter().product();
        if size.is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n.is_multiple_of(2) {
        total
    } else {
        -total
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn repeated_indices(occupation: &[usize]) -> Vec<usize> {
    occupation
        .iter()
        .enumerate()
        .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Unitary,
    Generator,
}

#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub matrix: CMatrix,
    pub kind: OperatorKind,
}

/// ⟨μ|Û|ν⟩ = per(S[μ, ν]) / √(Πμ_i! Πν_j!) for Û a_j† Û† = Σ_k S_kj a_k†,
/// without the global phase √det S.
pub fn sector_unitary(s: &CMatrix, sector: &FockSector) -> Result<SectorOperator> {
    if s.nrows() != sector.modes || s.ncols() != sector.modes {
        return Err(Error::DimensionMismatch {
            expected: sector.modes,
            found: s.nrows(),
        });
    }
    let defect = unitarity_defect(s);
    if defect > SECTOR_UNITARY_TOLERANCE {
        return Err(Error::NotUnitary { defect });
    }
    let basis = sector.basis();
    let repeated: Vec<Vec<usize>> = basis.iter().map(|o| repeated_indices(o)).collect();
    let norms: Vec<f64> = basis
        .iter()
        .map(|o| o.iter().map(|&n| factorial(n)).product::<f64>())
        .collect();
    let d = sector.dim();
    let p = sector.photons;
    let mut u = CMatrix::zeros(d, d);
    let mut sub = CMatrix::zeros(p, p);
    for (a, rows) in repeated.iter().enumerate() {
        for (b, cols) in repeated.iter().enumerate() {
            for (x, &r) in rows.iter().enumerate() {
                for (y, &col) in cols.iter().enumerate() {
                    sub[(x, y)] = s[(r, col)];
                }
            }
            u[(a, b)] = permanent(&sub) / (norms[a] * norms[b]).sqrt();
        }
    }
    Ok(SectorOperator {
        matrix: u,
        kind: OperatorKind::Unitary,
    })
}

/// Σ_ij H_ij a_i† a_j restricted to a sector.
pub fn sector_lift(h: &CMatrix, sector: &FockSector) -> Result<CMatrix> {
    if h.nrows() != sector.modes || h.ncols() != sector.modes {
        return Err(Error::DimensionMismatch {
            expected: sector.modes,
            found: h.nrows(),
        });
    }
    let d = sector.dim();
    let mut out = CMatrix::zeros(d, d);
    let mut target = vec![0; sector.modes];
    for (col, occ) in sector.basis().iter().enumerate() {
        for j in 0..sector.modes {
            if occ[j] == 0 {
                continue;
            }
            // a_j lowers mode j by one ...
            let lower = (occ[j] as f64).sqrt();
            for i in 0..sector.modes {
                if h[(i, j)] == c(0.0, 0.0) {
                    continue;
                }
                target.copy_from_slice(occ);
                target[j] -= 1;
                // ... and a_i† raises mode i
                let raise = ((target[i] + 1) as f64).sqrt();
                target[i] += 1;
                let row = sector.index_of(&target).expect("sector is closed under a_i† a_j");
                out[(row, col)] += h[(i, j)] * (lower * raise);
            }
        }
    }
    Ok(out)
}

/// [a†]ᵀQ[a] + ½ tr Q on the sector.
pub fn sector_qws(q: &CMatrix, sector: &FockSector) -> Result<SectorOperator> {
    let mut m = sector_lift(q, sector)?;
    let shift = 0.5 * trace(q).re;
    for k in 0..m.nrows() {
        m[(k, k)] += shift;
    }
    Ok(SectorOperator {
        matrix: m,
        kind: OperatorKind::Generator,
    })
}

/// Passive unitary e^{i[a†]ᵀH[a]} on a sector, built from the generator
/// rather than permanents; it represents S = e^{iH} without √det S.
pub fn sector_exponential(h: &CMatrix, sector: &FockSector) -> Result<CMatrix> {
    Ok(exp_i_hermitian(&sector_lift(h, sector)?, 1.0))
}

/// ‖−iÛ†∂θÛ − ([a†]ᵀQ[a] + ½trQ)‖_F on the ν-photon sector, where Û carries
/// the phase √det S continued from the midpoint sample and ∂θ uses the same
/// finite-difference stencil as the GWS matrix.
pub fn verify_generator_identity(
    samples: &ThetaSamples,
    q: &CMatrix,
    photons: usize,
) -> Result<f64> {
    let sector = FockSector::new(samples.dim(), photons)?;
    let det_mid = det(&samples.mid);
    let root_mid = det_mid.sqrt();
    let lifted = |s: &CMatrix| -> Result<CMatrix> {
        let ratio = det(s) / det_mid;
        if ratio.arg().abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::PhaseAliasing(format!(
                "det S turns by {:.3} rad across the step; reduce it",
                ratio.arg()
            )));
        }
        let root = root_mid * ratio.sqrt();
        Ok(sector_unitary(s, &sector)?.matrix * root)
    };
    let u_mid = lifted(&samples.mid)?;
    let coarse = (lifted(&samples.outer.0)? - lifted(&samples.outer.1)?) / c(samples.step, 0.0);
    let derivative = match &samples.inner {
        None => coarse,
        Some((p, m)) => {
            let fine = (lifted(p)? - lifted(m)?) / c(0.5 * samples.step, 0.0);
            (fine * c(4.0, 0.0) - coarse) / c(3.0, 0.0)
        }
    };
    let generator = u_mid.adjoint() * derivative * (-I);
    let expected = sector_qws(q, &sector)?.matrix;
    Ok((generator - expected).norm())
}

/// Largest squeezing accepted by [`truncated_gaussian_vector`].
pub const MAX_ORACLE_SQUEEZING: f64 = 1.0;

/// Smallest cutoff accepted by [`truncated_gaussian_vector`].
pub const MIN_ORACLE_CUTOFF: usize = 40;

/// Fock coefficients c_0..c_cutoff of D(β)S(ξ)|0⟩ for one mode, with
/// ξ = p e^{iψ} and S(ξ) = exp(½(ξ* a² − ξ a†²)).
///
/// Uses the three-term recursion from (a cosh p + a† e^{iψ} sinh p)|·⟩ = γ|·⟩,
/// γ = β cosh p + β* e^{iψ} sinh p, seeded with the exact vacuum overlap.
pub fn truncated_gaussian_vector(beta: C64, p: f64, psi: f64, cutoff: usize) -> Result<CVector> {
    if !(0.0..=MAX_ORACLE_SQUEEZING).contains(&p) {
        return Err(Error::Truncation(format!(
            "squeezing p = {p} outside [0, {MAX_ORACLE_SQUEEZING}]"
        )));
    }
    if cutoff < MIN_ORACLE_CUTOFF {
        return Err(Error::Truncation(format!(
            "cutoff {cutoff} below {MIN_ORACLE_CUTOFF}"
        )));
    }
    let (ch, sh) = (p.cosh(), p.sinh());
    let rot = C64::from_polar(1.0, psi);
    let gamma = beta * ch + beta.conj() * rot * sh;
    let exponent = -0.5 * beta.norm_sqr() - 0.5 * beta.conj() * beta.conj() * rot * p.tanh();
    let mut coeffs = CVector::zeros(cutoff + 1);
    coeffs[0] = exponent.exp() / ch.sqrt();
    if cutoff >= 1 {
        coeffs[1] = gamma * coeffs[0] / ch;
    }
    for n in 1..cutoff {
        let nf = n as f64;
        coeffs[n + 1] = (gamma * coeffs[n] - rot * sh * nf.sqrt() * coeffs[n - 1])
            / (ch * (nf + 1.0).sqrt());
    }
    let norm2 = coeffs.norm_squared();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::Truncation(format!(
            "norm {norm2:.12} after truncation at {cutoff} photons"
        )));
    }
    Ok(coeffs)
}

/// A state with bounded total photon number, stored sector by sector.
#[derive(Debug, Clone)]
pub struct SectorState {
    pub modes: usize,
    pub sectors: Vec<FockSector>,
    pub amplitudes: Vec<CVector>,
}

impl SectorState {
    /// Tensor product of single-mode coefficient vectors, keeping total photon
    /// numbers up to `max_total`.
    pub fn product(per_mode: &[CVector], max_total: usize) -> Result<Self> {
        let modes = per_mode.len();
        let mut sectors = Vec::with_capacity(max_total + 1);
        let mut amplitudes = Vec::with_capacity(max_total + 1);
        for n in 0..=max_total {
            let sector = FockSector::new(modes, n)?;
            let amps = CVector::from_iterator(
                sector.dim(),
                sector.basis().iter().map(|occ| {
                    occ.iter()
                        .zip(per_mode)
                        .map(|(&k, v)| if k < v.len() { v[k] } else { c(0.0, 0.0) })
                        .product::<C64>()
                }),
            );
            sectors.push(sector);
            amplitudes.push(amps);
        }
        Ok(Self {
            modes,
            sectors,
            amplitudes,
        })
    }

    /// A state living in one sector.
    pub fn in_sector(sector: FockSector, amplitudes: CVector) -> Self {
        Self {
            modes: sector.modes,
            sectors: vec![sector],
            amplitudes: vec![amplitudes],
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_squared()).sum()
    }

    /// Applies a number-conserving operator given per sector.
    pub fn map(&self, op: impl Fn(&FockSector) -> Result<CMatrix>) -> Result<Self> {
        let amplitudes = self
            .sectors
            .iter()
            .zip(&self.amplitudes)
            .map(|(s, a)| Ok(op(s)? * a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            modes: self.modes,
            sectors: self.sectors.clone(),
            amplitudes,
        })
    }

    /// Mean and variance of a Hermitian number-conserving operator.
    pub fn mean_and_variance(
        &self,
        op: impl Fn(&FockSector) -> Result<CMatrix>,
    ) -> Result<(f64, f64)> {
        let norm = self.norm_squared();
        let mut first = 0.0;
        let mut second = 0.0;
        for (s, a) in self.sectors.iter().zip(&self.amplitudes) {
            let applied = op(s)? * a;
            first += a.dotc(&applied).re;
            second += applied.norm_squared();
        }
        let mean = first / norm;
        Ok((mean, second / norm - mean * mean))
    }

    /// Mean and variance of [a†]ᵀQ[a] + ½trQ.
    pub fn qws_statistics(&self, q: &CMatrix) -> Result<(f64, f64)> {
        self.mean_and_variance(|s| Ok(sector_qws(q, s)?.matrix))
    }
}
