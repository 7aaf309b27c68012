//! Pure multimode Gaussian states |α, Z⟩ = D(α) S(Z)|0⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_function, svd, symmetric_part, unitarity_defect, CMatrix, CVector,
};

/// Tolerance on ‖W†W − 1‖_F for representation changes.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

/// Tolerance on ‖S†S − 1‖_F for scattering a state.
pub const SCATTERING_UNITARY_TOLERANCE: f64 = 1e-6;

/// Basis in which α and Z are expressed.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Lead modes.
    Modes,
    /// GWS eigenchannels, with the eigenvector matrix W.
    Eigen { w: CMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub alpha: CVector,
    /// Symmetric squeezing matrix.
    pub z: CMatrix,
    pub representation: Representation,
}

/// Z = R e^{iΦ} with R Hermitian positive semidefinite.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub r: CMatrix,
    /// e^{iΦ}
    pub unitary: CMatrix,
}

pub fn polar_decompose(z: &CMatrix) -> PolarDecomposition {
    let n = z.nrows();
    if n == 0 || z.norm() == 0.0 {
        return PolarDecomposition {
            r: CMatrix::zeros(n, n),
            unitary: CMatrix::identity(n, n),
        };
    }
    let (u, sigma, v) = svd(z);
    let mut u_sigma = u.clone();
    for (k, &s) in sigma.iter().enumerate() {
        u_sigma.column_mut(k).scale_mut(s);
    }
    PolarDecomposition {
        r: u_sigma * u.adjoint(),
        unitary: u * v.adjoint(),
    }
}

impl GaussianState {
    /// State in the lead-mode basis; Z is symmetrized.
    pub fn new(alpha: CVector, z: CMatrix) -> Result<Self> {
        if z.nrows() != alpha.len() || z.ncols() != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: z.nrows().max(z.ncols()),
            });
        }
        Ok(Self {
            alpha,
            z: symmetric_part(&z),
            representation: Representation::Modes,
        })
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            alpha: CVector::zeros(n),
            z: CMatrix::zeros(n, n),
            representation: Representation::Modes,
        }
    }

    pub fn coherent(alpha: CVector) -> Self {
        let n = alpha.len();
        Self {
            alpha,
            z: CMatrix::zeros(n, n),
            representation: Representation::Modes,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn polar(&self) -> PolarDecomposition {
        polar_decompose(&self.z)
    }

    /// sinh²(R) as a matrix function.
    pub fn sinh_squared(&self) -> CMatrix {
        hermitian_function(&self.polar().r, |x| x.sinh().powi(2))
    }

    /// Per-mode |α_m|² + (sinh²R)_mm and their total.
    pub fn mean_photon_numbers(&self) -> (Vec<f64>, f64) {
        let s2 = self.sinh_squared();
        let per_mode: Vec<f64> = (0..self.dim())
            .map(|m| self.alpha[m].norm_sqr() + s2[(m, m)].re)
            .collect();
        let total = per_mode.iter().sum();
        (per_mode, total)
    }

    /// (β, Ξ) = (W†α, W†ZW*) in the eigenbasis given by the columns of W.
    pub fn to_eigenbasis(&self, w: &CMatrix) -> Result<Self> {
        if self.representation != Representation::Modes {
            return Err(Error::Domain("state is already in an eigenbasis".into()));
        }
        check_basis(w, self.dim())?;
        let xi = w.adjoint() * &self.z * w.map(|v| v.conj());
        Ok(Self {
            alpha: w.adjoint() * &self.alpha,
            z: symmetric_part(&xi),
            representation: Representation::Eigen { w: w.clone() },
        })
    }

    /// Back to lead modes: α = Wβ, Z = WΞWᵀ.
    pub fn to_modes(&self) -> Self {
        match &self.representation {
            Representation::Modes => self.clone(),
            Representation::Eigen { w } => Self {
                alpha: w * &self.alpha,
                z: symmetric_part(&(w * &self.z * w.transpose())),
                representation: Representation::Modes,
            },
        }
    }

    /// Û|α, Z⟩ = |Sα, SZSᵀ⟩ up to the global phase √det S.
    pub fn scatter(&self, s: &CMatrix) -> Result<Self> {
        if self.representation != Representation::Modes {
            return Err(Error::Domain(
                "scattering acts on states in the lead-mode basis".into(),
            ));
        }
        if s.nrows() != self.dim() || s.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.nrows(),
            });
        }
        let defect = unitarity_defect(s);
        if defect > SCATTERING_UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self {
            alpha: s * &self.alpha,
            z: symmetric_part(&(s * &self.z * s.transpose())),
            representation: Representation::Modes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GaussianStateFile::from(self)).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GaussianStateFile>(text)?.try_into()
    }
}

fn check_basis(w: &CMatrix, n: usize) -> Result<()> {
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.nrows(),
        });
    }
    let defect = unitarity_defect(w);
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Quadrature variances (e^{−2r}/2, e^{2r}/2) along and across the squeezing
/// direction.
pub fn quadrature_variances(r: f64) -> (f64, f64) {
    (0.5 * (-2.0 * r).exp(), 0.5 * (2.0 * r).exp())
}

/// Squeezing strength in decibels, 20 r / ln 10.
pub fn db_of(r: f64) -> f64 {
    20.0 / std::f64::consts::LN_10 * r
}

pub fn r_of_db(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GaussianStateFile {
    representation: String,
    alpha: Vec<JsonComplex>,
    #[serde(rename = "Z")]
    z: Vec<Vec<JsonComplex>>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Vec<JsonComplex>>>,
}

fn rows(m: &CMatrix) -> Vec<Vec<JsonComplex>> {
    m.row_iter()
        .map(|row| row.iter().map(|v| JsonComplex { re: v.re, im: v.im }).collect())
        .collect()
}

fn matrix(rows: &[Vec<JsonComplex>], n: usize) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows.len(),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(rows[i][j].re, rows[i][j].im)))
}

impl From<&GaussianState> for GaussianStateFile {
    fn from(s: &GaussianState) -> Self {
        let (representation, w) = match &s.representation {
            Representation::Modes => ("modes".to_string(), None),
            Representation::Eigen { w } => ("eigen".to_string(), Some(rows(w))),
        };
        Self {
            representation,
            alpha: s.alpha.iter().map(|v| JsonComplex { re: v.re, im: v.im }).collect(),
            z: rows(&s.z),
            w,
        }
    }
}

impl TryFrom<GaussianStateFile> for GaussianState {
    type Error = Error;

    fn try_from(f: GaussianStateFile) -> Result<Self> {
        let n = f.alpha.len();
        let alpha = CVector::from_iterator(n, f.alpha.iter().map(|v| c(v.re, v.im)));
        let z = symmetric_part(&matrix(&f.z, n)?);
        let representation = match (f.representation.as_str(), f.w) {
            ("modes", _) => Representation::Modes,
            ("eigen", Some(w)) => {
                let w = matrix(&w, n)?;
                check_basis(&w, n)?;
                Representation::Eigen { w }
            }
            (other, _) => {
                return Err(Error::Domain(format!(
                    "unknown representation `{other}` (eigen states need W)"
                )))
            }
        };
        Ok(Self {
            alpha,
            z,
            representation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sampling::{random_symmetric, random_unitary, random_vector};
    use crate::linalg::{hermitian_eigen, hermiticity_defect, C64};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(seed: u64, n: usize) -> GaussianState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_vector(&mut rng, n);
        let z = random_symmetric(&mut rng, n, 0.4);
        GaussianState::new(alpha, z).unwrap()
    }

    #[test]
    fn scalar_polar_form() {
        let z = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(0.7, 1.1),
            C64::from_polar(0.2, -2.0),
        ]));
        let p = polar_decompose(&z);
        assert!((p.r.clone() - CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.7, 0.0), c(0.2, 0.0)]))).norm() < 1e-14);
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(1.0, 1.1),
            C64::from_polar(1.0, -2.0),
        ]));
        assert!((p.unitary - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_squeezing_has_identity_phase() {
        let p = polar_decompose(&CMatrix::zeros(3, 3));
        assert_eq!(p.unitary, CMatrix::identity(3, 3));
        assert_eq!(p.r, CMatrix::zeros(3, 3));
    }

    #[test]
    fn photon_numbers_of_simple_states() {
        let vac = GaussianState::vacuum(3);
        assert_eq!(vac.mean_photon_numbers(), (vec![0.0; 3], 0.0));
        let sq = GaussianState::new(
            CVector::zeros(1),
            CMatrix::from_element(1, 1, c(1f64.asinh(), 0.0)),
        )
        .unwrap();
        assert!((sq.mean_photon_numbers().1 - 1.0).abs() < 1e-14);
        let coh = GaussianState::coherent(CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert_eq!(coh.mean_photon_numbers(), (vec![1.0, 0.0], 1.0));
    }

    #[test]
    fn identity_basis_change_is_trivial() {
        let s = random_state(1, 4);
        let e = s.to_eigenbasis(&CMatrix::identity(4, 4)).unwrap();
        assert!((e.alpha.clone() - &s.alpha).norm() < 1e-15);
        assert!((e.z.clone() - &s.z).norm() < 1e-15);
    }

    #[test]
    fn permutation_permutes_diagonal_squeezing() {
        let z = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.1, 0.0), c(0.2, 0.3), c(0.4, -0.1)]));
        let s = GaussianState::new(CVector::zeros(3), z.clone()).unwrap();
        // W e_k = e_{π(k)} with π = (1 2 0)
        let perm = [1, 2, 0];
        let w = CMatrix::from_fn(3, 3, |i, k| if i == perm[k] { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let e = s.to_eigenbasis(&w).unwrap();
        for k in 0..3 {
            assert_eq!(e.z[(k, k)], z[(perm[k], perm[k])]);
        }
    }

    #[test]
    fn non_unitary_basis_is_rejected() {
        let s = random_state(2, 2);
        let w = CMatrix::identity(2, 2) * c(1.1, 0.0);
        assert!(matches!(s.to_eigenbasis(&w), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn single_mode_phase_doubles_squeezing_angle() {
        let s = GaussianState::new(CVector::zeros(1), CMatrix::from_element(1, 1, c(0.8, 0.0))).unwrap();
        let phi = 0.37;
        let out = s
            .scatter(&CMatrix::from_element(1, 1, C64::from_polar(1.0, phi)))
            .unwrap();
        assert!((out.z[(0, 0)] - C64::from_polar(0.8, 2.0 * phi)).norm() < 1e-15);
    }

    #[test]
    fn variances_and_decibels() {
        assert_eq!(quadrature_variances(0.0), (0.5, 0.5));
        assert!((db_of(1.73) - 15.0).abs() < 0.05);
        assert!((r_of_db(db_of(0.3)) - 0.3).abs() < 1e-15);
        for r in [0.0, 0.3, 1.0, 2.5, 5.0] {
            let (a, b) = quadrature_variances(r);
            assert!((a * b - 0.25).abs() <= 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let s = random_state(3, 3);
        let back = GaussianState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_unitary(&mut rng, 3);
        let e = s.to_eigenbasis(&w).unwrap();
        let back = GaussianState::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        let text = s.to_json();
        assert!(text.contains("\"representation\"") && text.contains("\"Z\""));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn polar_reconstructs_and_is_psd(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_symmetric(&mut rng, n, 1.0);
            let p = polar_decompose(&z);
            prop_assert!((&p.r * &p.unitary - &z).norm() <= 1e-12 * z.norm());
            prop_assert!(hermiticity_defect(&p.r) <= 1e-12 * z.norm());
            prop_assert!(unitarity_defect(&p.unitary) <= 1e-12);
            let (values, _) = hermitian_eigen(&p.r);
            prop_assert!(values.iter().all(|&v| v >= -1e-12));
        }

        #[test]
        fn representation_round_trip(seed in any::<u64>(), n in 1usize..8) {
            let s = random_state(seed, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let w = random_unitary(&mut rng, n);
            let back = s.to_eigenbasis(&w).unwrap().to_modes();
            prop_assert!((back.alpha - &s.alpha).norm() <= 1e-12);
            prop_assert!((back.z - &s.z).norm() <= 1e-12);
            let (_, total) = s.mean_photon_numbers();
            let (_, total_q) = s.to_eigenbasis(&w).unwrap().mean_photon_numbers();
            prop_assert!((total - total_q).abs() <= 1e-10 * total.max(1.0));
        }

        #[test]
        fn scattering_conserves_photons(seed in any::<u64>(), n in 1usize..8) {
            let s = random_state(seed, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
            let u = random_unitary(&mut rng, n);
            let out = s.scatter(&u).unwrap();
            let (_, before) = s.mean_photon_numbers();
            let (_, after) = out.mean_photon_numbers();
            prop_assert!((before - after).abs() <= 1e-8);
            prop_assert!((out.alpha.norm() - s.alpha.norm()).abs() <= 1e-12 * s.alpha.norm().max(1.0));
        }
    }
}
