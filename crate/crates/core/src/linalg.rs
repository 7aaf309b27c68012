//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// ‖A†A − 1‖_F
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

/// ‖A − Aᵀ‖_F
pub fn symmetry_defect(m: &CMatrix) -> f64 {
    (m - m.transpose()).norm()
}

/// Frobenius norm of the anti-Hermitian part.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    ((m - m.adjoint()) * c(0.5, 0.0)).norm()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn symmetric_part(m: &CMatrix) -> CMatrix {
    (m + m.transpose()) * c(0.5, 0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in descending
/// order. Only the lower triangle of `m` is trusted by the underlying solver,
/// so the input is Hermitian-symmetrized first.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Applies a real scalar function to a Hermitian matrix through its
/// eigendecomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let fv = f(v);
        for r in 0..n {
            scaled[(r, k)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}

/// e^{iθH} for Hermitian H.
pub fn exp_i_hermitian(h: &CMatrix, theta: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, theta * v);
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Full singular value decomposition A = U diag(σ) V†, with σ descending.
///
/// Delegates to faer, whose complex SVD reaches machine-precision
/// reconstruction where nalgebra's stops near 1e−12 on some inputs.
pub fn svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (r, k) = m.shape();
    let a = faer::Mat::<faer::c64>::from_fn(r, k, |i, j| {
        let v = m[(i, j)];
        faer::c64::new(v.re, v.im)
    });
    let dec = a.svd().expect("SVD converges");
    let to_na = |x: faer::MatRef<'_, faer::c64>| {
        CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| c(x[(i, j)].re, x[(i, j)].im))
    };
    let sigma = (0..r.min(k)).map(|i| dec.S()[i].re).collect();
    (to_na(dec.U()), sigma, to_na(dec.V()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Trace of a square complex matrix.
pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|k| m[(k, k)]).sum()
}

/// Sum of eigenphases of the unitary `u`, valid when every eigenphase lies in
/// (−π/2, π/2). Returns `None` when that cannot be guaranteed.
///
/// Uses that the anti-Hermitian part (U − U†)/2i of a normal matrix has
/// eigenvalues sin φ_k, which is invertible on the stated interval.
pub fn small_eigenphase_sum(u: &CMatrix) -> Option<f64> {
    let n = u.nrows();
    let dist = spectral_norm(&(u - CMatrix::identity(n, n)));
    if dist >= std::f64::consts::SQRT_2 * (1.0 - 1e-9) {
        return None;
    }
    let k = (u - u.adjoint()) * c(0.0, -0.5);
    let (sines, _) = hermitian_eigen(&k);
    Some(sines.iter().map(|s| s.clamp(-1.0, 1.0).asin()).sum())
}

/// Complex determinant through LU.
pub fn det(m: &CMatrix) -> C64 {
    if m.is_empty() {
        return c(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Random-matrix helpers for tests, benches and examples.
pub mod sampling {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    /// Haar-random unitary via QR of a complex Ginibre matrix with the
    /// diagonal phases of R removed.
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| {
            c(standard_normal(rng), standard_normal(rng))
        });
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for k in 0..n {
            let d = r[(k, k)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
            for row in 0..n {
                q[(row, k)] *= phase;
            }
        }
        q
    }

    pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| {
            c(standard_normal(rng), standard_normal(rng))
        });
        hermitian_part(&g)
    }

    pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| {
            c(standard_normal(rng), standard_normal(rng)) * scale
        });
        symmetric_part(&g)
    }

    pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| c(standard_normal(rng), standard_normal(rng)))
    }
}
