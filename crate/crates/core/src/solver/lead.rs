use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64, I};
use crate::solver::landscape::Grid;

/// Distance of the lattice dispersion parameter from a cutoff (|cos qh| = 1)
/// below which a mode is rejected.
const LATTICE_CUTOFF_GUARD: f64 = 1e-10;

/// Transverse modes of the empty lead and their discrete dispersion.
///
/// Mode m (1-based) has profile φ_m(i) = √(2/(M+1)) sin(mπ(i+1)/(M+1)), an
/// exact eigenvector of the discrete Dirichlet Laplacian, and propagates as
/// λ_m^j along the lead with λ_m + 1/λ_m = 2 cos(k_m^x h).
#[derive(Debug, Clone)]
pub struct LeadBasis {
    pub k: f64,
    pub width: f64,
    pub spacing: f64,
    /// Open-mode count N'.
    pub open: usize,
    /// Evanescent modes kept in the lead self-energy.
    pub evanescent: usize,
    /// Profiles of the retained modes as columns (ny × (open + evanescent)).
    pub profiles: CMatrix,
    /// Per retained mode: the root λ_m of λ + 1/λ = 2cos(k_m^x h) with |λ_m| ≤ 1,
    /// e^{i k_m^x h} for open modes.
    pub lambda: Vec<C64>,
    /// Discrete longitudinal wavenumbers, real for open modes and with positive
    /// imaginary part for evanescent ones.
    pub kx: Vec<C64>,
    /// Flux velocities sin(k_m^x h)/h of the open modes.
    pub velocity: Vec<f64>,
}

impl LeadBasis {
    pub fn retained(&self) -> usize {
        self.open + self.evanescent
    }

    /// N = 2N'.
    pub fn channels(&self) -> usize {
        2 * self.open
    }

    /// Continuum k_m^x = √(k² − m²π²/W²) (imaginary above cutoff), for
    /// reporting only.
    pub fn continuum_kx(&self, mode: usize) -> C64 {
        let kt = mode as f64 * PI / self.width;
        c(self.k * self.k - kt * kt, 0.0).sqrt()
    }

    /// Discrete group velocity dω/dk_m^x in units with c = 1, from
    /// differentiating the lattice dispersion.
    pub fn group_velocity(&self, mode: usize) -> f64 {
        let q = self.kx[mode - 1].re;
        (q * self.spacing).sin() / (self.k * self.spacing)
    }
}

/// t_m = (2/h²)(1 − cos(mπ/(M+1))), the eigenvalue of minus the discrete
/// transverse Laplacian for mode m.
pub fn transverse_eigenvalue(mode: usize, grid: &Grid) -> f64 {
    let h = grid.spacing;
    2.0 / (h * h) * (1.0 - (mode as f64 * PI / (grid.ny as f64 + 1.0)).cos())
}

pub fn transverse_profile(mode: usize, row: usize, ny: usize) -> f64 {
    let m1 = ny as f64 + 1.0;
    (2.0 / m1).sqrt() * (mode as f64 * PI * (row as f64 + 1.0) / m1).sin()
}

/// Lead modes at wavenumber `k`. `evanescent = None` keeps every evanescent
/// mode the lattice supports.
pub fn lead_modes(k: f64, grid: &Grid, evanescent: Option<usize>) -> Result<LeadBasis> {
    if grid.ny < 2 {
        return Err(Error::InvalidScenario(
            "lead needs at least 2 transverse grid points".into(),
        ));
    }
    let continuum = (k * grid.width / PI).floor().max(0.0) as usize;
    if continuum == 0 {
        return Err(Error::NoOpenModes {
            k_over_pi_w: k * grid.width / PI,
        });
    }
    let h = grid.spacing;
    let mut cosines = Vec::with_capacity(grid.ny);
    for m in 1..=grid.ny {
        let cos_qh = 1.0 - 0.5 * h * h * (k * k - transverse_eigenvalue(m, grid));
        if (1.0 - cos_qh.abs()).abs() < LATTICE_CUTOFF_GUARD {
            return Err(Error::NearCutoff {
                mode: m,
                distance: (1.0 - cos_qh.abs()).abs(),
                margin: LATTICE_CUTOFF_GUARD,
            });
        }
        cosines.push(cos_qh);
    }
    let open_set: Vec<usize> = (1..=grid.ny)
        .filter(|&m| cosines[m - 1].abs() < 1.0)
        .collect();
    let open = open_set.len();
    if open_set != (1..=continuum).collect::<Vec<_>>() {
        return Err(Error::ResolutionTooCoarse {
            lattice: open,
            continuum,
        });
    }
    let evanescent = evanescent.unwrap_or(grid.ny - open).min(grid.ny - open);
    let retained = open + evanescent;

    let profiles = CMatrix::from_fn(grid.ny, retained, |i, m| {
        c(transverse_profile(m + 1, i, grid.ny), 0.0)
    });
    let mut lambda = Vec::with_capacity(retained);
    let mut kx = Vec::with_capacity(retained);
    let mut velocity = Vec::with_capacity(open);
    for &cos_qh in &cosines[..retained] {
        if cos_qh.abs() < 1.0 {
            let qh = cos_qh.acos();
            lambda.push(C64::from_polar(1.0, qh));
            kx.push(c(qh / h, 0.0));
            velocity.push(qh.sin() / h);
        } else {
            let root = (cos_qh * cos_qh - 1.0).sqrt();
            let l = if cos_qh > 0.0 { cos_qh - root } else { cos_qh + root };
            lambda.push(c(l, 0.0));
            // λ = e^{i q h}  ⇒  q = −i ln λ / h, with Im q > 0 since |λ| < 1
            kx.push(-I * c(l, 0.0).ln() / h);
        }
    }
    Ok(LeadBasis {
        k,
        width: grid.width,
        spacing: h,
        open,
        evanescent,
        profiles,
        lambda,
        kx,
        velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(res: usize) -> Grid {
        Grid::new(1.0, 1.0, res)
    }

    #[test]
    fn reference_wavenumber_has_twenty_open_modes() {
        let lead = lead_modes(20.5 * PI, &grid(100), None).unwrap();
        assert_eq!(lead.open, 20);
        assert_eq!(lead.channels(), 40);
        assert_eq!(lead.retained(), 100);
        let k21 = lead.kx[20];
        assert!(k21.im > 0.0 && k21.re.abs() < 1e-12);
    }

    #[test]
    fn just_above_first_cutoff() {
        let lead = lead_modes(1.01 * PI, &grid(60), None).unwrap();
        assert_eq!(lead.open, 1);
        let k1 = lead.kx[0];
        assert!(k1.im == 0.0 && k1.re > 0.0 && k1.re < 0.5 * PI);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let err = lead_modes(20.5 * PI, &grid(30), None).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooCoarse { .. }));
    }

    #[test]
    fn below_cutoff_has_no_open_modes() {
        assert!(matches!(
            lead_modes(0.5 * PI, &grid(20), None),
            Err(Error::NoOpenModes { .. })
        ));
    }

    #[test]
    fn profiles_are_orthonormal() {
        let g = grid(37);
        let lead = lead_modes(3.3 * PI, &g, None).unwrap();
        let gram = lead.profiles.transpose() * &lead.profiles;
        let n = gram.nrows();
        assert!((gram - CMatrix::identity(n, n)).norm() < 1e-12);
    }

    #[test]
    fn lead_modes_satisfy_lattice_equation() {
        // λ + 1/λ + (2cos(mπ/(M+1)) − 4 + k²h²) = 0 for every retained mode
        let g = grid(50);
        let k = 7.4 * PI;
        let lead = lead_modes(k, &g, None).unwrap();
        let h = g.spacing;
        for (m, &l) in lead.lambda.iter().enumerate() {
            let theta = (m + 1) as f64 * PI / (g.ny as f64 + 1.0);
            let r = l + 1.0 / l + c(2.0 * theta.cos() - 4.0 + k * k * h * h, 0.0);
            assert!(r.norm() < 1e-12, "mode {}: {}", m + 1, r);
            assert!(l.norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn discrete_wavenumbers_approach_continuum() {
        let g = grid(400);
        let lead = lead_modes(5.5 * PI, &g, None).unwrap();
        for m in 1..=lead.open {
            let d = (lead.kx[m - 1] - lead.continuum_kx(m)).norm();
            assert!(d < 1e-3 * lead.k, "mode {m}: {d}");
        }
    }

    #[test]
    fn evanescent_retention_is_capped() {
        let lead = lead_modes(4.5 * PI, &grid(20), Some(3)).unwrap();
        assert_eq!(lead.retained(), 7);
        let all = lead_modes(4.5 * PI, &grid(20), Some(1000)).unwrap();
        assert_eq!(all.retained(), 20);
    }
}
