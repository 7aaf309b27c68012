use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, symmetry_defect, unitarity_defect, CMatrix, I};
use crate::scenario::Scenario;
use crate::solver::landscape::{build_landscape, Grid, IndexLandscape};
use crate::solver::lead::{lead_modes, LeadBasis};

/// Condition estimate above which a block is treated as singular.
const SINGULAR_CONDITION: f64 = 1e15;

/// Unitarity defect above which the solve logs a warning.
pub const UNITARITY_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// One lead channel: a side and a 1-based mode index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Channel {
    pub side: Side,
    pub mode: usize,
}

impl Channel {
    /// Channel for the 0-based S-matrix index.
    pub fn from_index(index: usize, open: usize) -> Self {
        if index < open {
            Channel {
                side: Side::Left,
                mode: index + 1,
            }
        } else {
            Channel {
                side: Side::Right,
                mode: index - open + 1,
            }
        }
    }

    pub fn index(&self, open: usize) -> usize {
        match self.side {
            Side::Left => self.mode - 1,
            Side::Right => open + self.mode - 1,
        }
    }

    pub fn label(&self) -> String {
        let side = match self.side {
            Side::Left => "L",
            Side::Right => "R",
        };
        format!("{side}{}", self.mode)
    }
}

/// Flux-normalized S-matrix. Rows and columns 0..N' are the left-lead modes,
/// N'..N the right-lead modes.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub matrix: CMatrix,
    pub k: f64,
    pub open: usize,
    /// ‖S†S − 1‖_F
    pub unitarity_defect: f64,
}

impl ScatteringMatrix {
    pub fn new(matrix: CMatrix, k: f64) -> Self {
        let open = matrix.nrows() / 2;
        let unitarity_defect = unitarity_defect(&matrix);
        Self {
            matrix,
            k,
            open,
            unitarity_defect,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ‖S − Sᵀ‖_F
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.matrix)
    }

    pub fn reflection_left(&self) -> CMatrix {
        self.matrix.view((0, 0), (self.open, self.open)).into_owned()
    }

    pub fn transmission_left_to_right(&self) -> CMatrix {
        self.matrix
            .view((self.open, 0), (self.open, self.open))
            .into_owned()
    }
}

/// Interior field for one incident channel, stored as ny × nx (row i, column j).
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub grid: Grid,
    pub incidence: Channel,
    pub values: CMatrix,
}

impl FieldMap {
    pub fn intensity(&self) -> nalgebra::DMatrix<f64> {
        self.values.map(|v| v.norm_sqr())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub smatrix: ScatteringMatrix,
    /// One map per incident channel, in S-matrix column order; empty unless
    /// requested.
    pub fields: Vec<FieldMap>,
}

/// Builds the landscape and lead at the scenario wavenumber and solves for S.
pub fn scattering_matrix(scenario: &Scenario) -> Result<ScatteringMatrix> {
    Ok(solve_scenario(scenario, false)?.smatrix)
}

pub fn solve_scenario(scenario: &Scenario, with_fields: bool) -> Result<Solution> {
    let landscape = build_landscape(scenario)?;
    let lead = lead_modes(scenario.k, &landscape.grid, scenario.evanescent_modes)?;
    solve_scattering(&landscape, &lead, with_fields)
}

/// Column j of the lattice operator: diagonal block and the 0/1 coupling to
/// column j + 1, with the lead self-energies folded into the end columns.
struct ColumnOperator<'a> {
    land: &'a IndexLandscape,
    lead: &'a LeadBasis,
    self_energy: CMatrix,
}

impl<'a> ColumnOperator<'a> {
    fn new(land: &'a IndexLandscape, lead: &'a LeadBasis) -> Self {
        // Σ = Φ diag(λ) Φᵀ: exact elimination of the semi-infinite lead
        let mut scaled = lead.profiles.clone();
        for (m, &l) in lead.lambda.iter().enumerate() {
            for v in scaled.column_mut(m).iter_mut() {
                *v *= l;
            }
        }
        let self_energy = scaled * lead.profiles.transpose();
        Self {
            land,
            lead,
            self_energy,
        }
    }

    fn fluid(&self, j: usize, i: usize) -> bool {
        !self.land.is_metallic(j, i)
    }

    fn diagonal_block(&self, j: usize) -> CMatrix {
        let g = &self.land.grid;
        let ny = g.ny;
        let kh2 = (self.lead.k * g.spacing).powi(2);
        let mut a = CMatrix::zeros(ny, ny);
        for i in 0..ny {
            let node = g.node(j, i);
            if self.land.metallic[node] {
                a[(i, i)] = c(1.0, 0.0);
                continue;
            }
            a[(i, i)] = c(
                kh2 * self.land.n_squared[node] - 4.0 + self.land.border_correction[node],
                0.0,
            );
            if i + 1 < ny && self.fluid(j, i + 1) {
                a[(i, i + 1)] = c(1.0, 0.0);
                a[(i + 1, i)] = c(1.0, 0.0);
            }
        }
        let last = g.nx - 1;
        for end in [0, last] {
            if j != end {
                continue;
            }
            for r in 0..ny {
                if !self.fluid(j, r) {
                    continue;
                }
                for s in 0..ny {
                    if self.fluid(j, s) {
                        a[(r, s)] += self.self_energy[(r, s)];
                    }
                }
            }
        }
        a
    }

    /// Diagonal of the coupling between columns j and j + 1.
    fn coupling(&self, j: usize) -> Vec<bool> {
        (0..self.land.grid.ny)
            .map(|i| self.fluid(j, i) && self.fluid(j + 1, i))
            .collect()
    }

    /// Right-hand sides for every incident channel, columns in S order, at
    /// lattice column j.
    fn source(&self, j: usize) -> Option<CMatrix> {
        let g = &self.land.grid;
        let open = self.lead.open;
        let side_offset = if j == 0 {
            0
        } else if j == g.nx - 1 {
            open
        } else {
            return None;
        };
        let mut b = CMatrix::zeros(g.ny, 2 * open);
        for m in 0..open {
            // flux-normalized unit incidence: 2i sin(qh) / √v = 2i h √v
            let amp = I * (2.0 * g.spacing * self.lead.velocity[m].sqrt());
            for i in 0..g.ny {
                if self.fluid(j, i) {
                    b[(i, side_offset + m)] += amp * self.lead.profiles[(i, m)];
                }
            }
        }
        Some(b)
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves the lattice Helmholtz problem for every incident open channel by
/// block-tridiagonal elimination along x and extracts the S-matrix.
pub fn solve_scattering(
    land: &IndexLandscape,
    lead: &LeadBasis,
    with_fields: bool,
) -> Result<Solution> {
    let g = land.grid;
    if lead.profiles.nrows() != g.ny {
        return Err(Error::DimensionMismatch {
            expected: g.ny,
            found: lead.profiles.nrows(),
        });
    }
    let op = ColumnOperator::new(land, lead);
    let n = lead.channels();
    let open = lead.open;

    // forward sweep: G_j = (A_j − C_{j−1} G_{j−1} C_{j−1})⁻¹, y_j = G_j (b_j − C_{j−1} y_{j−1})
    let mut greens: Vec<CMatrix> = Vec::with_capacity(g.nx);
    let mut partial: Vec<CMatrix> = Vec::with_capacity(g.nx);
    let mut couplings: Vec<Vec<bool>> = Vec::with_capacity(g.nx.saturating_sub(1));
    for j in 0..g.nx {
        let mut a = op.diagonal_block(j);
        let mut rhs = op.source(j).unwrap_or_else(|| CMatrix::zeros(g.ny, n));
        if j > 0 {
            let cpl = &couplings[j - 1];
            let prev_g: &CMatrix = &greens[j - 1];
            let prev_y: &CMatrix = &partial[j - 1];
            for r in 0..g.ny {
                if !cpl[r] {
                    continue;
                }
                for s in 0..g.ny {
                    if cpl[s] {
                        a[(r, s)] -= prev_g[(r, s)];
                    }
                }
                for col in 0..n {
                    rhs[(r, col)] -= prev_y[(r, col)];
                }
            }
        }
        let norm_a = one_norm(&a);
        let inv = a.try_inverse().ok_or(Error::Singular {
            column: j,
            condition: f64::INFINITY,
        })?;
        let condition = norm_a * one_norm(&inv);
        if !condition.is_finite() || condition > SINGULAR_CONDITION {
            return Err(Error::Singular { column: j, condition });
        }
        partial.push(&inv * rhs);
        greens.push(inv);
        if j + 1 < g.nx {
            couplings.push(op.coupling(j));
        }
    }

    // back substitution: ψ_j = y_j − G_j C_j ψ_{j+1}
    let last = g.nx - 1;
    let mut columns: Vec<CMatrix> = vec![CMatrix::zeros(0, 0); g.nx];
    columns[last] = partial[last].clone();
    for j in (0..last).rev() {
        let cpl = &couplings[j];
        let mut next = columns[j + 1].clone();
        for (r, &on) in cpl.iter().enumerate() {
            if !on {
                next.row_mut(r).fill(c(0.0, 0.0));
            }
        }
        columns[j] = &partial[j] - &greens[j] * next;
    }

    let open_profiles = lead.profiles.columns(0, open);
    let left_proj = open_profiles.transpose() * &columns[0];
    let right_proj = open_profiles.transpose() * &columns[last];
    let mut s = CMatrix::zeros(n, n);
    for col in 0..n {
        for m in 0..open {
            let sv = lead.velocity[m].sqrt();
            let mut left = left_proj[(m, col)];
            let mut right = right_proj[(m, col)];
            // remove the incident part before projecting onto outgoing waves
            if col == m {
                left -= 1.0 / sv;
            }
            if col == open + m {
                right -= 1.0 / sv;
            }
            s[(m, col)] = left * sv;
            s[(open + m, col)] = right * sv;
        }
    }
    let smatrix = ScatteringMatrix::new(s, lead.k);
    if smatrix.unitarity_defect > UNITARITY_WARNING {
        log::warn!(
            "S-matrix unitarity defect {:.3e} at k = {} (retained evanescent modes: {})",
            smatrix.unitarity_defect,
            lead.k,
            lead.evanescent
        );
    }

    let fields = if with_fields {
        (0..n)
            .map(|col| FieldMap {
                grid: g,
                incidence: Channel::from_index(col, open),
                values: CMatrix::from_fn(g.ny, g.nx, |i, j| columns[j][(i, col)]),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Solution { smatrix, fields })
}

/// ‖Aψ − b‖ / ‖ψ‖ of the lattice equation over every non-metallic node, with
/// the lead elimination applied at the end columns.
pub fn field_residual(land: &IndexLandscape, lead: &LeadBasis, field: &FieldMap) -> f64 {
    let g = land.grid;
    let op = ColumnOperator::new(land, lead);
    let col_of = |j: usize| field.values.column(j).into_owned();
    let src = field.incidence.index(lead.open);
    let mut residual = 0.0;
    for j in 0..g.nx {
        let mut r = op.diagonal_block(j) * col_of(j);
        if j > 0 {
            let cpl = op.coupling(j - 1);
            let prev = col_of(j - 1);
            for i in 0..g.ny {
                if cpl[i] {
                    r[i] += prev[i];
                }
            }
        }
        if j + 1 < g.nx {
            let cpl = op.coupling(j);
            let next = col_of(j + 1);
            for i in 0..g.ny {
                if cpl[i] {
                    r[i] += next[i];
                }
            }
        }
        if let Some(b) = op.source(j) {
            r -= b.column(src);
        }
        residual += r.norm_squared();
    }
    residual.sqrt() / field.values.norm().max(f64::MIN_POSITIVE)
}
