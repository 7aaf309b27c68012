use crate::error::Result;
use crate::scenario::{Material, Scenario};

/// Uniform lattice over the scattering region.
///
/// Transverse nodes sit at y_i = (i + 1)h for i in 0..ny so that the walls
/// y = 0 and y = W fall on the (excluded) rows −1 and ny. Columns sit at
/// x_j = j h for j in 0..nx; the leads start at columns −1 and nx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: f64,
    pub spacing: f64,
    pub ny: usize,
    pub nx: usize,
}

impl Grid {
    pub fn new(width: f64, length: f64, resolution: usize) -> Self {
        let spacing = width / (resolution as f64 + 1.0);
        let nx = ((length / spacing).round() as usize + 1).max(2);
        Self {
            width,
            spacing,
            ny: resolution,
            nx,
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::new(scenario.width, scenario.length, scenario.grid_resolution)
    }

    /// Distance between the two reference planes actually realised on the
    /// lattice.
    pub fn length(&self) -> f64 {
        (self.nx - 1) as f64 * self.spacing
    }

    pub fn x(&self, column: usize) -> f64 {
        column as f64 * self.spacing
    }

    pub fn y(&self, row: usize) -> f64 {
        (row + 1) as f64 * self.spacing
    }

    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node(&self, column: usize, row: usize) -> usize {
        column * self.ny + row
    }
}

/// Rasterized refractive-index landscape.
#[derive(Debug, Clone)]
pub struct IndexLandscape {
    pub grid: Grid,
    /// n² per node, column-major (`grid.node(j, i)`).
    pub n_squared: Vec<f64>,
    /// Nodes inside a metallic scatterer; they carry ψ = 0.
    pub metallic: Vec<bool>,
    /// Diagonal stencil correction Σ (1 − 1/d) over metallic neighbours, where
    /// d ∈ (0, 1] is the fractional distance to the metal border along the
    /// link. Zero everywhere when sub-grid borders are disabled.
    pub border_correction: Vec<f64>,
}

impl IndexLandscape {
    pub fn is_metallic(&self, column: usize, row: usize) -> bool {
        self.metallic[self.grid.node(column, row)]
    }

    pub fn metallic_count(&self) -> usize {
        self.metallic.iter().filter(|&&m| m).count()
    }
}

/// Rasterizes the scenario onto its lattice.
///
/// A node is metallic iff its centre lies inside a metallic scatterer. Its n²
/// is taken from the innermost (smallest-area) dielectric scatterer containing
/// it, or 1 in free space.
pub fn build_landscape(scenario: &Scenario) -> Result<IndexLandscape> {
    scenario.validate()?;
    let grid = Grid::for_scenario(scenario);
    let mut dielectrics: Vec<(f64, f64, &crate::scenario::Shape)> = scenario
        .scatterers
        .iter()
        .filter_map(|s| match s.material {
            Material::Dielectric { index } => Some((s.shape.area(), index * index, &s.shape)),
            Material::Metallic => None,
        })
        .collect();
    // innermost first; stable so later entries win ties through the reverse scan below
    dielectrics.sort_by(|a, b| a.0.total_cmp(&b.0));
    let metals: Vec<_> = scenario
        .scatterers
        .iter()
        .filter(|s| matches!(s.material, Material::Metallic))
        .map(|s| s.shape)
        .collect();
    let inside_metal = |x: f64, y: f64| metals.iter().any(|m| m.contains(x, y));

    let n = grid.nodes();
    let mut n_squared = vec![1.0; n];
    let mut metallic = vec![false; n];
    for j in 0..grid.nx {
        let x = grid.x(j);
        for i in 0..grid.ny {
            let y = grid.y(i);
            let node = grid.node(j, i);
            if inside_metal(x, y) {
                metallic[node] = true;
                continue;
            }
            let mut best: Option<(f64, f64)> = None;
            for &(area, n2, shape) in &dielectrics {
                if shape.contains(x, y) && best.is_none_or(|(a, _)| area <= a) {
                    best = Some((area, n2));
                }
            }
            if let Some((_, n2)) = best {
                n_squared[node] = n2;
            }
        }
    }

    let mut border_correction = vec![0.0; n];
    if scenario.subgrid_boundary && !metals.is_empty() {
        for j in 0..grid.nx {
            for i in 0..grid.ny {
                let node = grid.node(j, i);
                if metallic[node] {
                    continue;
                }
                let (x, y) = (grid.x(j), grid.y(i));
                let mut corr = 0.0;
                let neighbours = [
                    (j.checked_sub(1), Some(i)),
                    (Some(j + 1).filter(|&v| v < grid.nx), Some(i)),
                    (Some(j), i.checked_sub(1)),
                    (Some(j), Some(i + 1).filter(|&v| v < grid.ny)),
                ];
                for (nj, ni) in neighbours {
                    let (Some(nj), Some(ni)) = (nj, ni) else { continue };
                    if !metallic[grid.node(nj, ni)] {
                        continue;
                    }
                    let d = border_fraction((x, y), (grid.x(nj), grid.y(ni)), &inside_metal);
                    corr += 1.0 - 1.0 / d;
                }
                border_correction[node] = corr;
            }
        }
    }

    Ok(IndexLandscape {
        grid,
        n_squared,
        metallic,
        border_correction,
    })
}

/// Fraction t ∈ (0, 1] along the segment from an outside point to an inside
/// point at which the border is crossed, by bisection on the containment test.
fn border_fraction(from: (f64, f64), to: (f64, f64), inside: &impl Fn(f64, f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = (from.0 + mid * (to.0 - from.0), from.1 + mid * (to.1 - from.1));
        if inside(p.0, p.1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScattererSpec, Shape};

    #[test]
    fn empty_scenario_is_free_space() {
        let sc = Scenario::empty(1.0, 0.5, 3.5, 30);
        let land = build_landscape(&sc).unwrap();
        assert!(land.n_squared.iter().all(|&v| v == 1.0));
        assert_eq!(land.metallic_count(), 0);
        assert!(land.border_correction.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_target_block_and_disks() {
        let sc = Scenario::reference(1).unwrap();
        let land = build_landscape(&sc).unwrap();
        let g = land.grid;
        // side W/10 with spacing W/101 covers 10 node rows and columns
        let side_nodes = (0.1 / g.spacing).floor() as usize;
        let count = land.metallic_count();
        assert!(count >= side_nodes * side_nodes && count <= (side_nodes + 1).pow(2));
        let disk_nodes = land
            .n_squared
            .iter()
            .filter(|&&v| (v - 1.44f64 * 1.44).abs() < 1e-12)
            .count();
        let expected = 20.0 * std::f64::consts::PI * 0.05f64.powi(2) / g.spacing.powi(2);
        assert!((disk_nodes as f64 - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn nested_dielectric_inner_wins() {
        let mut sc = Scenario::empty(1.0, 1.0, 2.5, 40);
        sc.scatterers.push(ScattererSpec::dielectric(
            Shape::Circle {
                center: [0.5, 0.5],
                radius: 0.1,
            },
            2.0,
        ));
        sc.scatterers.push(ScattererSpec::dielectric(
            Shape::Circle {
                center: [0.5, 0.5],
                radius: 0.3,
            },
            1.5,
        ));
        let land = build_landscape(&sc).unwrap();
        let g = land.grid;
        // point-in-shape oracle over every node
        for j in 0..g.nx {
            for i in 0..g.ny {
                let (x, y) = (g.x(j), g.y(i));
                let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
                let expected = if r2 <= 0.01 {
                    4.0
                } else if r2 <= 0.09 {
                    2.25
                } else {
                    1.0
                };
                assert_eq!(land.n_squared[g.node(j, i)], expected);
            }
        }
    }

    #[test]
    fn border_correction_is_continuous_in_the_offset() {
        let base = Scenario::empty(1.0, 1.0, 2.5, 30).with_theta(Default::default());
        let mut sc = base.clone();
        sc.scatterers.push(
            ScattererSpec::metallic(Shape::Rectangle {
                center: [0.5, 0.5],
                size: [0.2, 0.2],
            })
            .as_target(),
        );
        let a = build_landscape(&sc.with_target_offset(1e-7, 0.0)).unwrap();
        let b = build_landscape(&sc.with_target_offset(2e-7, 0.0)).unwrap();
        assert_eq!(a.metallic, b.metallic);
        let diff: f64 = a
            .border_correction
            .iter()
            .zip(&b.border_correction)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-3);
    }
}
