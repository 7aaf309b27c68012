//! Waveguide scenarios: geometry, materials, the varied parameter θ and the
//! JSON file format.
//!
//! A scenario file looks like
//!
//! ```json
//! {
//!   "W": 1.0, "L": 1.0, "k_over_piW": 20.5, "grid_resolution": 100, "seed": 7,
//!   "scatterers": [
//!     {"shape": {"kind": "rectangle", "center": [0.5, 0.5], "size": [0.1, 0.1]},
//!      "material": {"kind": "metallic"}, "target": true}
//!   ],
//!   "disorder": {"count": 20, "radius": 0.05, "index": 1.44},
//!   "theta": {"kind": "x", "step": 1e-4}
//! }
//! ```
//!
//! `disorder` is expanded into explicit circles from `seed` when the file is
//! loaded, so a resolved [`Scenario`] always carries its full geometry.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle { center: [f64; 2], radius: f64 },
    Rectangle { center: [f64; 2], size: [f64; 2] },
}

impl Shape {
    /// Closed containment test (points on the border count as inside).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Circle { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rectangle { center, size } => {
                (x - center[0]).abs() <= 0.5 * size[0] && (y - center[1]).abs() <= 0.5 * size[1]
            }
        }
    }

    /// Axis-aligned bounding box `[xmin, xmax, ymin, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        match *self {
            Shape::Circle { center, radius } => [
                center[0] - radius,
                center[0] + radius,
                center[1] - radius,
                center[1] + radius,
            ],
            Shape::Rectangle { center, size } => [
                center[0] - 0.5 * size[0],
                center[0] + 0.5 * size[0],
                center[1] - 0.5 * size[1],
                center[1] + 0.5 * size[1],
            ],
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Circle { radius, .. } => PI * radius * radius,
            Shape::Rectangle { size, .. } => size[0] * size[1],
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Shape::Circle { center, .. } | Shape::Rectangle { center, .. } => center,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        let mut out = *self;
        match &mut out {
            Shape::Circle { center, .. } | Shape::Rectangle { center, .. } => {
                center[0] += dx;
                center[1] += dy;
            }
        }
        out
    }

    fn with_center(&self, c: [f64; 2]) -> Shape {
        let mut out = *self;
        match &mut out {
            Shape::Circle { center, .. } | Shape::Rectangle { center, .. } => *center = c,
        }
        out
    }

    /// Smallest distance between the border of `self` and a disk, negative
    /// when they overlap. Only used for disorder placement.
    fn gap_to_disk(&self, cx: f64, cy: f64, r: f64) -> f64 {
        match *self {
            Shape::Circle { center, radius } => {
                ((cx - center[0]).powi(2) + (cy - center[1]).powi(2)).sqrt() - radius - r
            }
            Shape::Rectangle { center, size } => {
                let qx = ((cx - center[0]).abs() - 0.5 * size[0]).max(0.0);
                let qy = ((cy - center[1]).abs() - 0.5 * size[1]).max(0.0);
                (qx * qx + qy * qy).sqrt() - r
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Material {
    Dielectric { index: f64 },
    /// Perfect conductor: Dirichlet boundary, nodes inside are removed.
    Metallic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererSpec {
    pub shape: Shape,
    pub material: Material,
    /// Marks the scatterer that moves when θ is a target coordinate.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub target: bool,
}

impl ScattererSpec {
    pub fn dielectric(shape: Shape, index: f64) -> Self {
        Self {
            shape,
            material: Material::Dielectric { index },
            target: false,
        }
    }

    pub fn metallic(shape: Shape) -> Self {
        Self {
            shape,
            material: Material::Metallic,
            target: false,
        }
    }

    pub fn as_target(mut self) -> Self {
        self.target = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaKind {
    #[serde(rename = "x", alias = "target-x")]
    TargetX,
    #[serde(rename = "y", alias = "target-y")]
    TargetY,
    #[serde(rename = "omega", alias = "frequency")]
    Frequency,
}

impl ThetaKind {
    pub fn label(self) -> &'static str {
        match self {
            ThetaKind::TargetX => "x",
            ThetaKind::TargetY => "y",
            ThetaKind::Frequency => "omega",
        }
    }
}

impl std::str::FromStr for ThetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "target-x" => Ok(ThetaKind::TargetX),
            "y" | "target-y" => Ok(ThetaKind::TargetY),
            "omega" | "frequency" | "k" => Ok(ThetaKind::Frequency),
            other => Err(Error::InvalidScenario(format!("unknown theta kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub kind: ThetaKind,
    /// Finite-difference step; `None` selects the per-kind default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Combine steps h and h/2 to cancel the O(h²) error.
    #[serde(default = "default_true")]
    pub richardson: bool,
}

impl Default for ThetaSpec {
    fn default() -> Self {
        Self {
            kind: ThetaKind::TargetX,
            step: None,
            richardson: true,
        }
    }
}

/// Randomly placed dielectric disks, drawn from the scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub count: usize,
    pub radius: f64,
    pub index: f64,
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(rename = "W")]
    pub width: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "k_over_piW")]
    pub k_over_pi_w: f64,
    pub grid_resolution: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scatterers: Vec<ScattererSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSpec>,
    #[serde(default)]
    pub theta: ThetaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evanescent_modes: Option<usize>,
    #[serde(default = "default_true")]
    pub subgrid_boundary: bool,
    #[serde(default = "default_margin")]
    pub cutoff_margin: f64,
}

fn default_true() -> bool {
    true
}

fn default_margin() -> f64 {
    DEFAULT_CUTOFF_MARGIN
}

/// Minimum distance of kW/π from an integer (a mode cutoff).
pub const DEFAULT_CUTOFF_MARGIN: f64 = 1e-3;

/// Transverse interior grid points per waveguide width.
pub const DEFAULT_RESOLUTION: usize = 100;

/// A fully resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub width: f64,
    pub length: f64,
    /// Vacuum wavenumber k = ω/c.
    pub k: f64,
    pub grid_resolution: usize,
    pub seed: u64,
    pub scatterers: Vec<ScattererSpec>,
    pub theta: ThetaSpec,
    /// Evanescent lead modes kept in the matching; `None` keeps all of them.
    pub evanescent_modes: Option<usize>,
    /// Resolve metallic borders below the grid spacing (see `solver::landscape`).
    pub subgrid_boundary: bool,
    pub cutoff_margin: f64,
}

impl Scenario {
    /// Empty waveguide of the given size.
    pub fn empty(width: f64, length: f64, k_over_pi_w: f64, grid_resolution: usize) -> Self {
        Self {
            width,
            length,
            k: k_over_pi_w * PI / width,
            grid_resolution,
            seed: 0,
            scatterers: Vec::new(),
            theta: ThetaSpec::default(),
            evanescent_modes: None,
            subgrid_boundary: true,
            cutoff_margin: DEFAULT_CUTOFF_MARGIN,
        }
    }

    /// The reference disordered system: unit-width square region at
    /// k = 20.5π/W, a metallic square target of side W/10 in the centre and
    /// twenty disks of radius W/20 and index 1.44 placed from `seed`.
    pub fn reference(seed: u64) -> Result<Self> {
        Self::reference_file(seed).resolve()
    }

    /// Unresolved form of [`Scenario::reference`], with the disorder still
    /// described by its seed.
    pub fn reference_file(seed: u64) -> ScenarioFile {
        ScenarioFile {
            width: 1.0,
            length: 1.0,
            k_over_pi_w: 20.5,
            grid_resolution: DEFAULT_RESOLUTION,
            seed,
            scatterers: vec![ScattererSpec::metallic(Shape::Rectangle {
                center: [0.5, 0.5],
                size: [0.1, 0.1],
            })
            .as_target()],
            disorder: Some(DisorderSpec {
                count: 20,
                radius: 0.05,
                index: 1.44,
            }),
            theta: ThetaSpec::default(),
            evanescent_modes: None,
            subgrid_boundary: true,
            cutoff_margin: DEFAULT_CUTOFF_MARGIN,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Explicit form with every scatterer listed.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            width: self.width,
            length: self.length,
            k_over_pi_w: self.k_over_pi_w(),
            grid_resolution: self.grid_resolution,
            seed: self.seed,
            scatterers: self.scatterers.clone(),
            disorder: None,
            theta: self.theta,
            evanescent_modes: self.evanescent_modes,
            subgrid_boundary: self.subgrid_boundary,
            cutoff_margin: self.cutoff_margin,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn k_over_pi_w(&self) -> f64 {
        self.k * self.width / PI
    }

    /// N' = ⌊kW/π⌋ in the continuum.
    pub fn open_modes_continuum(&self) -> usize {
        self.k_over_pi_w().floor().max(0.0) as usize
    }

    pub fn target(&self) -> Option<&ScattererSpec> {
        self.scatterers.iter().find(|s| s.target)
    }

    pub fn with_wavenumber(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_theta(&self, theta: ThetaSpec) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }

    pub fn with_resolution(&self, grid_resolution: usize) -> Self {
        Self {
            grid_resolution,
            ..self.clone()
        }
    }

    /// Moves the target by (dx, dy); scenarios without a target are returned
    /// unchanged.
    pub fn with_target_offset(&self, dx: f64, dy: f64) -> Self {
        let mut out = self.clone();
        for s in out.scatterers.iter_mut().filter(|s| s.target) {
            s.shape = s.shape.translated(dx, dy);
        }
        out
    }

    /// The scenario with θ shifted by `delta` from its reference value.
    pub fn displaced(&self, kind: ThetaKind, delta: f64) -> Self {
        match kind {
            ThetaKind::TargetX => self.with_target_offset(delta, 0.0),
            ThetaKind::TargetY => self.with_target_offset(0.0, delta),
            ThetaKind::Frequency => self.with_wavenumber(self.k + delta),
        }
    }

    /// Mirror image about x = L/2.
    pub fn mirrored_x(&self) -> Self {
        let mut out = self.clone();
        for s in out.scatterers.iter_mut() {
            let c = s.shape.center();
            s.shape = s.shape.with_center([self.length - c[0], c[1]]);
        }
        out
    }

    /// Mirror image about y = W/2.
    pub fn mirrored_y(&self) -> Self {
        let mut out = self.clone();
        for s in out.scatterers.iter_mut() {
            let c = s.shape.center();
            s.shape = s.shape.with_center([c[0], self.width - c[1]]);
        }
        out
    }

    /// Checks the invariants that do not depend on the grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.length > 0.0 && self.k > 0.0)
            || !(self.width.is_finite() && self.length.is_finite() && self.k.is_finite())
        {
            return Err(Error::InvalidScenario(format!(
                "W, L and k must be positive (W = {}, L = {}, k = {})",
                self.width, self.length, self.k
            )));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidScenario(
                "grid_resolution must be at least 2".into(),
            ));
        }
        if self.open_modes_continuum() < 1 {
            return Err(Error::NoOpenModes {
                k_over_pi_w: self.k_over_pi_w(),
            });
        }
        let kw = self.k_over_pi_w();
        let nearest = kw.round();
        if nearest >= 1.0 && (kw - nearest).abs() < self.cutoff_margin {
            return Err(Error::NearCutoff {
                mode: nearest as usize,
                distance: (kw - nearest).abs(),
                margin: self.cutoff_margin,
            });
        }
        if self.scatterers.iter().filter(|s| s.target).count() > 1 {
            return Err(Error::InvalidScenario("more than one target".into()));
        }
        let tol = 1e-12 * self.width.max(self.length);
        for (idx, s) in self.scatterers.iter().enumerate() {
            let [x0, x1, y0, y1] = s.shape.bounds();
            if x0 < -tol || x1 > self.length + tol || y0 < -tol || y1 > self.width + tol {
                return Err(Error::Geometry(format!(
                    "scatterer {idx} extends outside the scattering region [0, {}] x [0, {}]",
                    self.length, self.width
                )));
            }
            match s.shape {
                Shape::Circle { radius, .. } if !(radius > 0.0) => {
                    return Err(Error::Geometry(format!("scatterer {idx}: radius must be positive")));
                }
                Shape::Rectangle { size, .. } if !(size[0] > 0.0 && size[1] > 0.0) => {
                    return Err(Error::Geometry(format!("scatterer {idx}: sides must be positive")));
                }
                _ => {}
            }
            if let Material::Dielectric { index } = s.material {
                if !(index >= 1.0 && index.is_finite()) {
                    return Err(Error::InvalidScenario(format!(
                        "scatterer {idx}: refractive index {index} must be real and >= 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl ScenarioFile {
    /// Expands the disorder block and validates.
    pub fn resolve(self) -> Result<Scenario> {
        let mut scatterers = self.scatterers.clone();
        if let Some(disorder) = self.disorder {
            let placed = place_disorder(
                &disorder,
                self.width,
                self.length,
                &self.scatterers,
                self.seed,
            )?;
            scatterers.extend(placed);
        }
        let scenario = Scenario {
            width: self.width,
            length: self.length,
            k: self.k_over_pi_w * PI / self.width,
            grid_resolution: self.grid_resolution,
            seed: self.seed,
            scatterers,
            theta: self.theta,
            evanescent_modes: self.evanescent_modes,
            subgrid_boundary: self.subgrid_boundary,
            cutoff_margin: self.cutoff_margin,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Uniform rejection sampling of non-overlapping disks that avoid every
/// explicitly listed scatterer and stay inside the scattering region.
pub fn place_disorder(
    spec: &DisorderSpec,
    width: f64,
    length: f64,
    avoid: &[ScattererSpec],
    seed: u64,
) -> Result<Vec<ScattererSpec>> {
    let r = spec.radius;
    if !(r > 0.0) || 2.0 * r > width.min(length) {
        return Err(Error::Geometry(format!(
            "disorder radius {r} does not fit in the scattering region"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<ScattererSpec> = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while placed.len() < spec.count {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::Geometry(format!(
                "could not place {} disks of radius {r} after {MAX_PLACEMENT_ATTEMPTS} attempts",
                spec.count
            )));
        }
        let x = rng.random_range(r..=length - r);
        let y = rng.random_range(r..=width - r);
        let clear = avoid
            .iter()
            .chain(placed.iter())
            .all(|s| s.shape.gap_to_disk(x, y, r) > 0.0);
        if clear {
            placed.push(ScattererSpec::dielectric(
                Shape::Circle {
                    center: [x, y],
                    radius: r,
                },
                spec.index,
            ));
        }
    }
    Ok(placed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario_is_reproducible() {
        let a = Scenario::reference(11).unwrap();
        let b = Scenario::reference(11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scatterers.len(), 21);
        assert_eq!(a.open_modes_continuum(), 20);
        let c = Scenario::reference(12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn disks_avoid_target_and_each_other() {
        let sc = Scenario::reference(3).unwrap();
        let disks: Vec<_> = sc.scatterers.iter().filter(|s| !s.target).collect();
        let target = sc.target().unwrap();
        for (i, a) in disks.iter().enumerate() {
            let ca = a.shape.center();
            assert!(target.shape.gap_to_disk(ca[0], ca[1], 0.05) > 0.0);
            for b in &disks[i + 1..] {
                let cb = b.shape.center();
                assert!(((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt() > 0.1);
            }
        }
    }

    #[test]
    fn json_round_trip_keeps_geometry() {
        let sc = Scenario::reference(5).unwrap();
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        assert_eq!(sc.scatterers, back.scatterers);
        assert!((sc.k - back.k).abs() < 1e-12);
    }

    #[test]
    fn parses_documented_format() {
        let text = r#"{
            "W": 1.0, "L": 2.0, "k_over_piW": 3.5, "grid_resolution": 40, "seed": 9,
            "scatterers": [
                {"shape": {"kind": "circle", "center": [1.0, 0.5], "radius": 0.1},
                 "material": {"kind": "dielectric", "index": 2.0}},
                {"shape": {"kind": "rectangle", "center": [0.5, 0.5], "size": [0.1, 0.2]},
                 "material": {"kind": "metallic"}, "target": true}
            ],
            "theta": {"kind": "target-y", "step": 0.001}
        }"#;
        let sc = Scenario::from_json(text).unwrap();
        assert_eq!(sc.theta.kind, ThetaKind::TargetY);
        assert_eq!(sc.theta.step, Some(0.001));
        assert_eq!(sc.open_modes_continuum(), 3);
        assert!(sc.target().is_some());
    }

    #[test]
    fn rejects_scatterer_outside_region() {
        let mut sc = Scenario::empty(1.0, 1.0, 2.5, 20);
        sc.scatterers.push(ScattererSpec::dielectric(
            Shape::Circle {
                center: [0.98, 0.5],
                radius: 0.05,
            },
            1.5,
        ));
        assert!(matches!(sc.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn rejects_cutoff_and_closed_guides() {
        assert!(matches!(
            Scenario::empty(1.0, 1.0, 0.7, 20).validate(),
            Err(Error::NoOpenModes { .. })
        ));
        assert!(matches!(
            Scenario::empty(1.0, 1.0, 3.0000001, 20).validate(),
            Err(Error::NearCutoff { mode: 3, .. })
        ));
    }

    #[test]
    fn mirror_is_an_involution() {
        let sc = Scenario::reference(2).unwrap();
        let back = sc.mirrored_x().mirrored_x();
        for (a, b) in sc.scatterers.iter().zip(&back.scatterers) {
            let (ca, cb) = (a.shape.center(), b.shape.center());
            assert!((ca[0] - cb[0]).abs() < 1e-15 && (ca[1] - cb[1]).abs() < 1e-15);
        }
    }
}
