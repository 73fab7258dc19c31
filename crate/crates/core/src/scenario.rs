//! World snapshot: the RoI grid, CAV states, scenario generation and
//! JSON persistence.
//!
//! A scenario is one frozen snapshot of the road of interest. All downstream
//! algorithms (confidence, assignment, scheduling) read from it; nothing
//! mutates it. Generation is fully determined by the seed.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version written into every scenario document.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// How far outside the RoI bounding box a CAV position may sit before
/// validation rejects the scenario.
pub const DEFAULT_POSITION_MARGIN_M: f64 = 50.0;

/// Default CAV fusion capability, 0.1 TFLOPS.
pub const DEFAULT_CAV_COMPUTE_FLOPS: f64 = 1.0e11;

/// A 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Identifier of one CAV, unique within a scenario.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct CavId(pub u32);

impl fmt::Display for CavId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Identifier of one grid area (cell index, row-major).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AreaId(pub u32);

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// The RoI partition into non-overlapping grid cells.
///
/// Cells tile the rectangle `[origin, origin + (width_m, height_m))` in
/// row-major order; the cell count per axis is `ceil(extent / cell)`, so the
/// last row/column may be clipped when the extent is not an exact multiple of
/// the cell size. `occupied` holds the cells currently occupied by at least
/// one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiGrid {
    pub origin: Point,
    pub width_m: f64,
    pub height_m: f64,
    pub cell_w: f64,
    pub cell_h: f64,
    pub occupied: BTreeSet<AreaId>,
}

/// Grid geometry without occupancy, used as generation input and as the
/// serialized `grid` block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub width_m: f64,
    pub height_m: f64,
    pub cell_w: f64,
    pub cell_h: f64,
}

impl Default for GridSpec {
    /// The 280 m x 80 m RoI with 10 m x 6 m cells.
    fn default() -> Self {
        GridSpec {
            origin: Point::new(0.0, 0.0),
            width_m: 280.0,
            height_m: 80.0,
            cell_w: 10.0,
            cell_h: 6.0,
        }
    }
}

impl RoiGrid {
    /// Builds an empty grid tiling `width_m x height_m` with `cell_w x cell_h`
    /// cells (ceiling division per axis).
    pub fn build(width_m: f64, height_m: f64, cell_w: f64, cell_h: f64) -> Result<RoiGrid> {
        Self::build_at(Point::new(0.0, 0.0), width_m, height_m, cell_w, cell_h)
    }

    pub fn build_at(
        origin: Point,
        width_m: f64,
        height_m: f64,
        cell_w: f64,
        cell_h: f64,
    ) -> Result<RoiGrid> {
        for (name, v) in [
            ("width_m", width_m),
            ("height_m", height_m),
            ("cell_w", cell_w),
            ("cell_h", cell_h),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "grid dimension {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(RoiGrid {
            origin,
            width_m,
            height_m,
            cell_w,
            cell_h,
            occupied: BTreeSet::new(),
        })
    }

    pub fn from_spec(spec: &GridSpec) -> Result<RoiGrid> {
        Self::build_at(
            spec.origin,
            spec.width_m,
            spec.height_m,
            spec.cell_w,
            spec.cell_h,
        )
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            origin: self.origin,
            width_m: self.width_m,
            height_m: self.height_m,
            cell_w: self.cell_w,
            cell_h: self.cell_h,
        }
    }

    pub fn n_cols(&self) -> u32 {
        (self.width_m / self.cell_w).ceil() as u32
    }

    pub fn n_rows(&self) -> u32 {
        (self.height_m / self.cell_h).ceil() as u32
    }

    pub fn n_cells(&self) -> u32 {
        self.n_cols() * self.n_rows()
    }

    /// True when the point lies in the half-open RoI rectangle.
    pub fn contains(&self, p: &Point) -> bool {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        dx >= 0.0 && dx < self.width_m && dy >= 0.0 && dy < self.height_m
    }

    /// Cell containing `p`, or `None` when `p` lies outside the RoI.
    pub fn cell_of(&self, p: &Point) -> Option<AreaId> {
        if !self.contains(p) {
            return None;
        }
        let ix = ((p.x - self.origin.x) / self.cell_w) as u32;
        let iy = ((p.y - self.origin.y) / self.cell_h) as u32;
        let ix = ix.min(self.n_cols() - 1);
        let iy = iy.min(self.n_rows() - 1);
        Some(AreaId(iy * self.n_cols() + ix))
    }

    /// Bounding box of a cell, clipped to the RoI. Returns `(min, max)`.
    pub fn cell_bbox(&self, area: AreaId) -> Option<(Point, Point)> {
        if area.0 >= self.n_cells() {
            return None;
        }
        let ix = area.0 % self.n_cols();
        let iy = area.0 / self.n_cols();
        let x0 = self.origin.x + f64::from(ix) * self.cell_w;
        let y0 = self.origin.y + f64::from(iy) * self.cell_h;
        let x1 = (x0 + self.cell_w).min(self.origin.x + self.width_m);
        let y1 = (y0 + self.cell_h).min(self.origin.y + self.height_m);
        Some((Point::new(x0, y0), Point::new(x1, y1)))
    }

    /// Center of the clipped cell box.
    pub fn cell_center(&self, area: AreaId) -> Option<Point> {
        self.cell_bbox(area)
            .map(|(lo, hi)| Point::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0))
    }

    /// Returns a grid whose occupancy is the union of the current occupancy
    /// and the cells containing the given positions. Positions outside the
    /// RoI are ignored.
    pub fn mark_occupancy(&self, positions: &[Point]) -> RoiGrid {
        let mut grid = self.clone();
        for p in positions {
            if let Some(cell) = grid.cell_of(p) {
                grid.occupied.insert(cell);
            }
        }
        grid
    }
}

/// One CAV's identity, pose, compute capacity, and radio role.
#[derive(Debug, Clone, PartialEq)]
pub struct CavState {
    pub id: CavId,
    pub position: Point,
    pub heading_deg: f64,
    pub compute_flops: f64,
    pub is_infrastructure: bool,
}

/// Where per-(area, CAV) confidences come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceSource {
    Synthetic,
    File(PathBuf),
}

/// A reproducible world snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: RoiGrid,
    pub cavs: Vec<CavState>,
    pub background: Vec<Point>,
    pub seed: u64,
    pub confidence_source: ConfidenceSource,
}

impl Scenario {
    /// Generates a scenario deterministically from `seed`.
    ///
    /// CAV and background positions are drawn uniformly within the RoI;
    /// occupancy is marked from all vehicles. Background vehicles carry no
    /// sensors and exist only to occupy cells.
    pub fn generate(
        seed: u64,
        n_cavs: u32,
        n_background: u32,
        grid_spec: &GridSpec,
    ) -> Result<Scenario> {
        if n_cavs == 0 {
            return Err(Error::InvalidArgument(
                "a scenario needs at least one CAV".into(),
            ));
        }
        let grid = RoiGrid::from_spec(grid_spec)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let draw_point = |rng: &mut ChaCha12Rng| {
            Point::new(
                grid.origin.x + rng.random_range(0.0..grid.width_m),
                grid.origin.y + rng.random_range(0.0..grid.height_m),
            )
        };
        let cavs: Vec<CavState> = (0..n_cavs)
            .map(|i| {
                let position = draw_point(&mut rng);
                let heading_deg = rng.random_range(0.0..360.0);
                CavState {
                    id: CavId(i),
                    position,
                    heading_deg,
                    compute_flops: DEFAULT_CAV_COMPUTE_FLOPS,
                    is_infrastructure: false,
                }
            })
            .collect();
        let background: Vec<Point> = (0..n_background).map(|_| draw_point(&mut rng)).collect();

        let all_positions: Vec<Point> = cavs
            .iter()
            .map(|c| c.position)
            .chain(background.iter().copied())
            .collect();
        let grid = grid.mark_occupancy(&all_positions);

        let scenario = Scenario {
            grid,
            cavs,
            background,
            seed,
            confidence_source: ConfidenceSource::Synthetic,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn n_cavs(&self) -> usize {
        self.cavs.len()
    }

    /// CAV ids in ascending order.
    pub fn cav_ids(&self) -> Vec<CavId> {
        let mut ids: Vec<CavId> = self.cavs.iter().map(|c| c.id).collect();
        ids.sort();
        ids
    }

    pub fn positions(&self) -> std::collections::BTreeMap<CavId, Point> {
        self.cavs.iter().map(|c| (c.id, c.position)).collect()
    }

    pub fn compute_map(&self) -> std::collections::BTreeMap<CavId, f64> {
        self.cavs.iter().map(|c| (c.id, c.compute_flops)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_margin(DEFAULT_POSITION_MARGIN_M)
    }

    pub fn validate_with_margin(&self, margin_m: f64) -> Result<()> {
        if self.cavs.is_empty() {
            return Err(Error::Validation("scenario has no CAVs".into()));
        }
        let mut seen = BTreeSet::new();
        for cav in &self.cavs {
            if !seen.insert(cav.id) {
                return Err(Error::Validation(format!("duplicate CAV id {}", cav.id)));
            }
            if !(cav.compute_flops > 0.0) {
                return Err(Error::Validation(format!(
                    "CAV {} has non-positive compute capacity",
                    cav.id
                )));
            }
            if !cav.position.is_finite() {
                return Err(Error::Validation(format!(
                    "CAV {} has a non-finite position",
                    cav.id
                )));
            }
            let g = &self.grid;
            let inside = cav.position.x >= g.origin.x - margin_m
                && cav.position.x <= g.origin.x + g.width_m + margin_m
                && cav.position.y >= g.origin.y - margin_m
                && cav.position.y <= g.origin.y + g.height_m + margin_m;
            if !inside {
                return Err(Error::Validation(format!(
                    "CAV {} position ({}, {}) lies more than {margin_m} m outside the RoI",
                    cav.id, cav.position.x, cav.position.y
                )));
            }
        }
        for p in &self.background {
            if !p.is_finite() {
                return Err(Error::Validation(
                    "background vehicle has a non-finite position".into(),
                ));
            }
        }
        let n_cells = self.grid.n_cells();
        if let Some(cell) = self.grid.occupied.iter().find(|c| c.0 >= n_cells) {
            return Err(Error::Validation(format!(
                "occupied cell {cell} is out of grid range ({n_cells} cells)"
            )));
        }
        Ok(())
    }

    /// Writes the scenario as a pretty-printed JSON document. Byte-identical
    /// across reruns for equal scenarios.
    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = ScenarioDoc::from_scenario(self);
        let mut bytes = serde_json::to_vec_pretty(&doc)
            .map_err(|e| Error::Parse(format!("serializing scenario: {e}")))?;
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Loads and validates a scenario document. Occupancy is recomputed from
    /// the stored vehicle positions.
    pub fn load(path: &Path) -> Result<Scenario> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let doc: ScenarioDoc = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let scenario = doc.into_scenario()?;
        scenario.validate()?;
        Ok(scenario)
    }
}

// --- on-disk document -------------------------------------------------------
//
// Schema: {version, grid:{origin,width_m,height_m,cell_w,cell_h},
//          cavs:[{id,x,y,heading,compute_flops,infra}], background:[{x,y}],
//          seed, confidence:{source, path?}}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    version: u32,
    grid: GridSpec,
    cavs: Vec<CavDoc>,
    background: Vec<BackgroundDoc>,
    seed: u64,
    confidence: ConfidenceDoc,
}

#[derive(Serialize, Deserialize)]
struct CavDoc {
    id: u32,
    x: f64,
    y: f64,
    heading: f64,
    compute_flops: f64,
    infra: bool,
}

#[derive(Serialize, Deserialize)]
struct BackgroundDoc {
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct ConfidenceDoc {
    source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    path: Option<String>,
}

impl ScenarioDoc {
    fn from_scenario(s: &Scenario) -> ScenarioDoc {
        let (source, path) = match &s.confidence_source {
            ConfidenceSource::Synthetic => ("synthetic".to_string(), None),
            ConfidenceSource::File(p) => ("file".to_string(), Some(p.display().to_string())),
        };
        ScenarioDoc {
            version: SCENARIO_SCHEMA_VERSION,
            grid: s.grid.spec(),
            cavs: s
                .cavs
                .iter()
                .map(|c| CavDoc {
                    id: c.id.0,
                    x: c.position.x,
                    y: c.position.y,
                    heading: c.heading_deg,
                    compute_flops: c.compute_flops,
                    infra: c.is_infrastructure,
                })
                .collect(),
            background: s
                .background
                .iter()
                .map(|p| BackgroundDoc { x: p.x, y: p.y })
                .collect(),
            seed: s.seed,
            confidence: ConfidenceDoc { source, path },
        }
    }

    fn into_scenario(self) -> Result<Scenario> {
        if self.version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported scenario schema version {} (expected {})",
                self.version, SCENARIO_SCHEMA_VERSION
            )));
        }
        let confidence_source = match self.confidence.source.as_str() {
            "synthetic" => ConfidenceSource::Synthetic,
            "file" => {
                let path = self.confidence.path.ok_or_else(|| {
                    Error::Validation("confidence source 'file' requires a path".into())
                })?;
                ConfidenceSource::File(PathBuf::from(path))
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown confidence source '{other}'"
                )))
            }
        };
        let grid = RoiGrid::from_spec(&self.grid)?;
        let cavs: Vec<CavState> = self
            .cavs
            .into_iter()
            .map(|c| CavState {
                id: CavId(c.id),
                position: Point::new(c.x, c.y),
                heading_deg: c.heading,
                compute_flops: c.compute_flops,
                is_infrastructure: c.infra,
            })
            .collect();
        let background: Vec<Point> = self
            .background
            .into_iter()
            .map(|b| Point::new(b.x, b.y))
            .collect();
        let all_positions: Vec<Point> = cavs
            .iter()
            .map(|c| c.position)
            .chain(background.iter().copied())
            .collect();
        let grid = grid.mark_occupancy(&all_positions);
        Ok(Scenario {
            grid,
            cavs,
            background,
            seed: self.seed,
            confidence_source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_280x80_has_392_cells() {
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        assert_eq!(g.n_cols(), 28);
        assert_eq!(g.n_rows(), 14);
        assert_eq!(g.n_cells(), 392);
        assert!(g.occupied.is_empty());
    }

    #[test]
    fn grid_single_cell() {
        let g = RoiGrid::build(10.0, 6.0, 10.0, 6.0).unwrap();
        assert_eq!(g.n_cells(), 1);
    }

    #[test]
    fn grid_2x2_tiling() {
        let g = RoiGrid::build(20.0, 12.0, 10.0, 6.0).unwrap();
        assert_eq!(g.n_cells(), 4);
    }

    #[test]
    fn grid_rejects_non_positive_dimensions() {
        assert!(matches!(
            RoiGrid::build(0.0, 80.0, 10.0, 6.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            RoiGrid::build(280.0, 80.0, -10.0, 6.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn clipped_boundary_cell_bbox() {
        // 80 / 6 leaves a 2 m tall last row.
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        let last_row_cell = AreaId(13 * 28); // row 13, column 0
        let (lo, hi) = g.cell_bbox(last_row_cell).unwrap();
        assert_eq!(lo.y, 78.0);
        assert_eq!(hi.y, 80.0);
        let center = g.cell_center(last_row_cell).unwrap();
        assert_eq!(center.y, 79.0);
    }

    #[test]
    fn mark_occupancy_empty() {
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        let g = g.mark_occupancy(&[]);
        assert!(g.occupied.is_empty());
    }

    #[test]
    fn mark_occupancy_single_vehicle() {
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        let g = g.mark_occupancy(&[Point::new(5.0, 3.0)]);
        assert_eq!(g.occupied.len(), 1);
        assert!(g.occupied.contains(&AreaId(0)));
    }

    #[test]
    fn mark_occupancy_same_cell_twice() {
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        let g = g.mark_occupancy(&[Point::new(5.0, 3.0), Point::new(6.0, 2.0)]);
        assert_eq!(g.occupied.len(), 1);
    }

    #[test]
    fn mark_occupancy_ignores_outside_points() {
        let g = RoiGrid::build(280.0, 80.0, 10.0, 6.0).unwrap();
        let g = g.mark_occupancy(&[Point::new(-1.0, 3.0), Point::new(280.0, 3.0)]);
        assert!(g.occupied.is_empty());
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = GridSpec::default();
        let a = Scenario::generate(7, 2, 10, &spec).unwrap();
        let b = Scenario::generate(7, 2, 10, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_differs_across_seeds() {
        // Statistical check over 100 seed pairs: position multisets differ.
        let spec = GridSpec::default();
        for seed in 0..100u64 {
            let a = Scenario::generate(seed, 3, 5, &spec).unwrap();
            let b = Scenario::generate(seed + 1000, 3, 5, &spec).unwrap();
            let pos_a: Vec<Point> = a.cavs.iter().map(|c| c.position).collect();
            let pos_b: Vec<Point> = b.cavs.iter().map(|c| c.position).collect();
            assert_ne!(pos_a, pos_b, "seeds {seed} and {} collided", seed + 1000);
        }
    }

    #[test]
    fn generate_rejects_zero_cavs() {
        assert!(matches!(
            Scenario::generate(7, 0, 10, &GridSpec::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        let s = Scenario::generate(42, 4, 12, &GridSpec::default()).unwrap();
        s.save(&path).unwrap();
        let loaded = Scenario::load(&path).unwrap();
        assert_eq!(s, loaded);
    }

    #[test]
    fn load_missing_file_is_io_error() {
        let err = Scenario::load(Path::new("/nonexistent/scenario.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn load_truncated_file_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truncated.json");
        let s = Scenario::generate(42, 2, 3, &GridSpec::default()).unwrap();
        s.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        let err = Scenario::load(&path).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn load_duplicate_cav_ids_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.json");
        let mut s = Scenario::generate(42, 2, 0, &GridSpec::default()).unwrap();
        s.cavs[1].id = s.cavs[0].id;
        // Bypass save-side validation by writing the document directly.
        let doc = ScenarioDoc::from_scenario(&s);
        fs::write(&path, serde_json::to_vec_pretty(&doc).unwrap()).unwrap();
        let err = Scenario::load(&path).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn save_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        let s = Scenario::generate(9, 3, 7, &GridSpec::default()).unwrap();
        s.save(&p1).unwrap();
        s.save(&p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }
}
