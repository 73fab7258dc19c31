//! Per-(area, CAV) confidence values and the collaborative / global
//! confidence formulas.
//!
//! The neural confidence decoder is replaced by two providers: a synthetic
//! distance/occlusion model and a CSV loading path for externally produced
//! matrices. Downstream algorithms only consume the scalar values.
//!
//! For a group `V` perceiving area `i`, the collaborative confidence is
//! `F_i(V) = 1 - prod_{v in V} (1 - F_i({v}))`, and the global confidence is
//! the mean of `F_i` over all occupied areas, with unassigned areas
//! contributing zero.

use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::scenario::{AreaId, CavId, Point, RoiGrid, Scenario};

/// Dense matrix of per-(area, CAV) confidence values in `[0, 1]`.
///
/// Rows are the occupied cells of the scenario grid in ascending cell-index
/// order; columns are CAV ids in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    area_ids: Vec<AreaId>,
    cav_ids: Vec<CavId>,
    values: Vec<f64>,
}

impl ConfidenceMap {
    /// Builds a map from raw values (row-major, `area_ids.len() x
    /// cav_ids.len()`), validating range and dimensions.
    pub fn from_values(
        area_ids: Vec<AreaId>,
        cav_ids: Vec<CavId>,
        values: Vec<f64>,
    ) -> Result<ConfidenceMap> {
        if values.len() != area_ids.len() * cav_ids.len() {
            return Err(Error::Validation(format!(
                "confidence matrix has {} values, expected {} x {}",
                values.len(),
                area_ids.len(),
                cav_ids.len()
            )));
        }
        if !area_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation(
                "confidence area ids must be strictly ascending".into(),
            ));
        }
        if !cav_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Validation(
                "confidence CAV ids must be strictly ascending".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!(
                "confidence value {v} is outside [0, 1]"
            )));
        }
        Ok(ConfidenceMap {
            area_ids,
            cav_ids,
            values,
        })
    }

    pub fn n_areas(&self) -> usize {
        self.area_ids.len()
    }

    pub fn n_cavs(&self) -> usize {
        self.cav_ids.len()
    }

    pub fn area_ids(&self) -> &[AreaId] {
        &self.area_ids
    }

    pub fn cav_ids(&self) -> &[CavId] {
        &self.cav_ids
    }

    fn row_of(&self, area: AreaId) -> Result<usize> {
        self.area_ids
            .binary_search(&area)
            .map_err(|_| Error::InvalidArgument(format!("unknown area {area}")))
    }

    fn col_of(&self, cav: CavId) -> Result<usize> {
        self.cav_ids
            .binary_search(&cav)
            .map_err(|_| Error::InvalidArgument(format!("unknown CAV {cav}")))
    }

    /// Confidence of a single CAV for one area.
    pub fn value(&self, area: AreaId, cav: CavId) -> Result<f64> {
        let row = self.row_of(area)?;
        let col = self.col_of(cav)?;
        Ok(self.values[row * self.cav_ids.len() + col])
    }

    /// Row slice for one area, in ascending CAV-id order.
    pub fn row(&self, area: AreaId) -> Result<&[f64]> {
        let row = self.row_of(area)?;
        let w = self.cav_ids.len();
        Ok(&self.values[row * w..(row + 1) * w])
    }
}

/// Parameters of the synthetic distance/occlusion confidence provider.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticConfidenceParams {
    /// Confidence of a CAV centered on an unoccluded area, in `(0, 1]`.
    pub base: f64,
    /// Exponential decay length of confidence with distance, meters.
    pub decay_length_m: f64,
    /// Multiplicative factor per occluding occupied cell, in `[0, 1]`.
    pub occlusion_penalty: f64,
    /// Standard deviation of additive Gaussian noise (clamped to `[0, 1]`).
    pub noise_sigma: f64,
}

impl Default for SyntheticConfidenceParams {
    fn default() -> Self {
        SyntheticConfidenceParams {
            base: 0.95,
            decay_length_m: 80.0,
            occlusion_penalty: 0.7,
            noise_sigma: 0.02,
        }
    }
}

impl SyntheticConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.base > 0.0 && self.base <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "base must be in (0, 1], got {}",
                self.base
            )));
        }
        if !(self.decay_length_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "decay_length_m must be positive, got {}",
                self.decay_length_m
            )));
        }
        if !(0.0..=1.0).contains(&self.occlusion_penalty) {
            return Err(Error::InvalidArgument(format!(
                "occlusion_penalty must be in [0, 1], got {}",
                self.occlusion_penalty
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Number of occupied cells crossed by the open segment from `from` to the
/// center of `area`, excluding the cell containing `from` and `area` itself.
///
/// A cell counts when the segment overlaps its (clipped) box with positive
/// length, tested with Liang-Barsky clipping; this is deterministic and
/// independent of traversal order.
pub fn occluder_count(grid: &RoiGrid, from: Point, area: AreaId) -> usize {
    let Some(to) = grid.cell_center(area) else {
        return 0;
    };
    let from_cell = grid.cell_of(&from);
    let mut count = 0;
    for &cell in &grid.occupied {
        if cell == area || Some(cell) == from_cell {
            continue;
        }
        let Some((lo, hi)) = grid.cell_bbox(cell) else {
            continue;
        };
        if segment_crosses_box(from, to, lo, hi) {
            count += 1;
        }
    }
    count
}

/// Liang-Barsky test for positive-length overlap between segment `a->b` and
/// the axis-aligned box `[lo, hi]`.
fn segment_crosses_box(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    const EPS: f64 = 1e-12;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a.x - lo.x),
        (dx, hi.x - a.x),
        (-dy, a.y - lo.y),
        (dy, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false; // parallel and outside
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 >= t1 {
                return false;
            }
        }
    }
    t1 - t0 > EPS
}

/// Synthetic confidence provider.
///
/// `values[i][j] = clamp(base * exp(-d_ij / decay_length) * penalty^k + eps, 0, 1)`
/// where `d_ij` is the CAV-to-cell-center distance, `k` the occluder count of
/// [`occluder_count`], and `eps` zero-mean Gaussian noise with the configured
/// sigma. Entries are drawn in row-major order, so equal
/// `(scenario, params, seed)` yield bit-identical maps.
pub fn synthetic_confidence(
    scenario: &Scenario,
    params: &SyntheticConfidenceParams,
    seed: u64,
) -> Result<ConfidenceMap> {
    params.validate()?;
    let area_ids: Vec<AreaId> = scenario.grid.occupied.iter().copied().collect();
    let cav_ids = scenario.cav_ids();
    let positions = scenario.positions();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(area_ids.len() * cav_ids.len());
    for &area in &area_ids {
        let center = scenario
            .grid
            .cell_center(area)
            .ok_or_else(|| Error::Validation(format!("occupied cell {area} out of range")))?;
        for cav in &cav_ids {
            let pos = positions[cav];
            let d = pos.distance(&center);
            let k = occluder_count(&scenario.grid, pos, area);
            let mut v = params.base
                * (-d / params.decay_length_m).exp()
                * params.occlusion_penalty.powi(k as i32);
            if params.noise_sigma > 0.0 {
                let eps: f64 = StandardNormal.sample(&mut rng);
                v += eps * params.noise_sigma;
            }
            values.push(v.clamp(0.0, 1.0));
        }
    }
    ConfidenceMap::from_values(area_ids, cav_ids, values)
}

/// Loads a confidence matrix from CSV: one row per occupied area (ascending
/// cell index), one column per CAV (ascending id), no header.
pub fn load_confidence(path: &Path, scenario: &Scenario) -> Result<ConfidenceMap> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let area_ids: Vec<AreaId> = scenario.grid.occupied.iter().copied().collect();
    let cav_ids = scenario.cav_ids();
    let mut values = Vec::with_capacity(area_ids.len() * cav_ids.len());
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if record.len() != cav_ids.len() {
            return Err(Error::Validation(format!(
                "confidence row {n_rows} has {} columns, expected {}",
                record.len(),
                cav_ids.len()
            )));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|e| Error::Parse(format!("bad confidence value '{field}': {e}")))?;
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows != area_ids.len() {
        return Err(Error::Validation(format!(
            "confidence file has {n_rows} rows, expected {} occupied areas",
            area_ids.len()
        )));
    }
    ConfidenceMap::from_values(area_ids, cav_ids, values)
}

/// Collaborative confidence of a member group for one area:
/// `1 - prod_{k in members} (1 - values[area][k])`.
pub fn group_confidence(
    map: &ConfidenceMap,
    area: AreaId,
    members: &BTreeSet<CavId>,
) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "empty member set for area {area}; unassigned areas have confidence 0 by convention"
        )));
    }
    let mut miss = 1.0;
    for &cav in members {
        miss *= 1.0 - map.value(area, cav)?;
    }
    Ok(1.0 - miss)
}

/// Global confidence: mean of group confidences over all occupied areas,
/// counting unassigned areas as zero.
pub fn global_confidence(map: &ConfidenceMap, assignment: &Assignment) -> f64 {
    if map.n_areas() == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for &area in map.area_ids() {
        if let Some(group) = assignment.groups.get(&area) {
            let members: BTreeSet<CavId> = group.members.iter().copied().collect();
            sum += group_confidence(map, area, &members).unwrap_or(0.0);
        }
    }
    sum / map.n_areas() as f64
}
