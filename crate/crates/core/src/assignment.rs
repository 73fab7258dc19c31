//! Greedy per-area group construction under the confidence-gain threshold,
//! and min-max leader assignment by fusion load.
//!
//! For each occupied area, CAVs are scanned in descending confidence order
//! and admitted while the marginal collaborative-confidence gain stays at or
//! above the threshold. Marginal gains along that order are non-increasing,
//! so stopping at the first rejection equals filtering the full scan; the
//! exhaustive oracle in [`brute_force_groups`] certifies this equivalence on
//! small instances.
//!
//! Leaders are then assigned group-by-group (largest groups first), each time
//! picking the member with the smallest fusion load accumulated so far,
//! where a leader's load grows by `|members| * B` bits per led group.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceMap;
use crate::error::{Error, Result};
use crate::scenario::{AreaId, CavId};

/// The CAV group assigned to one area. `members` keeps admission order;
/// the leader is always one of the members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub area_id: AreaId,
    pub members: Vec<CavId>,
    pub leader: CavId,
}

/// Per-area groups plus per-CAV fusion loads in bits.
///
/// `loads[j]` equals the sum of `|members| * B` over the groups led by `j`;
/// CAVs leading no group carry an explicit zero entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub groups: BTreeMap<AreaId, Group>,
    pub loads: BTreeMap<CavId, f64>,
}

impl Assignment {
    /// Maximum fusion load over all CAVs, in bits.
    pub fn max_load_bits(&self) -> f64 {
        self.loads.values().copied().fold(0.0, f64::max)
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Total member count over all groups (a CAV in two groups counts twice).
    pub fn total_members(&self) -> usize {
        self.groups.values().map(|g| g.members.len()).sum()
    }

    pub fn export(&self) -> AssignmentExport {
        AssignmentExport {
            groups: self
                .groups
                .values()
                .map(|g| GroupExport {
                    area_id: g.area_id,
                    members: g.members.clone(),
                    leader: g.leader,
                })
                .collect(),
            loads: self.loads.clone(),
        }
    }
}

/// JSON shape consumed by the scheduler tooling and CLI reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentExport {
    pub groups: Vec<GroupExport>,
    pub loads: BTreeMap<CavId, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupExport {
    pub area_id: AreaId,
    pub members: Vec<CavId>,
    pub leader: CavId,
}

/// Recomputes per-CAV loads from the groups, iterating areas in ascending
/// order. Loads are `led-member-slots * B` with the slot count summed in
/// integers, so the result is bit-exact regardless of group processing order.
pub fn loads_from_groups<'a>(
    groups: impl IntoIterator<Item = &'a Group>,
    all_cavs: &[CavId],
    feature_bits_b: f64,
) -> BTreeMap<CavId, f64> {
    let mut slots: BTreeMap<CavId, u64> = all_cavs.iter().map(|&c| (c, 0)).collect();
    for g in groups {
        *slots.entry(g.leader).or_insert(0) += g.members.len() as u64;
    }
    slots
        .into_iter()
        .map(|(c, s)| (c, s as f64 * feature_bits_b))
        .collect()
}

fn check_group_args(delta_g: f64, feature_bits_b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta_g) {
        return Err(Error::InvalidArgument(format!(
            "delta_g must be in [0, 1], got {delta_g}"
        )));
    }
    if !(feature_bits_b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "feature size B must be positive, got {feature_bits_b}"
        )));
    }
    Ok(())
}

/// CAV column indices of one area sorted by (confidence descending,
/// id ascending) — the canonical scan order.
fn scan_order(row: &[f64], cav_ids: &[CavId]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(cav_ids[a].cmp(&cav_ids[b])));
    order
}

/// A candidate passes when its marginal gain clears the threshold and is
/// strictly positive (so a zero threshold admits exactly the CAVs that still
/// contribute).
fn admits(gain: f64, delta_g: f64) -> bool {
    gain >= delta_g && gain > 0.0
}

/// Greedy group selection (per-area threshold scan) followed by min-max
/// leader assignment.
///
/// Ties break by ascending CAV id within an area and by ascending area id
/// between equally sized groups, making the result deterministic.
pub fn select_groups(
    map: &ConfidenceMap,
    delta_g: f64,
    feature_bits_b: f64,
) -> Result<Assignment> {
    check_group_args(delta_g, feature_bits_b)?;
    let cav_ids = map.cav_ids();

    // Phase 1: per-area member scan. Marginal gain of candidate f over the
    // current group is (1 - F_current) * f.
    let mut members_per_area: Vec<(AreaId, Vec<CavId>)> = Vec::new();
    for &area in map.area_ids() {
        let row = map.row(area)?;
        let mut members = Vec::new();
        let mut f_current = 0.0;
        for idx in scan_order(row, cav_ids) {
            let gain = (1.0 - f_current) * row[idx];
            if !admits(gain, delta_g) {
                break;
            }
            members.push(cav_ids[idx]);
            f_current += gain;
        }
        if !members.is_empty() {
            members_per_area.push((area, members));
        }
    }

    // Phase 2: leader assignment, largest groups first. Loads are tracked as
    // integer member-slots (load = slots * B) to keep comparisons exact.
    let mut order: Vec<usize> = (0..members_per_area.len()).collect();
    order.sort_by(|&a, &b| {
        let (area_a, m_a) = &members_per_area[a];
        let (area_b, m_b) = &members_per_area[b];
        m_b.len().cmp(&m_a.len()).then(area_a.cmp(area_b))
    });
    let mut slots: BTreeMap<CavId, u64> = cav_ids.iter().map(|&c| (c, 0)).collect();
    let mut leaders: Vec<CavId> = vec![CavId(0); members_per_area.len()];
    for &i in &order {
        let (_, members) = &members_per_area[i];
        let leader = *members
            .iter()
            .min_by_key(|&&c| (slots[&c], c))
            .expect("groups are non-empty");
        *slots.get_mut(&leader).unwrap() += members.len() as u64;
        leaders[i] = leader;
    }

    let groups: BTreeMap<AreaId, Group> = members_per_area
        .into_iter()
        .zip(leaders)
        .map(|((area_id, members), leader)| {
            (
                area_id,
                Group {
                    area_id,
                    members,
                    leader,
                },
            )
        })
        .collect();
    let loads = loads_from_groups(groups.values(), cav_ids, feature_bits_b);
    Ok(Assignment { groups, loads })
}

/// Guard for the exhaustive oracle.
pub const ORACLE_MAX_CAVS: usize = 6;
pub const ORACLE_MAX_AREAS: usize = 6;

/// Exhaustive oracle for [`select_groups`].
///
/// Per area it enumerates every member subset (up to `max_group_size`) and
/// keeps the one consistent with the threshold rule along the full
/// descending-confidence scan: each member's marginal gain at its scan
/// position clears the threshold and each non-member's does not. Exactly one
/// subset is consistent; the greedy scan must return it. Leaders are then
/// chosen by exhaustive search over all leader combinations, minimizing the
/// maximum load.
pub fn brute_force_groups(
    map: &ConfidenceMap,
    delta_g: f64,
    feature_bits_b: f64,
    max_group_size: usize,
) -> Result<Assignment> {
    check_group_args(delta_g, feature_bits_b)?;
    if map.n_cavs() > ORACLE_MAX_CAVS || map.n_areas() > ORACLE_MAX_AREAS {
        return Err(Error::InstanceTooLarge(format!(
            "group oracle accepts at most {ORACLE_MAX_CAVS} CAVs and {ORACLE_MAX_AREAS} areas, \
             got {} CAVs and {} areas",
            map.n_cavs(),
            map.n_areas()
        )));
    }
    let cav_ids = map.cav_ids();
    let n = cav_ids.len();

    let mut member_sets: Vec<(AreaId, Vec<CavId>)> = Vec::new();
    for &area in map.area_ids() {
        let row = map.row(area)?;
        let order = scan_order(row, cav_ids);
        let mut consistent: Option<Vec<CavId>> = None;
        for mask in 0u32..(1 << n) {
            if (mask.count_ones() as usize) > max_group_size {
                continue;
            }
            if let Some(members) = scan_consistent_members(map, area, row, &order, mask, delta_g)?
            {
                if let Some(prev) = &consistent {
                    return Err(Error::Validation(format!(
                        "group oracle found two consistent subsets for area {area}: \
                         {prev:?} and {members:?}"
                    )));
                }
                consistent = Some(members);
            }
        }
        let members = consistent.ok_or_else(|| {
            Error::Validation(format!(
                "group oracle found no consistent subset for area {area} \
                 (max_group_size {max_group_size} too small?)"
            ))
        })?;
        if !members.is_empty() {
            member_sets.push((area, members));
        }
    }

    let leaders = optimal_leaders(&member_sets);
    let groups: BTreeMap<AreaId, Group> = member_sets
        .into_iter()
        .zip(leaders)
        .map(|((area_id, members), leader)| {
            (
                area_id,
                Group {
                    area_id,
                    members,
                    leader,
                },
            )
        })
        .collect();
    let loads = loads_from_groups(groups.values(), cav_ids, feature_bits_b);
    Ok(Assignment { groups, loads })
}

/// Checks one candidate subset (bitmask over scan positions is not assumed:
/// the mask indexes CAV columns). Returns the members in scan order when the
/// subset is scan-consistent, `None` otherwise.
///
/// Gains are evaluated through the product formula (`F(S + c) - F(S)`), a
/// different arithmetic route than the greedy incremental update.
fn scan_consistent_members(
    map: &ConfidenceMap,
    area: AreaId,
    row: &[f64],
    order: &[usize],
    mask: u32,
    delta_g: f64,
) -> Result<Option<Vec<CavId>>> {
    let cav_ids = map.cav_ids();
    let mut members = Vec::new();
    let mut miss = 1.0; // prod (1 - f) over admitted members
    for &idx in order {
        let f_before = 1.0 - miss;
        let f_after = 1.0 - miss * (1.0 - row[idx]);
        let gain = f_after - f_before;
        let in_subset = mask & (1 << idx) != 0;
        if in_subset {
            if !admits(gain, delta_g) {
                return Ok(None);
            }
            members.push(cav_ids[idx]);
            miss *= 1.0 - row[idx];
        } else if admits(gain, delta_g) {
            return Ok(None);
        }
    }
    let _ = area;
    Ok(Some(members))
}

/// Exhaustive min-max leader search over all leader combinations.
/// Deterministic: the first strictly better combination wins, iterating
/// member choices in admission order per group (areas ascending).
fn optimal_leaders(member_sets: &[(AreaId, Vec<CavId>)]) -> Vec<CavId> {
    let mut best: Option<(u64, Vec<CavId>)> = None;
    let mut choice: Vec<usize> = vec![0; member_sets.len()];
    loop {
        let mut slots: BTreeMap<CavId, u64> = BTreeMap::new();
        for (i, (_, members)) in member_sets.iter().enumerate() {
            *slots.entry(members[choice[i]]).or_insert(0) += members.len() as u64;
        }
        let max_slots = slots.values().copied().max().unwrap_or(0);
        let leaders: Vec<CavId> = member_sets
            .iter()
            .enumerate()
            .map(|(i, (_, members))| members[choice[i]])
            .collect();
        if best.as_ref().is_none_or(|(b, _)| max_slots < *b) {
            best = Some((max_slots, leaders));
        }
        // Advance the mixed-radix counter over member choices.
        let mut pos = 0;
        loop {
            if pos == member_sets.len() {
                return best.expect("at least one combination").1;
            }
            choice[pos] += 1;
            if choice[pos] < member_sets[pos].1.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::ConfidenceMap;

    fn map_1area(values: Vec<f64>) -> ConfidenceMap {
        let cavs: Vec<CavId> = (0..values.len() as u32).map(CavId).collect();
        ConfidenceMap::from_values(vec![AreaId(0)], cavs, values).unwrap()
    }

    #[test]
    fn admits_top_two_of_three() {
        // Gains: 0.6, then (1-0.6)*0.5 = 0.2, then (1-0.8)*0.2 = 0.04 < 0.075.
        let map = map_1area(vec![0.6, 0.5, 0.2]);
        let a = select_groups(&map, 0.075, 1000.0).unwrap();
        let g = &a.groups[&AreaId(0)];
        assert_eq!(g.members, vec![CavId(0), CavId(1)]);
    }

    #[test]
    fn zero_threshold_admits_all_positive() {
        let map = map_1area(vec![0.6, 0.0, 0.2, 0.5]);
        let a = select_groups(&map, 0.0, 1000.0).unwrap();
        let g = &a.groups[&AreaId(0)];
        // Descending confidence order, zero-confidence CAV excluded.
        assert_eq!(g.members, vec![CavId(0), CavId(3), CavId(2)]);
    }

    #[test]
    fn threshold_one_rejects_all_below_certainty() {
        let map = map_1area(vec![0.99, 0.8]);
        let a = select_groups(&map, 1.0, 1000.0).unwrap();
        assert!(a.groups.is_empty());
    }

    #[test]
    fn rejects_out_of_range_threshold() {
        let map = map_1area(vec![0.5]);
        assert!(matches!(
            select_groups(&map, -0.1, 1000.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            select_groups(&map, 1.5, 1000.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn leader_min_load_rule() {
        // Two areas, equal group sizes {v0, v1} and {v0, v2}. After v0 leads
        // the first (load 2B), the second picks v2 (load 0).
        let map = ConfidenceMap::from_values(
            vec![AreaId(0), AreaId(1)],
            vec![CavId(0), CavId(1), CavId(2)],
            vec![
                0.9, 0.8, 0.0, // area 0: members v0, v1
                0.9, 0.0, 0.8, // area 1: members v0, v2
            ],
        )
        .unwrap();
        let b = 1000.0;
        let a = select_groups(&map, 0.05, b).unwrap();
        assert_eq!(a.groups[&AreaId(0)].leader, CavId(0));
        assert_eq!(a.groups[&AreaId(1)].leader, CavId(2));
        assert_eq!(a.loads[&CavId(0)], 2.0 * b);
        assert_eq!(a.loads[&CavId(2)], 2.0 * b);
        assert_eq!(a.loads[&CavId(1)], 0.0);
    }

    #[test]
    fn loads_match_recomputation_exactly() {
        let map = ConfidenceMap::from_values(
            vec![AreaId(3), AreaId(7), AreaId(9)],
            vec![CavId(0), CavId(1), CavId(2), CavId(3)],
            vec![
                0.9, 0.7, 0.5, 0.1, //
                0.2, 0.8, 0.6, 0.4, //
                0.5, 0.5, 0.5, 0.5,
            ],
        )
        .unwrap();
        let b = 5785.714285714286;
        let a = select_groups(&map, 0.05, b).unwrap();
        let recomputed = loads_from_groups(a.groups.values(), map.cav_ids(), b);
        assert_eq!(a.loads, recomputed);
    }

    #[test]
    fn oracle_matches_greedy_members_and_bounds_load() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let n_areas = rng.random_range(1..=4usize);
            let n_cavs = rng.random_range(1..=5usize);
            let areas: Vec<AreaId> = (0..n_areas as u32).map(AreaId).collect();
            let cavs: Vec<CavId> = (0..n_cavs as u32).map(CavId).collect();
            let values: Vec<f64> = (0..n_areas * n_cavs)
                .map(|_| rng.random_range(0.0..1.0))
                .collect();
            let map = ConfidenceMap::from_values(areas, cavs, values).unwrap();
            let delta_g = rng.random_range(0.01..0.3);
            let greedy = select_groups(&map, delta_g, 1000.0).unwrap();
            let oracle = brute_force_groups(&map, delta_g, 1000.0, n_cavs).unwrap();
            for (area, g) in &greedy.groups {
                assert_eq!(
                    g.members, oracle.groups[area].members,
                    "member mismatch at {area} (delta_g {delta_g})"
                );
            }
            assert_eq!(greedy.groups.len(), oracle.groups.len());
            assert!(oracle.max_load_bits() <= greedy.max_load_bits() + 1e-9);
        }
    }

    #[test]
    fn oracle_singleton_cav_leads_everything() {
        let map = ConfidenceMap::from_values(
            vec![AreaId(0), AreaId(1)],
            vec![CavId(5)],
            vec![0.9, 0.6],
        )
        .unwrap();
        let oracle = brute_force_groups(&map, 0.1, 1000.0, 1).unwrap();
        for g in oracle.groups.values() {
            assert_eq!(g.leader, CavId(5));
        }
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let areas: Vec<AreaId> = (0..7u32).map(AreaId).collect();
        let cavs: Vec<CavId> = (0..2u32).map(CavId).collect();
        let map = ConfidenceMap::from_values(areas, cavs, vec![0.5; 14]).unwrap();
        assert!(matches!(
            brute_force_groups(&map, 0.1, 1000.0, 2),
            Err(Error::InstanceTooLarge(_))
        ));
    }
}
