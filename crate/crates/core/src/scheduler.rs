//! Packet construction, priority ordering, slot-by-slot conflict-free
//! subchannel allocation, overlapped fusion accounting, and the joint
//! transmit+fuse latency.
//!
//! Scheduling proceeds in slots of fixed duration. In each slot every
//! subchannel picks the first packet in scheduling order that does not
//! conflict with the packets already placed in that slot, so a slot carries
//! at most one packet per subchannel. Once an area has received all its
//! packets, its leader starts fusing it; leaders fuse completed areas one at
//! a time in completion order while transmission continues. The joint
//! latency is the last transmission end plus whatever fusion work remains at
//! that instant.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::radio::RadioEnv;
use crate::scenario::{AreaId, CavId};

/// One area-feature transmission: the 5-tuple (src, dst, area, subchannel,
/// slot). Placement fields are set by the scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub src: CavId,
    pub dst: CavId,
    pub area: AreaId,
    pub subchannel: Option<u32>,
    pub slot: Option<u64>,
    pub size_bits: f64,
}

impl Packet {
    pub fn new(src: CavId, dst: CavId, area: AreaId, size_bits: f64) -> Packet {
        Packet {
            src,
            dst,
            area,
            subchannel: None,
            slot: None,
            size_bits,
        }
    }
}

/// Per-collaborator fusion cost of one full-size feature, in FLOPs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionCostModel {
    pub flops_full_fusion: f64,
}

impl FusionCostModel {
    pub fn cobevt() -> Self {
        FusionCostModel {
            flops_full_fusion: 2228.0e6,
        }
    }

    pub fn where2comm() -> Self {
        FusionCostModel {
            flops_full_fusion: 1400.0e6,
        }
    }

    pub fn coalign() -> Self {
        FusionCostModel {
            flops_full_fusion: 2684.0e6,
        }
    }

    pub fn custom(flops_full_fusion: f64) -> Self {
        FusionCostModel { flops_full_fusion }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.flops_full_fusion > 0.0) {
            return Err(Error::Validation(format!(
                "fusion cost must be positive, got {} FLOPs",
                self.flops_full_fusion
            )));
        }
        Ok(())
    }
}

/// One pending fusion task: `leader` fuses area `area` for `duration_s`
/// once all of the area's packets have been received.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionJob {
    pub area: AreaId,
    pub leader: CavId,
    pub duration_s: f64,
}

/// Builds the per-area fusion jobs of an assignment. Fusion FLOPs scale
/// linearly in the group size and in the per-area feature fraction
/// `B / B_full`: `duration = flops * |members| * (B / B_full) / compute`.
pub fn fusion_jobs(
    assignment: &Assignment,
    fusion: &FusionCostModel,
    compute: &BTreeMap<CavId, f64>,
    feature_bits_b: f64,
    full_feature_bits: f64,
) -> Result<Vec<FusionJob>> {
    fusion.validate()?;
    if !(full_feature_bits > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "full feature size must be positive, got {full_feature_bits}"
        )));
    }
    let ratio = feature_bits_b / full_feature_bits;
    let mut jobs = Vec::with_capacity(assignment.groups.len());
    for group in assignment.groups.values() {
        let flops_per_s = compute.get(&group.leader).copied().ok_or_else(|| {
            Error::Validation(format!("no compute capacity for leader {}", group.leader))
        })?;
        if !(flops_per_s > 0.0) {
            return Err(Error::Validation(format!(
                "leader {} has non-positive compute capacity",
                group.leader
            )));
        }
        jobs.push(FusionJob {
            area: group.area_id,
            leader: group.leader,
            duration_s: fusion.flops_full_fusion * group.members.len() as f64 * ratio
                / flops_per_s,
        });
    }
    Ok(jobs)
}

/// Converts an assignment into the packet set: one packet per non-leader
/// member of every group, destined to the group leader. Leaders transmit
/// nothing for their own groups.
pub fn build_packets(assignment: &Assignment, feature_bits_b: f64) -> Vec<Packet> {
    let mut packets = Vec::new();
    for group in assignment.groups.values() {
        for &member in &group.members {
            if member != group.leader {
                packets.push(Packet::new(member, group.leader, group.area_id, feature_bits_b));
            }
        }
    }
    packets
}

/// The priority metric of one packet: sender load plus receiver load, where
/// loads count packets in the initial packet set (each packet counts itself
/// on both ends, so an isolated packet has priority 2). Larger values are
/// scheduled earlier.
pub fn priority(sender_load: u32, receiver_load: u32) -> u32 {
    sender_load + receiver_load
}

/// A completed transmission + fusion schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub tau_s: f64,
    /// All placed packets, in placement order.
    pub packets: Vec<Packet>,
    /// Exclusive end slot of each area that had packets: last slot + 1.
    pub area_complete_slot: BTreeMap<AreaId, u64>,
    /// Fusion work still pending on each leader at the last transmission end.
    pub per_cav_fusion_remaining: BTreeMap<CavId, f64>,
    pub makespan_slots: u64,
    /// Last transmission end plus the maximum residual fusion time.
    pub joint_latency_s: f64,
}

impl Schedule {
    pub fn last_tx_end_s(&self) -> f64 {
        self.makespan_slots as f64 * self.tau_s
    }

    pub fn export(&self) -> ScheduleExport {
        ScheduleExport {
            makespan_slots: self.makespan_slots,
            tau_s: self.tau_s,
            joint_latency_s: self.joint_latency_s,
            packets: self
                .packets
                .iter()
                .map(|p| PlacedTuple {
                    src: p.src,
                    dst: p.dst,
                    area: p.area,
                    subchannel: p.subchannel.expect("placed"),
                    slot: p.slot.expect("placed"),
                })
                .collect(),
            per_area_completion: self.area_complete_slot.clone(),
        }
    }
}

/// JSON shape of a schedule: the placed 5-tuples plus summary figures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleExport {
    pub makespan_slots: u64,
    pub tau_s: f64,
    pub joint_latency_s: f64,
    pub packets: Vec<PlacedTuple>,
    pub per_area_completion: BTreeMap<AreaId, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacedTuple {
    pub src: CavId,
    pub dst: CavId,
    pub area: AreaId,
    pub subchannel: u32,
    pub slot: u64,
}

enum OrderPolicy {
    Priority,
    Random(u64),
}

/// Priority scheduler: packets ordered by the load metric, then placed slot
/// by slot.
pub fn schedule(
    packets: &[Packet],
    env: &RadioEnv<'_>,
    jobs: &[FusionJob],
    tau_s: f64,
) -> Result<Schedule> {
    run_schedule(packets, env, jobs, tau_s, OrderPolicy::Priority)
}

/// Baseline scheduler: identical machinery, but the scheduling order is a
/// seeded uniform shuffle instead of the priority metric.
pub fn schedule_random(
    packets: &[Packet],
    env: &RadioEnv<'_>,
    jobs: &[FusionJob],
    tau_s: f64,
    seed: u64,
) -> Result<Schedule> {
    run_schedule(packets, env, jobs, tau_s, OrderPolicy::Random(seed))
}

fn run_schedule(
    packets: &[Packet],
    env: &RadioEnv<'_>,
    jobs: &[FusionJob],
    tau_s: f64,
    order: OrderPolicy,
) -> Result<Schedule> {
    if !(tau_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "slot duration must be positive, got {tau_s}"
        )));
    }
    for p in packets {
        if p.src == p.dst {
            return Err(Error::Validation(format!(
                "packet for area {} has src == dst == {}",
                p.area, p.src
            )));
        }
        if p.subchannel.is_some() || p.slot.is_some() {
            return Err(Error::Validation("input packets must be unplaced".into()));
        }
    }
    // Feasibility gate: every distinct link in the packet set must clear it.
    let mut checked = std::collections::BTreeSet::new();
    for p in packets {
        if checked.insert((p.src, p.dst)) {
            let link = env.cav_link(p.src, p.dst)?;
            if !link.feasible {
                return Err(Error::InfeasibleLink {
                    src: p.src,
                    dst: p.dst,
                });
            }
        }
    }

    let mut queue: Vec<Packet> = packets.to_vec();
    match order {
        OrderPolicy::Priority => {
            let mut sender_load: BTreeMap<CavId, u32> = BTreeMap::new();
            let mut receiver_load: BTreeMap<CavId, u32> = BTreeMap::new();
            for p in &queue {
                *sender_load.entry(p.src).or_insert(0) += 1;
                *receiver_load.entry(p.dst).or_insert(0) += 1;
            }
            queue.sort_by(|a, b| {
                let wa = priority(sender_load[&a.src], receiver_load[&a.dst]);
                let wb = priority(sender_load[&b.src], receiver_load[&b.dst]);
                wb.cmp(&wa)
                    .then(a.area.cmp(&b.area))
                    .then(a.src.cmp(&b.src))
            });
        }
        OrderPolicy::Random(seed) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            queue.shuffle(&mut rng);
        }
    }

    let z = env.params.num_subchannels;
    let n = queue.len();
    let mut placed_flags = vec![false; n];
    let mut placed_count = 0usize;
    let mut placed: Vec<Packet> = Vec::with_capacity(n);
    let mut slot: u64 = 0;
    while placed_count < n {
        let slot_start = placed.len();
        for sub in 0..z {
            let slot_packets = &placed[slot_start..];
            let pick = queue.iter().enumerate().position(|(i, p)| {
                if placed_flags[i] {
                    return false;
                }
                let mut candidate = p.clone();
                candidate.subchannel = Some(sub);
                candidate.slot = Some(slot);
                !env.conflicts(&candidate, slot_packets)
            });
            if let Some(i) = pick {
                let mut p = queue[i].clone();
                p.subchannel = Some(sub);
                p.slot = Some(slot);
                placed_flags[i] = true;
                placed_count += 1;
                placed.push(p);
            }
        }
        slot += 1;
        // A lone unplaced packet never conflicts with an empty slot, so each
        // slot makes progress; this guard only protects against regressions.
        if slot > n as u64 && placed_count < n {
            return Err(Error::Validation(
                "scheduler failed to make progress".into(),
            ));
        }
    }
    let makespan_slots = placed.iter().filter_map(|p| p.slot).max().map_or(0, |s| s + 1);

    let mut area_complete_slot: BTreeMap<AreaId, u64> = BTreeMap::new();
    for p in &placed {
        let end = p.slot.expect("placed") + 1;
        let e = area_complete_slot.entry(p.area).or_insert(0);
        *e = (*e).max(end);
    }

    // Fusion replay: leaders fuse completed areas sequentially, FIFO by
    // completion slot (ties by area id), overlapping ongoing transmission.
    let last_tx_end = makespan_slots as f64 * tau_s;
    let mut by_leader: BTreeMap<CavId, Vec<(u64, AreaId, f64)>> = BTreeMap::new();
    for job in jobs {
        let complete = area_complete_slot.get(&job.area).copied().unwrap_or(0);
        by_leader
            .entry(job.leader)
            .or_default()
            .push((complete, job.area, job.duration_s));
    }
    let mut per_cav_fusion_remaining: BTreeMap<CavId, f64> = BTreeMap::new();
    let mut joint_latency_s = last_tx_end;
    for (leader, mut leader_jobs) in by_leader {
        leader_jobs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cursor = 0.0f64;
        for (complete_slot, _, duration) in leader_jobs {
            let ready = complete_slot as f64 * tau_s;
            cursor = cursor.max(ready) + duration;
        }
        per_cav_fusion_remaining.insert(leader, (cursor - last_tx_end).max(0.0));
        joint_latency_s = joint_latency_s.max(cursor);
    }

    Ok(Schedule {
        tau_s,
        packets: placed,
        area_complete_slot,
        per_cav_fusion_remaining,
        makespan_slots,
        joint_latency_s,
    })
}

/// Guards for the exhaustive makespan oracle.
pub const ORACLE_MAX_PACKETS: usize = 8;
pub const ORACLE_MAX_SUBCHANNELS: u32 = 3;

/// Exhaustive minimal transmission makespan (in slots, fusion excluded).
///
/// A packet subset can share one slot when its packets are pairwise
/// endpoint-disjoint and the co-channel interference graph over the subset is
/// colorable with the available subchannels (same-subchannel reuse within a
/// slot is allowed for non-interfering links). The minimum partition of the
/// packet set into such slots is found by dynamic programming over subsets.
pub fn brute_force_schedule(packets: &[Packet], env: &RadioEnv<'_>) -> Result<u64> {
    let n = packets.len();
    let z = env.params.num_subchannels;
    if n > ORACLE_MAX_PACKETS || z > ORACLE_MAX_SUBCHANNELS {
        return Err(Error::InstanceTooLarge(format!(
            "schedule oracle accepts at most {ORACLE_MAX_PACKETS} packets and \
             {ORACLE_MAX_SUBCHANNELS} subchannels, got {n} packets and {z} subchannels"
        )));
    }
    if n == 0 {
        return Ok(0);
    }

    // Pairwise constraint tables.
    let mut endpoint_clash = vec![false; n * n];
    let mut cochannel_clash = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (&packets[i], &packets[j]);
            endpoint_clash[i * n + j] =
                a.src == b.src || a.src == b.dst || a.dst == b.src || a.dst == b.dst;
            let radius = env.params.interference_radius_m;
            let clash = env.positions[&a.src].distance(&env.positions[&b.dst]) <= radius
                || env.positions[&b.src].distance(&env.positions[&a.dst]) <= radius;
            cochannel_clash[i * n + j] = clash;
        }
    }

    let members = |mask: u32| -> Vec<usize> { (0..n).filter(|i| mask & (1 << i) != 0).collect() };
    let slot_feasible = |mask: u32| -> bool {
        let idx = members(mask);
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                if endpoint_clash[i * n + j] {
                    return false;
                }
            }
        }
        // Greedy-free exact coloring: try every subchannel assignment.
        let k = idx.len();
        let mut colors = vec![0u32; k];
        loop {
            let mut ok = true;
            'pairs: for a in 0..k {
                for b in (a + 1)..k {
                    if colors[a] == colors[b] && cochannel_clash[idx[a] * n + idx[b]] {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if ok {
                return true;
            }
            let mut pos = 0;
            loop {
                if pos == k {
                    return false;
                }
                colors[pos] += 1;
                if colors[pos] < z {
                    break;
                }
                colors[pos] = 0;
                pos += 1;
            }
        }
    };

    let full = (1u32 << n) - 1;
    let mut feasible = vec![false; (full + 1) as usize];
    for mask in 1..=full {
        feasible[mask as usize] = slot_feasible(mask);
    }
    let mut dp = vec![u64::MAX; (full + 1) as usize];
    dp[0] = 0;
    for mask in 1..=full {
        // Enumerate submasks of `mask`.
        let mut sub = mask;
        let mut best = u64::MAX;
        while sub > 0 {
            if feasible[sub as usize] && dp[(mask & !sub) as usize] != u64::MAX {
                best = best.min(dp[(mask & !sub) as usize] + 1);
            }
            sub = (sub - 1) & mask;
        }
        dp[mask as usize] = best;
    }
    Ok(dp[full as usize])
}

/// Independent post-hoc validity replay of a produced schedule against the
/// original packet set: completeness, per-slot capacity and subchannel
/// exclusivity, the conflict predicate on every slot, and makespan bounds.
pub fn verify_schedule(
    schedule: &Schedule,
    original: &[Packet],
    env: &RadioEnv<'_>,
) -> Result<()> {
    let strip = |p: &Packet| (p.src, p.dst, p.area, p.size_bits.to_bits());
    let mut want: Vec<_> = original.iter().map(strip).collect();
    let mut got: Vec<_> = schedule.packets.iter().map(strip).collect();
    want.sort();
    got.sort();
    if want != got {
        return Err(Error::Validation(
            "schedule does not place the original packet multiset".into(),
        ));
    }

    let mut slots: BTreeMap<u64, Vec<&Packet>> = BTreeMap::new();
    for p in &schedule.packets {
        let (Some(slot), Some(sub)) = (p.slot, p.subchannel) else {
            return Err(Error::Validation("placed packet missing slot/subchannel".into()));
        };
        if sub >= env.params.num_subchannels {
            return Err(Error::Validation(format!("subchannel {sub} out of range")));
        }
        slots.entry(slot).or_default().push(p);
    }
    for (slot, packets) in &slots {
        if packets.len() > env.params.num_subchannels as usize {
            return Err(Error::Validation(format!(
                "slot {slot} carries {} packets with only {} subchannels",
                packets.len(),
                env.params.num_subchannels
            )));
        }
        let mut used = std::collections::BTreeSet::new();
        for p in packets {
            if !used.insert(p.subchannel.unwrap()) {
                return Err(Error::Validation(format!(
                    "slot {slot} reuses subchannel {}",
                    p.subchannel.unwrap()
                )));
            }
        }
        for (i, p) in packets.iter().enumerate() {
            let others: Vec<Packet> = packets
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| (*q).clone())
                .collect();
            if env.conflicts(p, &others) {
                return Err(Error::Validation(format!(
                    "slot {slot}: packet {} -> {} conflicts with its slot",
                    p.src, p.dst
                )));
            }
        }
    }

    let n = original.len() as u64;
    let z = u64::from(env.params.num_subchannels);
    let lower = n.div_ceil(z);
    if n > 0 && !(lower <= schedule.makespan_slots && schedule.makespan_slots <= n) {
        return Err(Error::Validation(format!(
            "makespan {} outside [{lower}, {n}]",
            schedule.makespan_slots
        )));
    }
    for (area, end) in &schedule.area_complete_slot {
        let max_slot = schedule
            .packets
            .iter()
            .filter(|p| p.area == *area)
            .filter_map(|p| p.slot)
            .max();
        if max_slot.map(|s| s + 1) != Some(*end) {
            return Err(Error::Validation(format!(
                "area {area} completion slot {end} does not match its packets"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::ChannelParams;
    use crate::scenario::Point;
    use approx::assert_abs_diff_eq;

    fn far_positions(n: u32) -> BTreeMap<CavId, Point> {
        // Pairwise distances in [300 m, 671 m]: beyond the 200 m
        // interference radius but inside the ~950 m feasibility range.
        (0..n)
            .map(|i| {
                let p = Point::new(f64::from(i % 3) * 300.0, f64::from(i / 3) * 300.0);
                (CavId(i), p)
            })
            .collect()
    }

    fn no_shadow_params() -> ChannelParams {
        ChannelParams {
            shadowing_sigma_db: 0.0,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn build_packets_basic() {
        use crate::assignment::Group;
        let mut groups = BTreeMap::new();
        groups.insert(
            AreaId(0),
            Group {
                area_id: AreaId(0),
                members: vec![CavId(1), CavId(2), CavId(3)],
                leader: CavId(1),
            },
        );
        let a = Assignment {
            groups,
            loads: BTreeMap::new(),
        };
        let packets = build_packets(&a, 100.0);
        assert_eq!(packets.len(), 2);
        assert_eq!(packets[0].src, CavId(2));
        assert_eq!(packets[0].dst, CavId(1));
        assert_eq!(packets[1].src, CavId(3));
    }

    #[test]
    fn build_packets_singleton_group_is_empty() {
        use crate::assignment::Group;
        let mut groups = BTreeMap::new();
        groups.insert(
            AreaId(4),
            Group {
                area_id: AreaId(4),
                members: vec![CavId(0)],
                leader: CavId(0),
            },
        );
        let a = Assignment {
            groups,
            loads: BTreeMap::new(),
        };
        assert!(build_packets(&a, 100.0).is_empty());
    }

    #[test]
    fn build_packets_union_over_groups() {
        use crate::assignment::Group;
        let mut groups = BTreeMap::new();
        for (area, leader) in [(AreaId(0), CavId(0)), (AreaId(1), CavId(1))] {
            groups.insert(
                area,
                Group {
                    area_id: area,
                    members: vec![CavId(0), CavId(1)],
                    leader,
                },
            );
        }
        let a = Assignment {
            groups,
            loads: BTreeMap::new(),
        };
        let packets = build_packets(&a, 100.0);
        assert_eq!(packets.len(), 2);
    }

    #[test]
    fn priority_sums_loads() {
        assert_eq!(priority(3, 2), 5);
        assert_eq!(priority(1, 1), 2);
    }

    #[test]
    fn two_disjoint_far_packets_share_slot_zero() {
        let params = no_shadow_params();
        let positions = far_positions(4);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![
            Packet::new(CavId(0), CavId(1), AreaId(0), 100.0),
            Packet::new(CavId(2), CavId(3), AreaId(1), 100.0),
        ];
        let s = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        assert_eq!(s.makespan_slots, 1);
        assert!(s.packets.iter().all(|p| p.slot == Some(0)));
    }

    #[test]
    fn same_leader_forces_two_slots() {
        let params = no_shadow_params();
        let positions = far_positions(3);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![
            Packet::new(CavId(1), CavId(0), AreaId(0), 100.0),
            Packet::new(CavId(2), CavId(0), AreaId(1), 100.0),
        ];
        let s = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        assert_eq!(s.makespan_slots, 2);
    }

    #[test]
    fn fusion_overlap_example() {
        // One packet, group of two, B = B_full, leader compute 0.1 TFLOPS,
        // fusion 1400e6 FLOPs: fusion time = 1400e6 * 2 / 1e11 = 28 ms;
        // joint latency = tau + 28 ms.
        let params = no_shadow_params();
        let positions = far_positions(2);
        let env = RadioEnv::new(&params, &positions, 1);
        let b_full = 2.16e6;
        let tau = b_full / params.fixed_rate_bps;
        let packets = vec![Packet::new(CavId(1), CavId(0), AreaId(0), b_full)];
        let jobs = vec![FusionJob {
            area: AreaId(0),
            leader: CavId(0),
            duration_s: 1400.0e6 * 2.0 / 1.0e11,
        }];
        let s = schedule(&packets, &env, &jobs, tau).unwrap();
        assert_abs_diff_eq!(s.joint_latency_s, tau + 0.028, epsilon = 1e-12);
        assert_abs_diff_eq!(
            s.per_cav_fusion_remaining[&CavId(0)],
            0.028,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fusion_jobs_scale_with_group_and_ratio() {
        use crate::assignment::Group;
        let mut groups = BTreeMap::new();
        groups.insert(
            AreaId(0),
            Group {
                area_id: AreaId(0),
                members: vec![CavId(0), CavId(1)],
                leader: CavId(0),
            },
        );
        let a = Assignment {
            groups,
            loads: BTreeMap::new(),
        };
        let compute: BTreeMap<CavId, f64> = [(CavId(0), 1.0e11), (CavId(1), 1.0e11)].into();
        let jobs = fusion_jobs(&a, &FusionCostModel::where2comm(), &compute, 1.08e6, 2.16e6)
            .unwrap();
        assert_eq!(jobs.len(), 1);
        // 1400e6 * 2 * 0.5 / 1e11 = 14 ms
        assert_abs_diff_eq!(jobs[0].duration_s, 0.014, epsilon = 1e-12);
    }

    #[test]
    fn random_schedule_is_deterministic_per_seed() {
        let params = no_shadow_params();
        let positions = far_positions(6);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets: Vec<Packet> = (1..6)
            .map(|i| Packet::new(CavId(i), CavId(0), AreaId(i), 100.0))
            .collect();
        let a = schedule_random(&packets, &env, &[], 1.0e-3, 99).unwrap();
        let b = schedule_random(&packets, &env, &[], 1.0e-3, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_schedule_single_packet_matches_priority() {
        let params = no_shadow_params();
        let positions = far_positions(2);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![Packet::new(CavId(0), CavId(1), AreaId(0), 100.0)];
        let a = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        let b = schedule_random(&packets, &env, &[], 1.0e-3, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_link_is_reported() {
        let params = no_shadow_params();
        let positions: BTreeMap<CavId, Point> =
            [(CavId(0), Point::new(0.0, 0.0)), (CavId(1), Point::new(5000.0, 0.0))].into();
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![Packet::new(CavId(0), CavId(1), AreaId(0), 100.0)];
        let err = schedule(&packets, &env, &[], 1.0e-3).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleLink {
                src: CavId(0),
                dst: CavId(1)
            }
        ));
    }

    #[test]
    fn oracle_two_conflicting_packets_two_slots() {
        let mut params = no_shadow_params();
        params.num_subchannels = 2;
        let positions = far_positions(3);
        let env = RadioEnv::new(&params, &positions, 1);
        // Shared destination: forced serialization.
        let packets = vec![
            Packet::new(CavId(1), CavId(0), AreaId(0), 100.0),
            Packet::new(CavId(2), CavId(0), AreaId(1), 100.0),
        ];
        assert_eq!(brute_force_schedule(&packets, &env).unwrap(), 2);
    }

    #[test]
    fn oracle_disjoint_packets_one_slot() {
        let mut params = no_shadow_params();
        params.num_subchannels = 3;
        let positions = far_positions(6);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![
            Packet::new(CavId(0), CavId(1), AreaId(0), 100.0),
            Packet::new(CavId(2), CavId(3), AreaId(1), 100.0),
            Packet::new(CavId(4), CavId(5), AreaId(2), 100.0),
        ];
        assert_eq!(brute_force_schedule(&packets, &env).unwrap(), 1);
    }

    #[test]
    fn oracle_refuses_oversized_instances() {
        let params = no_shadow_params();
        let positions = far_positions(2);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets: Vec<Packet> = (0..9)
            .map(|i| Packet::new(CavId(0), CavId(1), AreaId(i), 100.0))
            .collect();
        assert!(matches!(
            brute_force_schedule(&packets, &env),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn verify_accepts_produced_schedules() {
        let params = no_shadow_params();
        let positions = far_positions(6);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets: Vec<Packet> = (1..6)
            .map(|i| Packet::new(CavId(i), CavId(0), AreaId(i), 100.0))
            .collect();
        let s = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        verify_schedule(&s, &packets, &env).unwrap();
        // Makespan: all five packets share a receiver, one per slot.
        assert_eq!(s.makespan_slots, 5);
    }

    #[test]
    fn verify_rejects_tampered_schedules() {
        let params = no_shadow_params();
        let positions = far_positions(4);
        let env = RadioEnv::new(&params, &positions, 1);
        let packets = vec![
            Packet::new(CavId(1), CavId(0), AreaId(0), 100.0),
            Packet::new(CavId(2), CavId(0), AreaId(1), 100.0),
        ];
        let mut s = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        // Force both packets into slot 0: shared destination conflict.
        for p in &mut s.packets {
            p.slot = Some(0);
        }
        assert!(verify_schedule(&s, &packets, &env).is_err());
    }
}
