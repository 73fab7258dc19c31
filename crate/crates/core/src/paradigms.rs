//! End-to-end latency and transmission volume for the LGCP pipeline and the
//! two comparison paradigms.
//!
//! A collaboration round has five stages: initiation + CAV reports (t1),
//! task-assignment broadcast (t2), data sharing + fusion + leader reports
//! (t3), and global-view broadcast (t4). All control stages run contention
//! free at the fixed rate; the data-sharing stage is the scheduler's joint
//! latency. The total therefore decomposes as
//! `total = t_delta + |S|` with
//! `t_delta = (D_init + ceil(|V|/Z)*D_info + D_ts + D_rep + D_G) / R`.
//!
//! The vehicle-based paradigm exchanges full features between all ordered
//! CAV pairs (quadratic volume); the edge paradigm uploads every full
//! feature once and fuses centrally (linear volume, shared compute).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assignment::{loads_from_groups, select_groups, Assignment};
use crate::confidence::{global_confidence, group_confidence, ConfidenceMap};
use crate::error::{Error, Result};
use crate::radio::{ChannelParams, RadioEnv};
use crate::scenario::{CavId, GridSpec, Scenario};
use crate::scheduler::{
    build_packets, fusion_jobs, schedule, FusionCostModel, Packet, Schedule,
};

/// Control-message sizes in bits. The defaults keep control overhead small
/// relative to feature traffic; every value is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlMessageSizes {
    pub d_init_bits: f64,
    pub d_info_bits: f64,
    pub d_ts_bits: f64,
    pub d_rep_bits: f64,
    pub d_g_bits: f64,
}

impl Default for ControlMessageSizes {
    fn default() -> Self {
        ControlMessageSizes {
            d_init_bits: 1600.0,
            d_info_bits: 1600.0,
            d_ts_bits: 8000.0,
            d_rep_bits: 160_000.0,
            d_g_bits: 160_000.0,
        }
    }
}

impl ControlMessageSizes {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_init_bits", self.d_init_bits),
            ("d_info_bits", self.d_info_bits),
            ("d_ts_bits", self.d_ts_bits),
            ("d_rep_bits", self.d_rep_bits),
            ("d_g_bits", self.d_g_bits),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Validation(format!(
                    "message size {name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Stage-by-stage latency decomposition of one LGCP round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t1_s: f64,
    pub t2_s: f64,
    pub t3_s: f64,
    pub t4_s: f64,
    pub t_delta_s: f64,
    pub total_s: f64,
}

/// Builds the latency decomposition from the control sizes, the CAV count,
/// the subchannel count, the fixed rate, and the scheduler's joint latency.
pub fn latency_breakdown(
    msg: &ControlMessageSizes,
    n_cavs: usize,
    n_subchannels: u32,
    rate_bps: f64,
    joint_latency_s: f64,
) -> LatencyBreakdown {
    let r = rate_bps;
    let waves = (n_cavs as f64 / f64::from(n_subchannels)).ceil();
    let t1_s = msg.d_init_bits / r + waves * msg.d_info_bits / r;
    let t2_s = msg.d_ts_bits / r;
    let t3_s = joint_latency_s + msg.d_rep_bits / r;
    let t4_s = msg.d_g_bits / r;
    let t_delta_s = (msg.d_init_bits
        + waves * msg.d_info_bits
        + msg.d_ts_bits
        + msg.d_rep_bits
        + msg.d_g_bits)
        / r;
    LatencyBreakdown {
        t1_s,
        t2_s,
        t3_s,
        t4_s,
        t_delta_s,
        total_s: t_delta_s + joint_latency_s,
    }
}

/// The confidence-per-latency objective: `global_confidence / (t_delta + |S|)`.
pub fn objective(global_conf: f64, t_delta_s: f64, joint_latency_s: f64) -> Result<f64> {
    let denom = t_delta_s + joint_latency_s;
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "objective denominator must be positive, got {denom}"
        )));
    }
    Ok(global_conf / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Lgcp,
    Vehicle,
    Edge,
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Paradigm::Lgcp => "lgcp",
            Paradigm::Vehicle => "vehicle",
            Paradigm::Edge => "edge",
        };
        f.write_str(s)
    }
}

/// Headline figures of one paradigm run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParadigmReport {
    pub paradigm: Paradigm,
    pub volume_bits: f64,
    pub latency_s: f64,
    pub objective: f64,
    pub feasible: bool,
    pub global_confidence: f64,
    /// Directed links that could not be served under the rate gate.
    pub undelivered_links: u32,
}

/// How the slot duration is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SlotMode {
    /// One slot transmits exactly one packet: `tau = size_bits / fixed_rate`.
    PacketDuration,
    /// Fixed slot duration regardless of packet size.
    Fixed { tau_s: f64 },
}

/// Parameters shared by every paradigm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub channel: ChannelParams,
    pub fusion: FusionCostModel,
    pub msg_sizes: ControlMessageSizes,
    /// Deadline T of the real-time constraint, seconds.
    pub t_max_s: f64,
    /// Full shared-feature size, bits.
    pub b_full_bits: f64,
    /// Per-area feature size; `None` derives the proportional slice
    /// `b_full * cell_area / roi_area`.
    pub b_area_bits: Option<f64>,
    pub slot: SlotMode,
    pub edge_compute_flops: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            channel: ChannelParams::default(),
            fusion: FusionCostModel::where2comm(),
            msg_sizes: ControlMessageSizes::default(),
            t_max_s: 0.100,
            b_full_bits: 2.16e6,
            b_area_bits: None,
            slot: SlotMode::PacketDuration,
            edge_compute_flops: 2.0e12,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.fusion.validate()?;
        self.msg_sizes.validate()?;
        for (name, v) in [
            ("t_max_s", self.t_max_s),
            ("b_full_bits", self.b_full_bits),
            ("edge_compute_flops", self.edge_compute_flops),
        ] {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(b) = self.b_area_bits {
            if !(b > 0.0) {
                return Err(Error::Validation(format!(
                    "b_area_bits must be positive, got {b}"
                )));
            }
        }
        if let SlotMode::Fixed { tau_s } = self.slot {
            if !(tau_s > 0.0) {
                return Err(Error::Validation(format!(
                    "fixed slot duration must be positive, got {tau_s}"
                )));
            }
        }
        Ok(())
    }

    /// Per-area feature size in bits: explicit, or proportional to the cell
    /// share of the RoI.
    pub fn area_feature_bits(&self, grid: &GridSpec) -> f64 {
        self.b_area_bits.unwrap_or_else(|| {
            self.b_full_bits * (grid.cell_w * grid.cell_h) / (grid.width_m * grid.height_m)
        })
    }

    /// Slot duration for packets of the given size. A configured fixed slot
    /// that differs from the packet duration is kept but logged.
    pub fn tau_for(&self, packet_bits: f64) -> f64 {
        let packet_duration = packet_bits / self.channel.fixed_rate_bps;
        match self.slot {
            SlotMode::PacketDuration => packet_duration,
            SlotMode::Fixed { tau_s } => {
                if (tau_s - packet_duration).abs() > 1e-12 {
                    log::debug!(
                        "fixed slot {tau_s} s differs from packet duration {packet_duration} s"
                    );
                }
                tau_s
            }
        }
    }
}

/// Everything produced by one LGCP round.
#[derive(Debug, Clone, PartialEq)]
pub struct LgcpRun {
    pub report: ParadigmReport,
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub breakdown: LatencyBreakdown,
    /// Members removed from groups because their link to the leader failed
    /// the rate gate.
    pub dropped_members: u32,
}

/// The scheduler input of one LGCP round: the radio-gated assignment, its
/// packet set and fusion jobs, and the slot duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRound {
    pub assignment: Assignment,
    pub packets: Vec<Packet>,
    pub jobs: Vec<crate::scheduler::FusionJob>,
    pub tau_s: f64,
    pub feature_bits: f64,
    pub dropped_members: u32,
}

/// Group selection plus radio gating, stopping right before scheduling.
///
/// Members whose link to their leader is infeasible are dropped from the
/// group (the coordinator would not assign undeliverable links), and the
/// loads and confidence accounting reflect the reduced groups.
pub fn prepare_lgcp(
    scenario: &Scenario,
    map: &ConfidenceMap,
    delta_g: f64,
    params: &PipelineParams,
) -> Result<PreparedRound> {
    params.validate()?;
    let grid_spec = scenario.grid.spec();
    let b = params.area_feature_bits(&grid_spec);
    let mut assignment = select_groups(map, delta_g, b)?;

    let positions = scenario.positions();
    let env = RadioEnv::new(&params.channel, &positions, scenario.seed);

    let mut dropped_members = 0u32;
    for group in assignment.groups.values_mut() {
        let leader = group.leader;
        let mut kept = Vec::with_capacity(group.members.len());
        for &m in &group.members {
            if m == leader || env.cav_link(m, leader)?.feasible {
                kept.push(m);
            } else {
                dropped_members += 1;
            }
        }
        group.members = kept;
    }
    if dropped_members > 0 {
        log::debug!("dropped {dropped_members} members with infeasible links to their leader");
        assignment.loads = loads_from_groups(assignment.groups.values(), map.cav_ids(), b);
    }

    let packets = build_packets(&assignment, b);
    let jobs = fusion_jobs(
        &assignment,
        &params.fusion,
        &scenario.compute_map(),
        b,
        params.b_full_bits,
    )?;
    let tau_s = params.tau_for(b);
    Ok(PreparedRound {
        assignment,
        packets,
        jobs,
        tau_s,
        feature_bits: b,
        dropped_members,
    })
}

/// Runs the full LGCP round: group selection, radio-gated membership,
/// packet scheduling, and latency/volume/objective accounting.
pub fn lgcp_run(
    scenario: &Scenario,
    map: &ConfidenceMap,
    delta_g: f64,
    params: &PipelineParams,
) -> Result<LgcpRun> {
    let round = prepare_lgcp(scenario, map, delta_g, params)?;
    let positions = scenario.positions();
    let env = RadioEnv::new(&params.channel, &positions, scenario.seed);
    let sched = schedule(&round.packets, &env, &round.jobs, round.tau_s)?;
    let PreparedRound {
        assignment,
        feature_bits: b,
        dropped_members,
        ..
    } = round;

    let breakdown = latency_breakdown(
        &params.msg_sizes,
        scenario.n_cavs(),
        params.channel.num_subchannels,
        params.channel.fixed_rate_bps,
        sched.joint_latency_s,
    );
    let conf = global_confidence(map, &assignment);
    let feature_bits: f64 = assignment
        .groups
        .values()
        .map(|g| (g.members.len() as f64 - 1.0) * b)
        .sum();
    let msg = &params.msg_sizes;
    let volume_bits = feature_bits
        + assignment.n_groups() as f64 * msg.d_rep_bits
        + msg.d_init_bits
        + scenario.n_cavs() as f64 * msg.d_info_bits
        + msg.d_ts_bits
        + msg.d_g_bits;
    let obj = objective(conf, breakdown.t_delta_s, sched.joint_latency_s)?;
    let report = ParadigmReport {
        paradigm: Paradigm::Lgcp,
        volume_bits,
        latency_s: breakdown.total_s,
        objective: obj,
        feasible: breakdown.t_delta_s + sched.joint_latency_s <= params.t_max_s,
        global_confidence: conf,
        undelivered_links: 0,
    };
    Ok(LgcpRun {
        report,
        assignment,
        schedule: sched,
        breakdown,
        dropped_members,
    })
}

/// Collaboration confidence when every CAV shares everything: each occupied
/// area is covered by the full CAV set.
fn full_sharing_confidence(scenario: &Scenario, map: &ConfidenceMap) -> f64 {
    let members: BTreeSet<CavId> = scenario.cav_ids().into_iter().collect();
    if map.n_areas() == 0 {
        return 0.0;
    }
    let sum: f64 = map
        .area_ids()
        .iter()
        .map(|&area| group_confidence(map, area, &members).unwrap_or(0.0))
        .sum();
    sum / map.n_areas() as f64
}

/// Vehicle-based paradigm outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRun {
    pub report: ParadigmReport,
    pub tx_time_s: f64,
    pub fusion_time_s: f64,
    pub makespan_slots: u64,
}

/// All-to-all full-feature exchange: every ordered CAV pair transmits one
/// full feature, scheduled under the same interference rules; every CAV then
/// fuses `|V| - 1` features on its own compute, and the round completes when
/// the slowest CAV finishes.
///
/// Links failing the rate gate are reported as undelivered (they are excluded
/// from the schedule but still counted in the required volume).
pub fn vehicle_based_run(
    scenario: &Scenario,
    map: &ConfidenceMap,
    params: &PipelineParams,
) -> Result<VehicleRun> {
    params.validate()?;
    let n = scenario.n_cavs();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "the vehicle-based paradigm needs at least 2 CAVs, got {n}"
        )));
    }
    let positions = scenario.positions();
    let env = RadioEnv::new(&params.channel, &positions, scenario.seed);
    let ids = scenario.cav_ids();
    let b_full = params.b_full_bits;

    let mut packets = Vec::with_capacity(n * (n - 1));
    let mut undelivered = 0u32;
    for &src in &ids {
        for &dst in &ids {
            if src == dst {
                continue;
            }
            if env.cav_link(src, dst)?.feasible {
                // Full-feature packets carry no area; tag by receiver so the
                // deterministic tie-break stays well-defined.
                packets.push(Packet::new(src, dst, crate::scenario::AreaId(dst.0), b_full));
            } else {
                undelivered += 1;
            }
        }
    }

    let tau_s = params.tau_for(b_full);
    let sched = schedule(&packets, &env, &[], tau_s)?;
    let tx_time_s = sched.makespan_slots as f64 * tau_s;
    let fusion_time_s = scenario
        .cavs
        .iter()
        .map(|c| (n as f64 - 1.0) * params.fusion.flops_full_fusion / c.compute_flops)
        .fold(0.0, f64::max);
    let latency_s = tx_time_s + fusion_time_s;
    let conf = full_sharing_confidence(scenario, map);
    let volume_bits = n as f64 * (n as f64 - 1.0) * b_full;
    let report = ParadigmReport {
        paradigm: Paradigm::Vehicle,
        volume_bits,
        latency_s,
        objective: objective(conf, latency_s, 0.0)?,
        feasible: latency_s <= params.t_max_s,
        global_confidence: conf,
        undelivered_links: undelivered,
    };
    Ok(VehicleRun {
        report,
        tx_time_s,
        fusion_time_s,
        makespan_slots: sched.makespan_slots,
    })
}

/// Edge-assisted paradigm outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRun {
    pub report: ParadigmReport,
    pub uplink_s: f64,
    pub fusion_s: f64,
    pub downlink_s: f64,
}

/// Edge-assisted aggregation: every CAV uploads its full feature once
/// (`ceil(|V|/Z)` parallel waves at the fixed rate), the edge server fuses all
/// features sequentially, and the global view is broadcast back.
pub fn edge_assisted_run(
    scenario: &Scenario,
    map: &ConfidenceMap,
    params: &PipelineParams,
) -> Result<EdgeRun> {
    params.validate()?;
    let n = scenario.n_cavs();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "the edge-assisted paradigm needs at least 1 CAV".into(),
        ));
    }
    let z = f64::from(params.channel.num_subchannels);
    let r = params.channel.fixed_rate_bps;
    let uplink_s = (n as f64 / z).ceil() * params.b_full_bits / r;
    let fusion_s = n as f64 * params.fusion.flops_full_fusion / params.edge_compute_flops;
    let downlink_s = params.msg_sizes.d_g_bits / r;
    let latency_s = uplink_s + fusion_s + downlink_s;
    let conf = full_sharing_confidence(scenario, map);
    let report = ParadigmReport {
        paradigm: Paradigm::Edge,
        volume_bits: n as f64 * params.b_full_bits,
        latency_s,
        objective: objective(conf, latency_s, 0.0)?,
        feasible: latency_s <= params.t_max_s,
        global_confidence: conf,
        undelivered_links: 0,
    };
    Ok(EdgeRun {
        report,
        uplink_s,
        fusion_s,
        downlink_s,
    })
}
