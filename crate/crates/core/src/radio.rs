//! Channel model, link feasibility gate, and the interference predicate
//! used by the scheduler.
//!
//! The channel follows the macro-cell path-loss form `a + b*log10(d_km)` with
//! per-link log-normal shadowing frozen for the duration of a run. A link is
//! feasible when its Shannon rate over one subchannel clears the rate gate;
//! feasible links then transmit at the fixed rate, infeasible links are
//! disabled.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{CavId, Point};
use crate::scheduler::Packet;

/// Transmission parameters. Field names mirror the standard summary-table
/// vocabulary with explicit units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub frequency_band_ghz: f64,
    pub bandwidth_mhz: f64,
    /// Number of sidelink subchannels Z.
    pub num_subchannels: u32,
    pub subchannel_bandwidth_mhz: f64,
    pub transmission_power_dbm: f64,
    pub noise_power_dbm: f64,
    /// Path loss `a + b*log10(d_km)`: intercept, dB.
    pub path_loss_a_db: f64,
    /// Path loss slope, dB per decade of distance.
    pub path_loss_b_db_per_decade: f64,
    pub shadowing_sigma_db: f64,
    /// Links below this achievable rate are disabled.
    pub rate_gate_bps: f64,
    /// Feasible links transmit at exactly this rate.
    pub fixed_rate_bps: f64,
    pub interference_radius_m: f64,
    /// Distances are floored here before entering the path-loss model.
    pub min_path_loss_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            frequency_band_ghz: 5.9,
            bandwidth_mhz: 40.0,
            num_subchannels: 5,
            subchannel_bandwidth_mhz: 8.0,
            transmission_power_dbm: 23.0,
            noise_power_dbm: -114.0,
            path_loss_a_db: 128.1,
            path_loss_b_db_per_decade: 36.6,
            shadowing_sigma_db: 8.0,
            rate_gate_bps: 27.0e6,
            fixed_rate_bps: 27.0e6,
            interference_radius_m: 200.0,
            min_path_loss_distance_m: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_subchannels == 0 {
            return Err(Error::Validation("need at least one subchannel".into()));
        }
        if self.subchannel_bandwidth_mhz * f64::from(self.num_subchannels) > self.bandwidth_mhz {
            return Err(Error::Validation(format!(
                "{} subchannels of {} MHz exceed the {} MHz band",
                self.num_subchannels, self.subchannel_bandwidth_mhz, self.bandwidth_mhz
            )));
        }
        if self.rate_gate_bps != self.fixed_rate_bps {
            return Err(Error::Validation(format!(
                "rate gate ({} bps) and fixed rate ({} bps) are coupled and must match",
                self.rate_gate_bps, self.fixed_rate_bps
            )));
        }
        for (name, v) in [
            ("fixed_rate_bps", self.fixed_rate_bps),
            ("subchannel_bandwidth_mhz", self.subchannel_bandwidth_mhz),
            ("interference_radius_m", self.interference_radius_m),
            ("min_path_loss_distance_m", self.min_path_loss_distance_m),
        ] {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::Validation("shadowing sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// One endpoint of a link: a CAV or the roadside unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkEnd {
    Cav(CavId),
    Rsu,
}

impl LinkEnd {
    fn code(self) -> u64 {
        match self {
            LinkEnd::Cav(id) => u64::from(id.0),
            LinkEnd::Rsu => u64::MAX,
        }
    }
}

impl std::fmt::Display for LinkEnd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinkEnd::Cav(id) => write!(f, "{id}"),
            LinkEnd::Rsu => write!(f, "rsu"),
        }
    }
}

/// Resolved state of one directed link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub src: LinkEnd,
    pub dst: LinkEnd,
    pub distance_m: f64,
    pub shadowing_db: f64,
    pub feasible: bool,
    /// Fixed rate when feasible, zero otherwise.
    pub rate_bps: f64,
}

/// Path loss in dB for a distance in meters (`a + b*log10(d_km)`), with the
/// distance floored at the configured minimum.
pub fn path_loss_db(params: &ChannelParams, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path loss needs a positive distance, got {distance_m}"
        )));
    }
    let d = distance_m.max(params.min_path_loss_distance_m);
    Ok(params.path_loss_a_db + params.path_loss_b_db_per_decade * (d / 1000.0).log10())
}

/// Shannon rate over one subchannel for the given distance and shadowing.
pub fn achievable_rate_bps(
    params: &ChannelParams,
    distance_m: f64,
    shadowing_db: f64,
) -> Result<f64> {
    let pl = path_loss_db(params, distance_m)?;
    let snr_db = params.transmission_power_dbm - pl - shadowing_db - params.noise_power_dbm;
    let snr = 10f64.powf(snr_db / 10.0);
    Ok(params.subchannel_bandwidth_mhz * 1.0e6 * (1.0 + snr).log2())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Frozen per-link shadowing draw in dB: normal with the configured sigma,
/// keyed by the unordered endpoint pair so that (a, b) and (b, a) coincide.
pub fn link_shadowing_db(params: &ChannelParams, seed: u64, a: LinkEnd, b: LinkEnd) -> f64 {
    if params.shadowing_sigma_db == 0.0 {
        return 0.0;
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let key = splitmix64(splitmix64(splitmix64(seed) ^ lo.code()) ^ hi.code());
    let mut rng = ChaCha12Rng::seed_from_u64(key);
    let z: f64 = StandardNormal.sample(&mut rng);
    z * params.shadowing_sigma_db
}

/// Resolves a directed link between two endpoints.
///
/// CAV-to-CAV links draw their shadowing from `(seed, endpoints)` and apply
/// the rate gate. Links touching the RSU are contention-free at the fixed
/// rate (the up/downlink stages are accounted for in closed form).
pub fn link_state(
    params: &ChannelParams,
    seed: u64,
    src: (LinkEnd, Point),
    dst: (LinkEnd, Point),
) -> Result<LinkState> {
    let (src_end, src_pos) = src;
    let (dst_end, dst_pos) = dst;
    if !src_pos.is_finite() || !dst_pos.is_finite() {
        return Err(Error::InvalidArgument("link endpoint positions must be finite".into()));
    }
    let distance_m = src_pos.distance(&dst_pos);
    if src_end == LinkEnd::Rsu || dst_end == LinkEnd::Rsu {
        return Ok(LinkState {
            src: src_end,
            dst: dst_end,
            distance_m,
            shadowing_db: 0.0,
            feasible: true,
            rate_bps: params.fixed_rate_bps,
        });
    }
    let shadowing_db = link_shadowing_db(params, seed, src_end, dst_end);
    let effective_d = distance_m.max(params.min_path_loss_distance_m);
    let rate = achievable_rate_bps(params, effective_d, shadowing_db)?;
    let feasible = rate >= params.rate_gate_bps;
    Ok(LinkState {
        src: src_end,
        dst: dst_end,
        distance_m,
        shadowing_db,
        feasible,
        rate_bps: if feasible { params.fixed_rate_bps } else { 0.0 },
    })
}

/// The interference predicate: does `candidate` (with its subchannel set)
/// conflict with any packet already placed in the same slot?
///
/// Rule (i), endpoint exclusivity: a node transmits at most one packet,
/// receives at most one packet, and never does both in one slot — so any
/// shared endpoint conflicts regardless of subchannel.
///
/// Rule (ii), co-channel interference: on a shared subchannel, a placed
/// transmitter within the interference radius of the candidate's receiver
/// (or the candidate's transmitter within the radius of a placed receiver)
/// conflicts.
pub fn conflicts(
    candidate: &Packet,
    placed: &[Packet],
    positions: &BTreeMap<CavId, Point>,
    params: &ChannelParams,
) -> bool {
    let radius = params.interference_radius_m;
    for other in placed {
        if candidate.src == other.src
            || candidate.src == other.dst
            || candidate.dst == other.src
            || candidate.dst == other.dst
        {
            return true;
        }
        if candidate.subchannel.is_some() && candidate.subchannel == other.subchannel {
            let cand_dst = &positions[&candidate.dst];
            let cand_src = &positions[&candidate.src];
            let other_src = &positions[&other.src];
            let other_dst = &positions[&other.dst];
            if other_src.distance(cand_dst) <= radius || cand_src.distance(other_dst) <= radius {
                return true;
            }
        }
    }
    false
}

/// Radio context threaded through the scheduler: channel parameters, CAV
/// positions, and the shadowing seed.
#[derive(Debug, Clone)]
pub struct RadioEnv<'a> {
    pub params: &'a ChannelParams,
    pub positions: &'a BTreeMap<CavId, Point>,
    pub shadow_seed: u64,
}

impl<'a> RadioEnv<'a> {
    pub fn new(
        params: &'a ChannelParams,
        positions: &'a BTreeMap<CavId, Point>,
        shadow_seed: u64,
    ) -> Self {
        RadioEnv {
            params,
            positions,
            shadow_seed,
        }
    }

    fn position(&self, cav: CavId) -> Result<Point> {
        self.positions
            .get(&cav)
            .copied()
            .ok_or_else(|| Error::Validation(format!("no position for CAV {cav}")))
    }

    /// Link state between two CAVs.
    pub fn cav_link(&self, src: CavId, dst: CavId) -> Result<LinkState> {
        let sp = self.position(src)?;
        let dp = self.position(dst)?;
        link_state(
            self.params,
            self.shadow_seed,
            (LinkEnd::Cav(src), sp),
            (LinkEnd::Cav(dst), dp),
        )
    }

    pub fn conflicts(&self, candidate: &Packet, placed: &[Packet]) -> bool {
        conflicts(candidate, placed, self.positions, self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AreaId;
    use approx::assert_abs_diff_eq;

    fn packet(src: u32, dst: u32, sub: u32) -> Packet {
        Packet {
            src: CavId(src),
            dst: CavId(dst),
            area: AreaId(0),
            subchannel: Some(sub),
            slot: Some(0),
            size_bits: 1000.0,
        }
    }

    #[test]
    fn path_loss_reference_points() {
        let p = ChannelParams::default();
        assert_abs_diff_eq!(path_loss_db(&p, 1000.0).unwrap(), 128.1, epsilon = 1e-9);
        assert_abs_diff_eq!(path_loss_db(&p, 100.0).unwrap(), 91.5, epsilon = 1e-9);
        assert_abs_diff_eq!(path_loss_db(&p, 10_000.0).unwrap(), 164.7, epsilon = 1e-9);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let p = ChannelParams::default();
        assert!(matches!(
            path_loss_db(&p, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            path_loss_db(&p, -5.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn path_loss_monotone_above_floor() {
        let p = ChannelParams::default();
        let mut prev = path_loss_db(&p, 2.0).unwrap();
        for d in [5.0, 20.0, 80.0, 300.0, 1200.0, 5000.0] {
            let pl = path_loss_db(&p, d).unwrap();
            assert!(pl > prev);
            prev = pl;
        }
    }

    #[test]
    fn achievable_rate_at_100m() {
        let p = ChannelParams::default();
        // SNR = 23 - 91.5 + 114 = 45.5 dB.
        let rate = achievable_rate_bps(&p, 100.0, 0.0).unwrap();
        let expected = 8.0e6 * (1.0 + 10f64.powf(45.5 / 10.0)).log2();
        assert_abs_diff_eq!(rate, expected, epsilon = 1.0);
        assert_abs_diff_eq!(rate, 1.21e8, epsilon = 0.01e8);
    }

    #[test]
    fn achievable_rate_vanishes_at_huge_distance() {
        let p = ChannelParams::default();
        let rate = achievable_rate_bps(&p, 1.0e9, 0.0).unwrap();
        assert!(rate < 1.0);
    }

    #[test]
    fn zero_snr_gives_one_bit_per_hz() {
        let p = ChannelParams::default();
        // Choose shadowing so SNR is exactly 0 dB at 100 m.
        let pl = path_loss_db(&p, 100.0).unwrap();
        let shadowing = p.transmission_power_dbm - pl - p.noise_power_dbm;
        let rate = achievable_rate_bps(&p, 100.0, shadowing).unwrap();
        assert_abs_diff_eq!(rate, 8.0e6, epsilon = 1e-3);
    }

    #[test]
    fn link_gate_and_fixed_rate() {
        let mut p = ChannelParams::default();
        p.shadowing_sigma_db = 0.0;
        let near = link_state(
            &p,
            1,
            (LinkEnd::Cav(CavId(0)), Point::new(0.0, 0.0)),
            (LinkEnd::Cav(CavId(1)), Point::new(100.0, 0.0)),
        )
        .unwrap();
        assert!(near.feasible);
        assert_eq!(near.rate_bps, 27.0e6);

        let far = link_state(
            &p,
            1,
            (LinkEnd::Cav(CavId(0)), Point::new(0.0, 0.0)),
            (LinkEnd::Cav(CavId(1)), Point::new(900.0, 0.0)),
        )
        .unwrap();
        // PL(0.9 km) = 128.1 + 36.6*log10(0.9) ~ 126.4 dB, SNR ~ 10.6 dB,
        // rate ~ 8e6*log2(1+11.5) ~ 29 Mbps -- just feasible; push farther.
        let very_far = link_state(
            &p,
            1,
            (LinkEnd::Cav(CavId(0)), Point::new(0.0, 0.0)),
            (LinkEnd::Cav(CavId(1)), Point::new(2000.0, 0.0)),
        )
        .unwrap();
        assert!(!very_far.feasible);
        assert_eq!(very_far.rate_bps, 0.0);
        let _ = far;
    }

    #[test]
    fn shadowing_is_symmetric_and_seeded() {
        let p = ChannelParams::default();
        let a = LinkEnd::Cav(CavId(3));
        let b = LinkEnd::Cav(CavId(9));
        assert_eq!(
            link_shadowing_db(&p, 7, a, b),
            link_shadowing_db(&p, 7, b, a)
        );
        assert_eq!(
            link_shadowing_db(&p, 7, a, b),
            link_shadowing_db(&p, 7, a, b)
        );
        assert_ne!(
            link_shadowing_db(&p, 7, a, b),
            link_shadowing_db(&p, 8, a, b)
        );
    }

    #[test]
    fn rsu_links_are_contention_free() {
        let p = ChannelParams::default();
        let s = link_state(
            &p,
            1,
            (LinkEnd::Cav(CavId(0)), Point::new(0.0, 0.0)),
            (LinkEnd::Rsu, Point::new(5000.0, 0.0)),
        )
        .unwrap();
        assert!(s.feasible);
        assert_eq!(s.rate_bps, p.fixed_rate_bps);
    }

    #[test]
    fn conflict_same_source() {
        let p = ChannelParams::default();
        let positions: BTreeMap<CavId, Point> = [
            (CavId(0), Point::new(0.0, 0.0)),
            (CavId(1), Point::new(1000.0, 0.0)),
            (CavId(2), Point::new(2000.0, 0.0)),
        ]
        .into();
        // Same src, different subchannels: still a conflict (one transmitter).
        let cand = packet(0, 1, 0);
        let placed = vec![packet(0, 2, 3)];
        assert!(conflicts(&cand, &placed, &positions, &p));
    }

    #[test]
    fn conflict_co_channel_within_radius() {
        let p = ChannelParams::default();
        // Other transmitter 50 m from candidate's receiver, same subchannel.
        let positions: BTreeMap<CavId, Point> = [
            (CavId(0), Point::new(0.0, 0.0)),    // candidate src
            (CavId(1), Point::new(500.0, 0.0)),  // candidate dst
            (CavId(2), Point::new(550.0, 0.0)),  // placed src, 50 m from dst
            (CavId(3), Point::new(2000.0, 0.0)), // placed dst
        ]
        .into();
        let cand = packet(0, 1, 2);
        let placed = vec![packet(2, 3, 2)];
        assert!(conflicts(&cand, &placed, &positions, &p));
        // Different subchannel: no conflict.
        let cand_other = packet(0, 1, 1);
        assert!(!conflicts(&cand_other, &placed, &positions, &p));
    }

    #[test]
    fn no_conflict_disjoint_and_distant() {
        let p = ChannelParams::default();
        let positions: BTreeMap<CavId, Point> = [
            (CavId(0), Point::new(0.0, 0.0)),
            (CavId(1), Point::new(10.0, 0.0)),
            (CavId(2), Point::new(5000.0, 0.0)),
            (CavId(3), Point::new(5010.0, 0.0)),
        ]
        .into();
        let cand = packet(0, 1, 0);
        let placed = vec![packet(2, 3, 1)];
        assert!(!conflicts(&cand, &placed, &positions, &p));
    }

    #[test]
    fn conflict_symmetry_pairwise() {
        use rand::Rng;
        use rand::SeedableRng;
        let p = ChannelParams::default();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let positions: BTreeMap<CavId, Point> = (0..4u32)
                .map(|i| {
                    (
                        CavId(i),
                        Point::new(
                            rng.random_range(0.0..1000.0),
                            rng.random_range(0.0..1000.0),
                        ),
                    )
                })
                .collect();
            let a = packet(0, 1, rng.random_range(0..3));
            let b = packet(2, 3, rng.random_range(0..3));
            assert_eq!(
                conflicts(&a, std::slice::from_ref(&b), &positions, &p),
                conflicts(&b, std::slice::from_ref(&a), &positions, &p)
            );
        }
    }

    #[test]
    fn conflict_monotone_in_placed_set() {
        let p = ChannelParams::default();
        let positions: BTreeMap<CavId, Point> = (0..6u32)
            .map(|i| (CavId(i), Point::new(f64::from(i) * 400.0, 0.0)))
            .collect();
        let cand = packet(0, 1, 0);
        let small = vec![packet(2, 3, 1)];
        let large = vec![packet(2, 3, 1), packet(4, 5, 0)];
        if conflicts(&cand, &small, &positions, &p) {
            assert!(conflicts(&cand, &large, &positions, &p));
        }
    }

    #[test]
    fn params_validation() {
        let mut p = ChannelParams::default();
        p.rate_gate_bps = 1.0e6;
        assert!(p.validate().is_err());
        let mut p = ChannelParams::default();
        p.num_subchannels = 6; // 6 * 8 MHz > 40 MHz
        assert!(p.validate().is_err());
        assert!(ChannelParams::default().validate().is_ok());
    }
}
