//! Property tests for the structural invariants: grid tiling, occupancy
//! monotonicity, confidence algebra, threshold-prefix behavior, load
//! identities, interference-predicate symmetry, and schedule validity.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use lgcp_core::assignment::{loads_from_groups, select_groups};
use lgcp_core::confidence::{group_confidence, ConfidenceMap};
use lgcp_core::radio::{conflicts, path_loss_db, ChannelParams, RadioEnv};
use lgcp_core::scenario::{AreaId, CavId, GridSpec, Point, RoiGrid, Scenario};
use lgcp_core::scheduler::{schedule, verify_schedule, Packet};

fn grid_strategy() -> impl Strategy<Value = RoiGrid> {
    (10.0f64..400.0, 10.0f64..120.0, 1.0f64..15.0, 1.0f64..9.0)
        .prop_map(|(w, h, cw, ch)| RoiGrid::build(w, h, cw, ch).unwrap())
}

proptest! {
    /// Every in-RoI point maps to exactly one cell whose clipped box
    /// contains it, and cell centers map back to their own index.
    #[test]
    fn grid_tiling_is_exact(
        grid in grid_strategy(),
        fx in 0.0f64..1.0,
        fy in 0.0f64..1.0,
    ) {
        let p = Point::new(grid.origin.x + fx * grid.width_m, grid.origin.y + fy * grid.height_m);
        let cell = grid.cell_of(&p).expect("in-RoI point must map to a cell");
        let (lo, hi) = grid.cell_bbox(cell).unwrap();
        prop_assert!(lo.x <= p.x && p.x <= hi.x);
        prop_assert!(lo.y <= p.y && p.y <= hi.y);
        let center = grid.cell_center(cell).unwrap();
        prop_assert_eq!(grid.cell_of(&center), Some(cell));
    }

    /// Adding vehicles never removes occupied cells.
    #[test]
    fn occupancy_is_monotone(
        grid in grid_strategy(),
        points in prop::collection::vec((0.0f64..500.0, 0.0f64..150.0), 0..40),
        extra in prop::collection::vec((0.0f64..500.0, 0.0f64..150.0), 0..10),
    ) {
        let points: Vec<Point> = points.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let extra: Vec<Point> = extra.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let g1 = grid.mark_occupancy(&points);
        let g2 = g1.mark_occupancy(&extra);
        prop_assert!(g1.occupied.is_subset(&g2.occupied));
    }
}

fn map_strategy() -> impl Strategy<Value = ConfidenceMap> {
    (1usize..5, 1usize..6).prop_flat_map(|(n_areas, n_cavs)| {
        prop::collection::vec(0.0f64..1.0, n_areas * n_cavs).prop_map(move |values| {
            let areas: Vec<AreaId> = (0..n_areas as u32).map(AreaId).collect();
            let cavs: Vec<CavId> = (0..n_cavs as u32).map(CavId).collect();
            ConfidenceMap::from_values(areas, cavs, values).unwrap()
        })
    })
}

fn subset_of(map: &ConfidenceMap, mask: u32) -> BTreeSet<CavId> {
    map.cav_ids()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &c)| c)
        .collect()
}

proptest! {
    /// Adding a member never lowers the group confidence, the gain shows
    /// diminishing returns from subset to superset, and the value stays in
    /// [max member value, 1].
    #[test]
    fn confidence_monotone_submodular_bounded(
        map in map_strategy(),
        mask in 1u32..32,
        extra_idx in 0usize..6,
    ) {
        let n = map.n_cavs();
        let mask = mask & ((1 << n) - 1);
        prop_assume!(mask != 0);
        let area = map.area_ids()[0];
        let members = subset_of(&map, mask);
        let f = group_confidence(&map, area, &members).unwrap();

        // Bounds.
        let max_member = members
            .iter()
            .map(|&c| map.value(area, c).unwrap())
            .fold(0.0f64, f64::max);
        prop_assert!(f >= max_member - 1e-12);
        prop_assert!(f <= 1.0 + 1e-12);

        let extra = map.cav_ids()[extra_idx % n];
        let mut superset = members.clone();
        superset.insert(extra);
        let f_super = group_confidence(&map, area, &superset).unwrap();
        // Monotone.
        prop_assert!(f_super >= f - 1e-12);

        // Submodular: gain over a subset dominates gain over the full set.
        let small_mask = mask & (mask - 1); // drop lowest member
        if small_mask != 0 {
            let small = subset_of(&map, small_mask);
            let f_small = group_confidence(&map, area, &small).unwrap();
            let mut small_plus = small.clone();
            small_plus.insert(extra);
            let f_small_plus = group_confidence(&map, area, &small_plus).unwrap();
            let gain_small = f_small_plus - f_small;
            let gain_big = f_super - f;
            prop_assert!(gain_big <= gain_small + 1e-9);
        }
    }

    /// Raising the threshold can only shorten each area's member list, and
    /// the shorter list is a prefix of the longer one.
    #[test]
    fn threshold_members_are_prefixes(
        map in map_strategy(),
        d1 in 0.0f64..0.5,
        d2 in 0.0f64..0.5,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a_lo = select_groups(&map, lo, 1000.0).unwrap();
        let a_hi = select_groups(&map, hi, 1000.0).unwrap();
        for (area, g_hi) in &a_hi.groups {
            let g_lo = a_lo.groups.get(area).expect("higher threshold cannot add areas");
            prop_assert!(g_hi.members.len() <= g_lo.members.len());
            prop_assert_eq!(&g_lo.members[..g_hi.members.len()], &g_hi.members[..]);
        }
    }

    /// Stored loads always equal the canonical recomputation from groups.
    #[test]
    fn load_identity_holds(map in map_strategy(), delta in 0.0f64..0.4) {
        let b = 5785.714285714286;
        let a = select_groups(&map, delta, b).unwrap();
        let recomputed = loads_from_groups(a.groups.values(), map.cav_ids(), b);
        prop_assert_eq!(&a.loads, &recomputed);
        // Exactly one leader per group, and the leader is a member.
        for g in a.groups.values() {
            prop_assert!(g.members.contains(&g.leader));
            let unique: BTreeSet<_> = g.members.iter().collect();
            prop_assert_eq!(unique.len(), g.members.len());
        }
    }
}

fn packet_instance() -> impl Strategy<Value = (BTreeMap<CavId, Point>, Vec<Packet>, u32)> {
    (2u32..=6, 1u32..=5).prop_flat_map(|(n_cavs, z)| {
        let positions = prop::collection::vec((0.0f64..300.0, 0.0f64..100.0), n_cavs as usize);
        let packets = prop::collection::vec((0..n_cavs, 0..n_cavs), 1..10);
        (positions, packets).prop_map(move |(pos, pairs)| {
            let positions: BTreeMap<CavId, Point> = pos
                .into_iter()
                .enumerate()
                .map(|(i, (x, y))| (CavId(i as u32), Point::new(x, y)))
                .collect();
            let packets: Vec<Packet> = pairs
                .into_iter()
                .enumerate()
                .filter(|(_, (s, d))| s != d)
                .map(|(k, (s, d))| Packet::new(CavId(s), CavId(d), AreaId(k as u32), 1000.0))
                .collect();
            (positions, packets, z)
        })
    })
}

proptest! {
    /// The interference predicate is symmetric pairwise and monotone in the
    /// placed set.
    #[test]
    fn conflicts_symmetric_and_monotone(
        (positions, packets, _z) in packet_instance(),
        sub_a in 0u32..5,
        sub_b in 0u32..5,
    ) {
        prop_assume!(packets.len() >= 2);
        let params = ChannelParams::default();
        let mut a = packets[0].clone();
        let mut b = packets[1].clone();
        a.subchannel = Some(sub_a);
        a.slot = Some(0);
        b.subchannel = Some(sub_b);
        b.slot = Some(0);
        let ab = conflicts(&a, std::slice::from_ref(&b), &positions, &params);
        let ba = conflicts(&b, std::slice::from_ref(&a), &positions, &params);
        prop_assert_eq!(ab, ba);

        if packets.len() >= 3 {
            let mut c = packets[2].clone();
            c.subchannel = Some((sub_a + 1) % 5);
            c.slot = Some(0);
            let small = vec![b.clone()];
            let large = vec![b, c];
            if conflicts(&a, &small, &positions, &params) {
                prop_assert!(conflicts(&a, &large, &positions, &params));
            }
        }
    }

    /// Path loss grows strictly with distance above the floor.
    #[test]
    fn path_loss_strictly_increasing(d1 in 1.0f64..5000.0, d2 in 1.0f64..5000.0) {
        prop_assume!((d1 - d2).abs() > 1e-6);
        let params = ChannelParams::default();
        let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(
            path_loss_db(&params, near).unwrap() < path_loss_db(&params, far).unwrap()
        );
    }

    /// Every produced schedule passes the independent validity replay.
    #[test]
    fn schedules_replay_clean((positions, packets, z) in packet_instance()) {
        prop_assume!(!packets.is_empty());
        let params = ChannelParams {
            num_subchannels: z,
            shadowing_sigma_db: 0.0,
            ..ChannelParams::default()
        };
        let env = RadioEnv::new(&params, &positions, 0);
        let sched = schedule(&packets, &env, &[], 1.0e-3).unwrap();
        verify_schedule(&sched, &packets, &env).unwrap();
    }
}

/// Scenario JSON persistence round-trips bit-exactly across 100 seeds.
#[test]
fn scenario_round_trip_100_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::default();
    for seed in 0..100u64 {
        let scenario = Scenario::generate(seed, 1 + (seed % 7) as u32, 12, &spec).unwrap();
        let path = dir.path().join(format!("s{seed}.json"));
        scenario.save(&path).unwrap();
        let loaded = Scenario::load(&path).unwrap();
        assert_eq!(scenario, loaded, "seed {seed}");
        // Saving the loaded scenario reproduces the file byte-for-byte.
        let path2 = dir.path().join(format!("s{seed}b.json"));
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }
}
