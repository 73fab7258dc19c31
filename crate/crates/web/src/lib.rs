//! Browser bindings for the LGCP simulator.
//!
//! Three operations back the demo page, each returning a JSON string the
//! page renders with plain canvas drawing:
//!
//! * [`scenario_view`] — the RoI grid, CAV poses, and the group assignment
//!   for one seed and threshold.
//! * [`run_round`] — one full round: the slot/subchannel schedule, the
//!   latency breakdown, and the three-paradigm comparison.
//! * [`sweep_curves`] — volume/latency/objective curves over the gain
//!   threshold or the CAV count.
//!
//! Errors come back as `{"error": "..."}` instead of exceptions, so the page
//! handles them uniformly. The functions are plain Rust and fully testable
//! off-wasm.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use lgcp_core::confidence::{synthetic_confidence, SyntheticConfidenceParams};
use lgcp_core::paradigms::{
    edge_assisted_run, lgcp_run, vehicle_based_run, LgcpRun, PipelineParams,
};
use lgcp_core::scenario::{GridSpec, Scenario};
use lgcp_core::Result;

#[derive(Serialize)]
struct GridView {
    width_m: f64,
    height_m: f64,
    cell_w: f64,
    cell_h: f64,
    n_cols: u32,
    n_rows: u32,
}

#[derive(Serialize)]
struct CavView {
    id: u32,
    x: f64,
    y: f64,
    heading_deg: f64,
}

#[derive(Serialize)]
struct PointView {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct GroupView {
    area: u32,
    center_x: f64,
    center_y: f64,
    members: Vec<u32>,
    leader: u32,
    confidence: f64,
}

#[derive(Serialize)]
struct ScenarioView {
    seed: u32,
    delta_g: f64,
    grid: GridView,
    occupied: Vec<u32>,
    cavs: Vec<CavView>,
    background: Vec<PointView>,
    groups: Vec<GroupView>,
    global_confidence: f64,
    dropped_members: u32,
}

#[derive(Serialize)]
struct TupleView {
    src: u32,
    dst: u32,
    area: u32,
    subchannel: u32,
    slot: u64,
}

#[derive(Serialize)]
struct ScheduleView {
    tau_ms: f64,
    makespan_slots: u64,
    joint_latency_ms: f64,
    n_subchannels: u32,
    tuples: Vec<TupleView>,
}

#[derive(Serialize)]
struct BreakdownView {
    t1_ms: f64,
    t2_ms: f64,
    t3_ms: f64,
    t4_ms: f64,
    t_delta_ms: f64,
    total_ms: f64,
}

#[derive(Serialize)]
struct ParadigmView {
    name: String,
    volume_mbit: f64,
    latency_ms: f64,
    objective: f64,
    feasible: bool,
}

#[derive(Serialize)]
struct RoundView {
    scenario: ScenarioView,
    schedule: ScheduleView,
    breakdown: BreakdownView,
    paradigms: Vec<ParadigmView>,
}

#[derive(Serialize)]
struct SweepPoint {
    x: f64,
    paradigm: String,
    volume_mbit: f64,
    latency_ms: f64,
    objective: f64,
    global_confidence: f64,
}

#[derive(Serialize)]
struct SweepView {
    mode: String,
    x_label: String,
    points: Vec<SweepPoint>,
}

fn json_or_error<T: Serialize>(value: Result<T>) -> String {
    match value {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(message: &str) -> String {
    serde_json::to_string(&serde_json::json!({ "error": message })).unwrap()
}

fn demo_pipeline() -> PipelineParams {
    PipelineParams::default()
}

fn demo_scenario(seed: u32, n_cavs: u32, n_background: u32) -> Result<Scenario> {
    Scenario::generate(u64::from(seed), n_cavs, n_background, &GridSpec::default())
}

fn build_scenario_view(
    scenario: &Scenario,
    map: &lgcp_core::confidence::ConfidenceMap,
    run: &LgcpRun,
    seed: u32,
    delta_g: f64,
) -> ScenarioView {
    let grid = &scenario.grid;
    let groups = run
        .assignment
        .groups
        .values()
        .map(|g| {
            let center = grid
                .cell_center(g.area_id)
                .unwrap_or(lgcp_core::scenario::Point { x: 0.0, y: 0.0 });
            let members: std::collections::BTreeSet<_> = g.members.iter().copied().collect();
            let confidence =
                lgcp_core::confidence::group_confidence(map, g.area_id, &members).unwrap_or(0.0);
            GroupView {
                area: g.area_id.0,
                center_x: center.x,
                center_y: center.y,
                members: g.members.iter().map(|c| c.0).collect(),
                leader: g.leader.0,
                confidence,
            }
        })
        .collect();
    ScenarioView {
        seed,
        delta_g,
        grid: GridView {
            width_m: grid.width_m,
            height_m: grid.height_m,
            cell_w: grid.cell_w,
            cell_h: grid.cell_h,
            n_cols: grid.n_cols(),
            n_rows: grid.n_rows(),
        },
        occupied: grid.occupied.iter().map(|a| a.0).collect(),
        cavs: scenario
            .cavs
            .iter()
            .map(|c| CavView {
                id: c.id.0,
                x: c.position.x,
                y: c.position.y,
                heading_deg: c.heading_deg,
            })
            .collect(),
        background: scenario
            .background
            .iter()
            .map(|p| PointView { x: p.x, y: p.y })
            .collect(),
        groups,
        global_confidence: run.report.global_confidence,
        dropped_members: run.dropped_members,
    }
}

fn run_confidence(scenario: &Scenario, seed: u32) -> lgcp_core::confidence::ConfidenceMap {
    synthetic_confidence(
        scenario,
        &SyntheticConfidenceParams::default(),
        u64::from(seed),
    )
    .expect("default synthetic parameters are valid")
}

fn scenario_view_impl(
    seed: u32,
    n_cavs: u32,
    n_background: u32,
    delta_g: f64,
) -> Result<ScenarioView> {
    let scenario = demo_scenario(seed, n_cavs, n_background)?;
    let map = run_confidence(&scenario, seed);
    let run = lgcp_run(&scenario, &map, delta_g, &demo_pipeline())?;
    Ok(build_scenario_view(&scenario, &map, &run, seed, delta_g))
}

fn run_round_impl(seed: u32, n_cavs: u32, n_background: u32, delta_g: f64) -> Result<RoundView> {
    let scenario = demo_scenario(seed, n_cavs, n_background)?;
    let map = run_confidence(&scenario, seed);
    let pipeline = demo_pipeline();
    let run = lgcp_run(&scenario, &map, delta_g, &pipeline)?;

    let mut paradigms = vec![ParadigmView {
        name: "lgcp".into(),
        volume_mbit: run.report.volume_bits / 1.0e6,
        latency_ms: run.report.latency_s * 1.0e3,
        objective: run.report.objective,
        feasible: run.report.feasible,
    }];
    if scenario.n_cavs() >= 2 {
        let vehicle = vehicle_based_run(&scenario, &map, &pipeline)?;
        paradigms.push(ParadigmView {
            name: "vehicle".into(),
            volume_mbit: vehicle.report.volume_bits / 1.0e6,
            latency_ms: vehicle.report.latency_s * 1.0e3,
            objective: vehicle.report.objective,
            feasible: vehicle.report.feasible,
        });
    }
    let edge = edge_assisted_run(&scenario, &map, &pipeline)?;
    paradigms.push(ParadigmView {
        name: "edge".into(),
        volume_mbit: edge.report.volume_bits / 1.0e6,
        latency_ms: edge.report.latency_s * 1.0e3,
        objective: edge.report.objective,
        feasible: edge.report.feasible,
    });

    let b = &run.breakdown;
    let schedule = ScheduleView {
        tau_ms: run.schedule.tau_s * 1.0e3,
        makespan_slots: run.schedule.makespan_slots,
        joint_latency_ms: run.schedule.joint_latency_s * 1.0e3,
        n_subchannels: pipeline.channel.num_subchannels,
        tuples: run
            .schedule
            .packets
            .iter()
            .map(|p| TupleView {
                src: p.src.0,
                dst: p.dst.0,
                area: p.area.0,
                subchannel: p.subchannel.expect("placed"),
                slot: p.slot.expect("placed"),
            })
            .collect(),
    };
    let scenario_view = build_scenario_view(&scenario, &map, &run, seed, delta_g);
    Ok(RoundView {
        scenario: scenario_view,
        schedule,
        breakdown: BreakdownView {
            t1_ms: b.t1_s * 1.0e3,
            t2_ms: b.t2_s * 1.0e3,
            t3_ms: b.t3_s * 1.0e3,
            t4_ms: b.t4_s * 1.0e3,
            t_delta_ms: b.t_delta_s * 1.0e3,
            total_ms: b.total_s * 1.0e3,
        },
        paradigms,
    })
}

fn sweep_curves_impl(seed: u32, n_background: u32, mode: &str) -> Result<SweepView> {
    let pipeline = demo_pipeline();
    let mut points = Vec::new();
    match mode {
        "delta_g" => {
            let n_cavs = 5;
            let scenario = demo_scenario(seed, n_cavs, n_background)?;
            let map = run_confidence(&scenario, seed);
            for k in 0..=20 {
                let delta = 0.01 + 0.012 * f64::from(k);
                let run = lgcp_run(&scenario, &map, delta, &pipeline)?;
                points.push(SweepPoint {
                    x: delta,
                    paradigm: "lgcp".into(),
                    volume_mbit: run.report.volume_bits / 1.0e6,
                    latency_ms: run.report.latency_s * 1.0e3,
                    objective: run.report.objective,
                    global_confidence: run.report.global_confidence,
                });
            }
            Ok(SweepView {
                mode: "delta_g".into(),
                x_label: "gain threshold".into(),
                points,
            })
        }
        "n_cavs" => {
            for n in 2..=7u32 {
                let scenario = demo_scenario(seed, n, n_background)?;
                let map = run_confidence(&scenario, seed);
                let lgcp = lgcp_run(&scenario, &map, 0.075, &pipeline)?;
                let vehicle = vehicle_based_run(&scenario, &map, &pipeline)?;
                let edge = edge_assisted_run(&scenario, &map, &pipeline)?;
                for (name, volume, latency, objective, confidence) in [
                    (
                        "lgcp",
                        lgcp.report.volume_bits,
                        lgcp.report.latency_s,
                        lgcp.report.objective,
                        lgcp.report.global_confidence,
                    ),
                    (
                        "vehicle",
                        vehicle.report.volume_bits,
                        vehicle.report.latency_s,
                        vehicle.report.objective,
                        vehicle.report.global_confidence,
                    ),
                    (
                        "edge",
                        edge.report.volume_bits,
                        edge.report.latency_s,
                        edge.report.objective,
                        edge.report.global_confidence,
                    ),
                ] {
                    points.push(SweepPoint {
                        x: f64::from(n),
                        paradigm: name.into(),
                        volume_mbit: volume / 1.0e6,
                        latency_ms: latency * 1.0e3,
                        objective,
                        global_confidence: confidence,
                    });
                }
            }
            Ok(SweepView {
                mode: "n_cavs".into(),
                x_label: "number of CAVs".into(),
                points,
            })
        }
        other => Err(lgcp_core::Error::InvalidArgument(format!(
            "unknown sweep mode '{other}' (expected delta_g or n_cavs)"
        ))),
    }
}

/// Scenario, occupancy, and group assignment for one seed and threshold.
#[wasm_bindgen]
pub fn scenario_view(seed: u32, n_cavs: u32, n_background: u32, delta_g: f64) -> String {
    json_or_error(scenario_view_impl(seed, n_cavs, n_background, delta_g))
}

/// One full round: schedule, latency breakdown, paradigm comparison.
#[wasm_bindgen]
pub fn run_round(seed: u32, n_cavs: u32, n_background: u32, delta_g: f64) -> String {
    json_or_error(run_round_impl(seed, n_cavs, n_background, delta_g))
}

/// Sweep curves; `mode` is "delta_g" or "n_cavs".
#[wasm_bindgen]
pub fn sweep_curves(seed: u32, n_background: u32, mode: &str) -> String {
    json_or_error(sweep_curves_impl(seed, n_background, mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_view_json_shape() {
        let text = scenario_view(7, 5, 10, 0.075);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        assert_eq!(v["grid"]["n_cols"], 28);
        assert_eq!(v["grid"]["n_rows"], 14);
        assert_eq!(v["cavs"].as_array().unwrap().len(), 5);
        assert!(!v["groups"].as_array().unwrap().is_empty());
        let g = &v["groups"][0];
        assert!(g["members"]
            .as_array()
            .unwrap()
            .iter()
            .any(|m| m == &g["leader"]));
    }

    #[test]
    fn run_round_json_shape() {
        let text = run_round(7, 5, 10, 0.075);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("error").is_none(), "{text}");
        assert_eq!(v["paradigms"].as_array().unwrap().len(), 3);
        assert!(v["schedule"]["makespan_slots"].as_u64().unwrap() >= 1);
        let total = v["breakdown"]["total_ms"].as_f64().unwrap();
        let t_delta = v["breakdown"]["t_delta_ms"].as_f64().unwrap();
        let joint = v["schedule"]["joint_latency_ms"].as_f64().unwrap();
        assert!((total - (t_delta + joint)).abs() < 1e-6);
    }

    #[test]
    fn sweep_curves_modes() {
        let text = sweep_curves(3, 10, "n_cavs");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 18); // 6 n x 3 paradigms

        let text = sweep_curves(3, 10, "delta_g");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 21);

        let text = sweep_curves(3, 10, "bogus");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn demo_calls_are_deterministic() {
        assert_eq!(run_round(11, 4, 8, 0.075), run_round(11, 4, 8, 0.075));
        assert_eq!(sweep_curves(2, 10, "n_cavs"), sweep_curves(2, 10, "n_cavs"));
    }
}
