//! Configuration and experiment layer: scenario generation, sweeps over the
//! gain threshold and CAV count, paradigm comparison tables, and the oracle
//! and statistical verification harnesses.
//!
//! Every command is a pure function of its configuration: reruns with equal
//! configs produce byte-identical output files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{brute_force_groups, select_groups};
use crate::confidence::{load_confidence, synthetic_confidence, ConfidenceMap};
use crate::confidence::SyntheticConfidenceParams;
use crate::error::{Error, Result};
use crate::paradigms::{
    edge_assisted_run, lgcp_run, prepare_lgcp, vehicle_based_run, LatencyBreakdown, Paradigm,
    PipelineParams, SlotMode,
};
use crate::radio::{ChannelParams, RadioEnv};
use crate::scenario::{AreaId, CavId, ConfidenceSource, GridSpec, Point, Scenario};
use crate::scheduler::{
    brute_force_schedule, schedule, schedule_random, verify_schedule, FusionCostModel, Packet,
};

/// Where scenarios come from: the seeded generator or a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScenarioSourceConfig {
    Generate {
        n_background: u32,
        grid: GridSpec,
    },
    File {
        path: PathBuf,
    },
}

impl Default for ScenarioSourceConfig {
    fn default() -> Self {
        ScenarioSourceConfig::Generate {
            n_background: 10,
            grid: GridSpec::default(),
        }
    }
}

/// Fusion model selection: one of the named presets or a custom FLOP count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FusionConfig {
    Preset { preset: String },
    Custom { flops_full_fusion: f64 },
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig::Preset {
            preset: "where2comm".into(),
        }
    }
}

impl FusionConfig {
    pub fn resolve(&self) -> Result<FusionCostModel> {
        match self {
            FusionConfig::Preset { preset } => match preset.as_str() {
                "cobevt" => Ok(FusionCostModel::cobevt()),
                "where2comm" => Ok(FusionCostModel::where2comm()),
                "coalign" => Ok(FusionCostModel::coalign()),
                other => Err(Error::Validation(format!(
                    "unknown fusion preset '{other}' (expected cobevt, where2comm, or coalign)"
                ))),
            },
            FusionConfig::Custom { flops_full_fusion } => {
                let m = FusionCostModel::custom(*flops_full_fusion);
                m.validate()?;
                Ok(m)
            }
        }
    }
}

/// Sizing of the oracle verification corpora.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub group_instances: u32,
    pub sched_instances: u32,
    pub validity_instances: u32,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            group_instances: 200,
            sched_instances: 200,
            validity_instances: 200,
            seed: 7,
        }
    }
}

/// Scenario shape for the scheduler-order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub n_cavs: u32,
    pub n_background: u32,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            n_cavs: 30,
            n_background: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One experiment: scenario source, radio/fusion/message parameters, sweep
/// axes, and output selection. All fields have working defaults, so partial
/// JSON configs are fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSourceConfig,
    pub channel: ChannelParams,
    pub fusion: FusionConfig,
    pub msg_sizes: crate::paradigms::ControlMessageSizes,
    pub synthetic: SyntheticConfidenceParams,
    pub delta_g: Vec<f64>,
    pub n_cavs: Vec<u32>,
    pub seeds: Vec<u64>,
    pub t_max_ms: f64,
    pub b_full_bits: f64,
    pub b_area_bits: Option<f64>,
    pub slot: SlotMode,
    pub paradigms: Vec<Paradigm>,
    pub edge_compute_flops: f64,
    pub verify: VerifyConfig,
    pub compare: CompareConfig,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    /// The opv2v-like setting: 280 m x 80 m RoI with 10 m x 6 m cells,
    /// 2.16 Mb full feature, 27 Mbps fixed rate, five 8 MHz subchannels,
    /// and a 0.075 gain threshold.
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioSourceConfig::default(),
            channel: ChannelParams::default(),
            fusion: FusionConfig::default(),
            msg_sizes: Default::default(),
            synthetic: Default::default(),
            delta_g: vec![0.075],
            n_cavs: vec![2, 3, 4, 5, 6, 7],
            seeds: vec![1, 2, 3],
            t_max_ms: 100.0,
            b_full_bits: 2.16e6,
            b_area_bits: None,
            slot: SlotMode::PacketDuration,
            paradigms: vec![Paradigm::Lgcp, Paradigm::Vehicle, Paradigm::Edge],
            edge_compute_flops: 2.0e12,
            verify: VerifyConfig::default(),
            compare: CompareConfig::default(),
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Named presets. `opv2v-like` is the default configuration.
    pub fn preset(name: &str) -> Result<ExperimentConfig> {
        match name {
            "opv2v-like" => Ok(ExperimentConfig::default()),
            other => Err(Error::Validation(format!(
                "unknown preset '{other}' (expected opv2v-like)"
            ))),
        }
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Validation("seeds list is empty".into()));
        }
        if self.n_cavs.is_empty() {
            return Err(Error::Validation("n_cavs sweep list is empty".into()));
        }
        if self.delta_g.is_empty() {
            return Err(Error::Validation("delta_g sweep list is empty".into()));
        }
        if self.paradigms.is_empty() {
            return Err(Error::Validation("paradigms list is empty".into()));
        }
        if let Some(&n) = self.n_cavs.iter().find(|&&n| n == 0) {
            return Err(Error::Validation(format!(
                "n_cavs entries must be at least 1, got {n}"
            )));
        }
        if let Some(&d) = self.delta_g.iter().find(|&&d| !(0.0..=1.0).contains(&d)) {
            return Err(Error::Validation(format!(
                "delta_g entries must be in [0, 1], got {d}"
            )));
        }
        if !(self.t_max_ms > 0.0) {
            return Err(Error::Validation(format!(
                "t_max_ms must be positive, got {}",
                self.t_max_ms
            )));
        }
        self.synthetic.validate()?;
        self.fusion.resolve()?;
        self.pipeline()?.validate()
    }

    /// Assembles the per-run pipeline parameters.
    pub fn pipeline(&self) -> Result<PipelineParams> {
        Ok(PipelineParams {
            channel: self.channel.clone(),
            fusion: self.fusion.resolve()?,
            msg_sizes: self.msg_sizes,
            t_max_s: self.t_max_ms / 1000.0,
            b_full_bits: self.b_full_bits,
            b_area_bits: self.b_area_bits,
            slot: self.slot,
            edge_compute_flops: self.edge_compute_flops,
        })
    }

    fn scenario_for(&self, seed: u64, n_cavs: u32) -> Result<Scenario> {
        match &self.scenario {
            ScenarioSourceConfig::Generate { n_background, grid } => {
                Scenario::generate(seed, n_cavs, *n_background, grid)
            }
            ScenarioSourceConfig::File { path } => Scenario::load(path),
        }
    }

    fn confidence_for(&self, scenario: &Scenario, seed: u64) -> Result<ConfidenceMap> {
        match &scenario.confidence_source {
            ConfidenceSource::Synthetic => synthetic_confidence(scenario, &self.synthetic, seed),
            ConfidenceSource::File(path) => load_confidence(path, scenario),
        }
    }
}

// --- generate ---------------------------------------------------------------

/// Writes one scenario file per (seed, n_cavs) pair into `out_dir` and
/// returns the paths in generation order.
pub fn cmd_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    for &seed in &config.seeds {
        for &n in &config.n_cavs {
            let scenario = config.scenario_for(seed, n)?;
            let path = out_dir.join(format!("scenario_s{seed}_n{n}.json"));
            scenario.save(&path)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

// --- run ---------------------------------------------------------------------

/// One sweep-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n_cavs: u32,
    pub delta_g: f64,
    pub paradigm: Paradigm,
    pub volume_bits: f64,
    pub latency_s: f64,
    pub objective: f64,
    pub feasible: bool,
    pub global_confidence: f64,
    pub error: Option<String>,
}

/// One deep per-run report (JSON output format).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub paradigm: Paradigm,
    pub seed: u64,
    pub n_cavs: u32,
    pub delta_g: f64,
    pub volume_bits: f64,
    pub latency_s: f64,
    pub objective: f64,
    pub feasible: bool,
    pub global_confidence: f64,
    pub undelivered_links: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<LatencyBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<crate::assignment::AssignmentExport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<crate::scheduler::ScheduleExport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<RunReport>,
    pub had_errors: bool,
}

/// Runs the configured sweep: one row per
/// (seed x n_cavs x delta_g x paradigm), in that nesting order. Per-row
/// failures are recorded in the row's error column and the run continues.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let pipeline = config.pipeline()?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut had_errors = false;
    for &seed in &config.seeds {
        for &n in &config.n_cavs {
            let prepared = config
                .scenario_for(seed, n)
                .and_then(|s| config.confidence_for(&s, seed).map(|m| (s, m)));
            for &delta_g in &config.delta_g {
                for &paradigm in &config.paradigms {
                    let (row, report) = match &prepared {
                        Ok((scenario, map)) => run_one(
                            scenario, map, seed, n, delta_g, paradigm, &pipeline,
                        ),
                        Err(e) => error_row(seed, n, delta_g, paradigm, e.to_string()),
                    };
                    had_errors |= row.error.is_some();
                    rows.push(row);
                    reports.push(report);
                }
            }
        }
    }
    Ok(RunOutput {
        rows,
        reports,
        had_errors,
    })
}

fn run_one(
    scenario: &Scenario,
    map: &ConfidenceMap,
    seed: u64,
    n: u32,
    delta_g: f64,
    paradigm: Paradigm,
    pipeline: &PipelineParams,
) -> (SweepRow, RunReport) {
    let base_report = |report: crate::paradigms::ParadigmReport| RunReport {
        paradigm,
        seed,
        n_cavs: n,
        delta_g,
        volume_bits: report.volume_bits,
        latency_s: report.latency_s,
        objective: report.objective,
        feasible: report.feasible,
        global_confidence: report.global_confidence,
        undelivered_links: report.undelivered_links,
        breakdown: None,
        assignment: None,
        schedule: None,
        error: None,
    };
    let outcome: Result<RunReport> = match paradigm {
        Paradigm::Lgcp => lgcp_run(scenario, map, delta_g, pipeline).map(|run| {
            let mut r = base_report(run.report);
            r.breakdown = Some(run.breakdown);
            r.assignment = Some(run.assignment.export());
            r.schedule = Some(run.schedule.export());
            r
        }),
        Paradigm::Vehicle => vehicle_based_run(scenario, map, pipeline).map(|r| base_report(r.report)),
        Paradigm::Edge => edge_assisted_run(scenario, map, pipeline).map(|r| base_report(r.report)),
    };
    match outcome {
        Ok(report) => {
            let row = SweepRow {
                seed,
                n_cavs: n,
                delta_g,
                paradigm,
                volume_bits: report.volume_bits,
                latency_s: report.latency_s,
                objective: report.objective,
                feasible: report.feasible,
                global_confidence: report.global_confidence,
                error: None,
            };
            (row, report)
        }
        Err(e) => error_row(seed, n, delta_g, paradigm, e.to_string()),
    }
}

fn error_row(
    seed: u64,
    n: u32,
    delta_g: f64,
    paradigm: Paradigm,
    message: String,
) -> (SweepRow, RunReport) {
    let row = SweepRow {
        seed,
        n_cavs: n,
        delta_g,
        paradigm,
        volume_bits: f64::NAN,
        latency_s: f64::NAN,
        objective: f64::NAN,
        feasible: false,
        global_confidence: f64::NAN,
        error: Some(message.clone()),
    };
    let report = RunReport {
        paradigm,
        seed,
        n_cavs: n,
        delta_g,
        volume_bits: f64::NAN,
        latency_s: f64::NAN,
        objective: f64::NAN,
        feasible: false,
        global_confidence: f64::NAN,
        undelivered_links: 0,
        breakdown: None,
        assignment: None,
        schedule: None,
        error: Some(message),
    };
    (row, report)
}

/// Writes the sweep table as CSV (plot-ready).
pub fn write_rows_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "seed",
        "n_cavs",
        "delta_g",
        "paradigm",
        "volume_bits",
        "latency_s",
        "objective",
        "feasible",
        "global_confidence",
        "error",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.n_cavs.to_string(),
            format_f64(r.delta_g),
            r.paradigm.to_string(),
            format_f64(r.volume_bits),
            format_f64(r.latency_s),
            format_f64(r.objective),
            r.feasible.to_string(),
            format_f64(r.global_confidence),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        let mut buf = ryu_format(v);
        // Keep integers readable: 12.0 not 12.
        if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") {
            buf.push_str(".0");
        }
        buf
    }
}

fn ryu_format(v: f64) -> String {
    // Shortest round-trip formatting via the standard formatter.
    let s = format!("{v}");
    s
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv write: {e}"))
}

/// Writes the deep per-run reports as pretty JSON.
pub fn write_reports_json<W: Write>(reports: &[RunReport], mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, reports)
        .map_err(|e| Error::Parse(format!("json write: {e}")))?;
    writer
        .write_all(b"\n")
        .map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

// --- verify -------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupOracleReport {
    pub instances: u32,
    pub member_matches: u32,
    pub mismatched_instances: Vec<u32>,
    pub leader_gap_max_ratio: f64,
    pub leader_gap_mean_ratio: f64,
    pub leader_gap_over_2x: u32,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleOracleReport {
    pub instances: u32,
    pub dominance_violations: u32,
    pub optimal_matches: u32,
    pub match_rate: f64,
    /// makespan gap (greedy - optimal) -> count
    pub gap_histogram: BTreeMap<u64, u32>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleValidityReport {
    pub instances: u32,
    pub passes: u32,
    pub failures: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub group_oracle: GroupOracleReport,
    pub schedule_oracle: ScheduleOracleReport,
    pub schedule_validity: ScheduleValidityReport,
    pub pass: bool,
}

impl VerifyReport {
    /// One human-readable pass/fail line per verified property.
    pub fn lines(&self) -> Vec<String> {
        let g = &self.group_oracle;
        let s = &self.schedule_oracle;
        let v = &self.schedule_validity;
        vec![
            format!(
                "{} group-members-equivalence: {}/{} instances match the exhaustive oracle",
                pass_str(g.pass),
                g.member_matches,
                g.instances
            ),
            format!(
                "info leader-load-gap: max ratio {:.4}, mean ratio {:.4}, {} instances above 2x",
                g.leader_gap_max_ratio, g.leader_gap_mean_ratio, g.leader_gap_over_2x
            ),
            format!(
                "{} schedule-oracle-dominance: {} violations over {} instances \
                 (optimal on {}, rate {:.3})",
                pass_str(s.pass),
                s.dominance_violations,
                s.instances,
                s.optimal_matches,
                s.match_rate
            ),
            format!(
                "{} schedule-validity-replay: {}/{} schedules pass conflict-freedom, \
                 completeness, and makespan bounds",
                pass_str(v.pass),
                v.passes,
                v.instances
            ),
        ]
    }
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs the exhaustive oracles against the greedy implementations over
/// seeded corpora and replays every produced schedule for validity.
pub fn cmd_verify(config: &ExperimentConfig) -> Result<VerifyReport> {
    config.validate()?;
    let group_oracle = verify_group_oracle(config.verify.group_instances, config.verify.seed)?;
    let schedule_oracle = verify_makespan_oracle(
        config.verify.sched_instances,
        config.verify.seed ^ 0x5eed_5eed,
    )?;
    let schedule_validity =
        verify_pipeline_validity(config, config.verify.validity_instances)?;
    let pass = group_oracle.pass && schedule_oracle.pass && schedule_validity.pass;
    Ok(VerifyReport {
        group_oracle,
        schedule_oracle,
        schedule_validity,
        pass,
    })
}

/// Greedy-vs-exhaustive group equivalence over a seeded corpus of small
/// random confidence maps, with leader max-load gap statistics.
pub fn verify_group_oracle(instances: u32, seed: u64) -> Result<GroupOracleReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut member_matches = 0u32;
    let mut mismatched = Vec::new();
    let mut ratios = Vec::new();
    let mut over_2x = 0u32;
    for i in 0..instances {
        let n_areas = rng.random_range(1..=crate::assignment::ORACLE_MAX_AREAS);
        let n_cavs = rng.random_range(1..=crate::assignment::ORACLE_MAX_CAVS);
        let areas: Vec<AreaId> = (0..n_areas as u32).map(AreaId).collect();
        let cavs: Vec<CavId> = (0..n_cavs as u32).map(CavId).collect();
        let values: Vec<f64> = (0..n_areas * n_cavs)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let map = ConfidenceMap::from_values(areas, cavs, values)?;
        let delta_g = rng.random_range(0.01..0.3);
        let b = 1000.0;
        let greedy = select_groups(&map, delta_g, b)?;
        let oracle = brute_force_groups(&map, delta_g, b, n_cavs)?;
        let members_equal = greedy.groups.len() == oracle.groups.len()
            && greedy
                .groups
                .iter()
                .all(|(area, g)| oracle.groups.get(area).map(|o| &o.members) == Some(&g.members));
        if members_equal {
            member_matches += 1;
        } else {
            mismatched.push(i);
        }
        let greedy_max = greedy.max_load_bits();
        let oracle_max = oracle.max_load_bits();
        if oracle_max > 0.0 {
            let ratio = greedy_max / oracle_max;
            if ratio > 2.0 {
                over_2x += 1;
            }
            ratios.push(ratio);
        }
    }
    let leader_gap_max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let leader_gap_mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let pass = mismatched.is_empty();
    Ok(GroupOracleReport {
        instances,
        member_matches,
        mismatched_instances: mismatched,
        leader_gap_max_ratio,
        leader_gap_mean_ratio,
        leader_gap_over_2x: over_2x,
        pass,
    })
}

/// Priority-scheduler makespan against the exhaustive minimum over a seeded
/// corpus of guard-sized packet sets.
pub fn verify_makespan_oracle(instances: u32, seed: u64) -> Result<ScheduleOracleReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut dominance_violations = 0u32;
    let mut optimal_matches = 0u32;
    let mut gap_histogram: BTreeMap<u64, u32> = BTreeMap::new();
    for _ in 0..instances {
        let n_cavs = rng.random_range(3..=6u32);
        let positions: BTreeMap<CavId, Point> = (0..n_cavs)
            .map(|i| {
                (
                    CavId(i),
                    Point::new(rng.random_range(0.0..300.0), rng.random_range(0.0..100.0)),
                )
            })
            .collect();
        let mut params = ChannelParams::default();
        params.num_subchannels = rng.random_range(2..=3);
        // Zero shadowing keeps every link inside the feasibility range for
        // this geometry, so instances never error out.
        params.shadowing_sigma_db = 0.0;
        let env = RadioEnv::new(&params, &positions, 0);
        let n_packets = rng.random_range(2..=crate::scheduler::ORACLE_MAX_PACKETS);
        let packets: Vec<Packet> = (0..n_packets)
            .map(|k| {
                let src = rng.random_range(0..n_cavs);
                let mut dst = rng.random_range(0..n_cavs);
                while dst == src {
                    dst = rng.random_range(0..n_cavs);
                }
                Packet::new(CavId(src), CavId(dst), AreaId(k as u32), 1000.0)
            })
            .collect();
        let greedy = schedule(&packets, &env, &[], 1.0e-3)?;
        let optimal = brute_force_schedule(&packets, &env)?;
        if greedy.makespan_slots < optimal {
            dominance_violations += 1;
        }
        if greedy.makespan_slots == optimal {
            optimal_matches += 1;
        }
        *gap_histogram
            .entry(greedy.makespan_slots.saturating_sub(optimal))
            .or_insert(0) += 1;
    }
    let match_rate = if instances == 0 {
        1.0
    } else {
        f64::from(optimal_matches) / f64::from(instances)
    };
    let pass = dominance_violations == 0;
    Ok(ScheduleOracleReport {
        instances,
        dominance_violations,
        optimal_matches,
        match_rate,
        gap_histogram,
        pass,
    })
}

/// Full-pipeline schedules of arbitrary size replayed through the
/// independent validity checker.
pub fn verify_pipeline_validity(
    config: &ExperimentConfig,
    instances: u32,
) -> Result<ScheduleValidityReport> {
    let pipeline = config.pipeline()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.verify.seed ^ 0x7a11_d17e);
    let mut passes = 0u32;
    let mut failures = Vec::new();
    for i in 0..instances {
        let seed = rng.random::<u64>();
        let n_cavs = rng.random_range(2..=12u32);
        let n_background = rng.random_range(0..=30u32);
        let outcome = (|| -> Result<()> {
            let scenario = Scenario::generate(seed, n_cavs, n_background, &GridSpec::default())?;
            let map = synthetic_confidence(&scenario, &config.synthetic, seed)?;
            let round = prepare_lgcp(&scenario, &map, 0.075, &pipeline)?;
            let positions = scenario.positions();
            let env = RadioEnv::new(&pipeline.channel, &positions, scenario.seed);
            let sched = schedule(&round.packets, &env, &round.jobs, round.tau_s)?;
            verify_schedule(&sched, &round.packets, &env)
        })();
        match outcome {
            Ok(()) => passes += 1,
            Err(e) => failures.push(format!("instance {i} (seed {seed}): {e}")),
        }
    }
    let pass = failures.is_empty();
    Ok(ScheduleValidityReport {
        instances,
        passes,
        failures,
        pass,
    })
}

// --- compare-sched -------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub seed: u64,
    pub priority_joint_s: f64,
    pub random_joint_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub n_seeds: u32,
    pub n_cavs: u32,
    pub delta_g: f64,
    pub priority_median_s: f64,
    pub priority_mean_s: f64,
    pub random_median_s: f64,
    pub random_mean_s: f64,
    /// (random - priority) / random, on medians and on means.
    pub median_reduction: f64,
    pub mean_reduction: f64,
    pub rows: Vec<CompareRow>,
}

/// Compares the priority scheduler against the random-order baseline on
/// identical instances, reporting median and mean joint latency.
pub fn cmd_compare_sched(config: &ExperimentConfig) -> Result<CompareReport> {
    config.validate()?;
    if config.seeds.len() < 30 {
        return Err(Error::Validation(format!(
            "compare-sched needs at least 30 seeds, got {}",
            config.seeds.len()
        )));
    }
    let pipeline = config.pipeline()?;
    let delta_g = config.delta_g[0];
    let (n_background, grid) = match &config.scenario {
        ScenarioSourceConfig::Generate { n_background, grid } => (*n_background, *grid),
        ScenarioSourceConfig::File { .. } => (config.compare.n_background, GridSpec::default()),
    };
    let n_background = n_background.max(config.compare.n_background);
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let scenario = Scenario::generate(seed, config.compare.n_cavs, n_background, &grid)?;
        let map = synthetic_confidence(&scenario, &config.synthetic, seed)?;
        let round = prepare_lgcp(&scenario, &map, delta_g, &pipeline)?;
        let positions = scenario.positions();
        let env = RadioEnv::new(&pipeline.channel, &positions, scenario.seed);
        let priority = schedule(&round.packets, &env, &round.jobs, round.tau_s)?;
        let random = schedule_random(&round.packets, &env, &round.jobs, round.tau_s, seed)?;
        rows.push(CompareRow {
            seed,
            priority_joint_s: priority.joint_latency_s,
            random_joint_s: random.joint_latency_s,
        });
    }
    let priority: Vec<f64> = rows.iter().map(|r| r.priority_joint_s).collect();
    let random: Vec<f64> = rows.iter().map(|r| r.random_joint_s).collect();
    let priority_median_s = median(&priority);
    let random_median_s = median(&random);
    let priority_mean_s = mean(&priority);
    let random_mean_s = mean(&random);
    Ok(CompareReport {
        n_seeds: rows.len() as u32,
        n_cavs: config.compare.n_cavs,
        delta_g,
        priority_median_s,
        priority_mean_s,
        random_median_s,
        random_mean_s,
        median_reduction: reduction(random_median_s, priority_median_s),
        mean_reduction: reduction(random_mean_s, priority_mean_s),
        rows,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn reduction(baseline: f64, ours: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - ours) / baseline
    }
}

/// Serializes any report as pretty JSON with a trailing newline.
pub fn write_json_report<T: Serialize, W: Write>(report: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)
        .map_err(|e| Error::Parse(format!("json write: {e}")))?;
    writer
        .write_all(b"\n")
        .map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
