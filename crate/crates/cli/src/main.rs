//! `lgcp` — scenario generation, sweep runs, oracle verification, and
//! scheduler comparison for the collaborative-perception simulator.
//!
//! Exit codes: 0 on success, 1 on validation/usage errors, 2 when per-row
//! failures or failed verification properties are present in an otherwise
//! completed run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lgcp_core::experiment::{
    cmd_compare_sched, cmd_generate, cmd_run, cmd_verify, write_json_report, write_reports_json,
    write_rows_csv, ExperimentConfig, OutputFormat,
};
use lgcp_core::paradigms::Paradigm;
use lgcp_core::Error;

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 1;
const EXIT_ROW_FAILURES: u8 = 2;

#[derive(Parser)]
#[command(name = "lgcp", version, about = "Local-to-global collaborative perception simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one scenario JSON file per (seed, n_cavs) pair.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory for scenario files.
        #[arg(long, default_value = "scenarios")]
        out: PathBuf,
    },
    /// Run the configured sweep and emit the results table.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exhaustive oracles against the greedy implementations.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file for the JSON report; stdout lines only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the priority scheduler against the random-order baseline.
    #[command(name = "compare-sched")]
    CompareSched {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file for the JSON report; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; missing fields take preset defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset (currently: opv2v-like).
    #[arg(long)]
    preset: Option<String>,
    /// Seeds: comma-separated values and a..b ranges, e.g. "1,2,10..20".
    #[arg(long)]
    seeds: Option<String>,
    /// CAV-count sweep list, e.g. "2,3,4,5,6,7".
    #[arg(long = "n-cavs")]
    n_cavs: Option<String>,
    /// Gain-threshold sweep list, e.g. "0.05,0.075,0.1".
    #[arg(long = "delta-g")]
    delta_g: Option<String>,
    /// Paradigms to run, e.g. "lgcp,vehicle,edge".
    #[arg(long)]
    paradigms: Option<String>,
    /// Output format for tabular results.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Generate { common, out } => {
            let config = build_config(&common)?;
            let paths = cmd_generate(&config, &out)?;
            println!("wrote {} scenario files to {}", paths.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Run { common, out } => {
            let config = build_config(&common)?;
            let output = cmd_run(&config)?;
            match config.format {
                OutputFormat::Csv => {
                    with_writer(out.as_deref(), |w| write_rows_csv(&output.rows, w))?
                }
                OutputFormat::Json => {
                    with_writer(out.as_deref(), |w| write_reports_json(&output.reports, w))?
                }
            }
            if output.had_errors {
                eprintln!("run completed with per-row failures (see the error column)");
                Ok(EXIT_ROW_FAILURES)
            } else {
                Ok(EXIT_OK)
            }
        }
        Command::Verify { common, out } => {
            let config = build_config(&common)?;
            if config.format == OutputFormat::Csv && common.format.is_some() {
                return Err(Error::Validation(
                    "verify emits a JSON report; csv is not supported".into(),
                ));
            }
            let report = cmd_verify(&config)?;
            for line in report.lines() {
                println!("{line}");
            }
            if let Some(path) = out {
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_json_report(&report, BufWriter::new(file))?;
            }
            if report.pass {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_ROW_FAILURES)
            }
        }
        Command::CompareSched { common, out } => {
            let config = build_config(&common)?;
            let report = cmd_compare_sched(&config)?;
            println!(
                "priority median {:.6} s vs random median {:.6} s over {} seeds \
                 (median reduction {:.2}%)",
                report.priority_median_s,
                report.random_median_s,
                report.n_seeds,
                report.median_reduction * 100.0
            );
            with_writer(out.as_deref(), |w| write_json_report(&report, w))?;
            Ok(EXIT_OK)
        }
    }
}

/// Resolution order: preset defaults, then the config file, then flags.
fn build_config(common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    if let Some(name) = &common.preset {
        // Fails on unknown preset names even when a config file is present.
        ExperimentConfig::preset(name)?;
    }
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &common.seeds {
        config.seeds = parse_u64_list(seeds)?;
    }
    if let Some(n_cavs) = &common.n_cavs {
        config.n_cavs = parse_u64_list(n_cavs)?
            .into_iter()
            .map(|v| v as u32)
            .collect();
    }
    if let Some(delta_g) = &common.delta_g {
        config.delta_g = parse_f64_list(delta_g)?;
    }
    if let Some(paradigms) = &common.paradigms {
        config.paradigms = parse_paradigms(paradigms)?;
    }
    if let Some(format) = common.format {
        config.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    config.validate()?;
    Ok(config)
}

/// Comma-separated values with `a..b` half-open ranges: "1,2,10..13" is
/// [1, 2, 10, 11, 12].
fn parse_u64_list(text: &str) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = parse_num(a)?;
            let b: u64 = parse_num(b)?;
            if a >= b {
                return Err(Error::Validation(format!("empty range '{part}'")));
            }
            out.extend(a..b);
        } else {
            out.push(parse_num(part)?);
        }
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(text: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    text.trim()
        .parse()
        .map_err(|e| Error::Validation(format!("bad number '{text}': {e}")))
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_num)
        .collect()
}

fn parse_paradigms(text: &str) -> Result<Vec<Paradigm>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p {
            "lgcp" => Ok(Paradigm::Lgcp),
            "vehicle" => Ok(Paradigm::Vehicle),
            "edge" => Ok(Paradigm::Edge),
            other => Err(Error::Validation(format!(
                "unknown paradigm '{other}' (expected lgcp, vehicle, or edge)"
            ))),
        })
        .collect()
}

fn with_writer<F>(path: Option<&std::path::Path>, f: F) -> Result<(), Error>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        assert_eq!(parse_u64_list("1,2,10..13").unwrap(), vec![1, 2, 10, 11, 12]);
        assert_eq!(parse_f64_list("0.05, 0.1").unwrap(), vec![0.05, 0.1]);
        assert!(parse_u64_list("5..5").is_err());
        assert!(parse_f64_list("abc").is_err());
    }

    #[test]
    fn parses_paradigm_names() {
        assert_eq!(
            parse_paradigms("lgcp,edge").unwrap(),
            vec![Paradigm::Lgcp, Paradigm::Edge]
        );
        assert!(parse_paradigms("lgcp,unknown").is_err());
    }

    #[test]
    fn flag_overrides_apply() {
        let common = CommonArgs {
            config: None,
            preset: Some("opv2v-like".into()),
            seeds: Some("0..4".into()),
            n_cavs: Some("5".into()),
            delta_g: Some("0.1".into()),
            paradigms: Some("lgcp".into()),
            format: Some(FormatArg::Json),
        };
        let config = build_config(&common).unwrap();
        assert_eq!(config.seeds, vec![0, 1, 2, 3]);
        assert_eq!(config.n_cavs, vec![5]);
        assert_eq!(config.delta_g, vec![0.1]);
        assert_eq!(config.paradigms, vec![Paradigm::Lgcp]);
        assert_eq!(config.format, OutputFormat::Json);
    }

    #[test]
    fn unknown_preset_rejected() {
        let common = CommonArgs {
            config: None,
            preset: Some("nuscenes".into()),
            seeds: None,
            n_cavs: None,
            delta_g: None,
            paradigms: None,
            format: None,
        };
        assert!(build_config(&common).is_err());
    }

    #[test]
    fn end_to_end_run_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("rows.csv");
        let cli = Cli::try_parse_from([
            "lgcp", "run", "--seeds", "1", "--n-cavs", "3", "--delta-g", "0.075", "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        let code = dispatch(cli).unwrap();
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("seed,n_cavs,delta_g,paradigm"));
        // Three paradigms -> header + 3 rows.
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn end_to_end_generate_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("scen");
        let cli = Cli::try_parse_from([
            "lgcp",
            "generate",
            "--seeds",
            "1,2",
            "--n-cavs",
            "4",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(dispatch(cli).unwrap(), EXIT_OK);
        assert_eq!(std::fs::read_dir(&out_dir).unwrap().count(), 2);

        let report = dir.path().join("verify.json");
        let config = dir.path().join("verify-config.json");
        std::fs::write(
            &config,
            r#"{"verify": {"group_instances": 10, "sched_instances": 10, "validity_instances": 5, "seed": 3}}"#,
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "lgcp",
            "verify",
            "--config",
            config.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(dispatch(cli).unwrap(), EXIT_OK);
        assert!(report.exists());
    }
}
