//! `cpa` — clustered phased array synthesis from config files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpa_core::baselines::{
    emm_synthesize, epm_enumerate_resumable, EnumerationCheckpoint, EnumerationOptions,
};
use cpa_core::config::ExperimentConfig;
use cpa_core::driver::{pmm_synthesize, SynthesisResult};
use cpa_core::geometry::AngularGrid;
use cpa_core::ipm::IpmProblem;
use cpa_core::partitions::stirling2;
use cpa_core::report::{
    compare_summaries, format_compare_table, summarize, write_compare_csv, write_gamma_curve_csv,
    write_pattern_csv, write_run_bundle, RunPatterns, Summary,
};
use cpa_core::Error;

#[derive(Parser)]
#[command(
    name = "cpa",
    version,
    about = "Clustered phased array synthesis by power-pattern matching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Power-matching synthesis (plus the excitation-matching baseline).
    Synth {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive search over every clustering.
    Enumerate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Tabulate summary files.
    Compare {
        #[arg(required = true, num_args = 2..)]
        summaries: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Failure with its exit status: 2 for configuration problems, 1 otherwise.
struct Failure {
    code: u8,
    error: Error,
}

fn config_err(error: Error) -> Failure {
    Failure { code: 2, error }
}

fn runtime_err(error: Error) -> Failure {
    Failure { code: 1, error }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn setup(path: &Path, common: &Common) -> CliResult<ExperimentConfig> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(config_err(Error::Config(
                "--threads must be at least 1".into(),
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| runtime_err(Error::SynthesisFailed(e.to_string())))?;
    }
    let mut cfg = ExperimentConfig::load(path).map_err(config_err)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&common.out_dir).map_err(|e| runtime_err(Error::io(&common.out_dir, e)))?;
    Ok(cfg)
}

fn synth(config: &Path, common: &Common) -> CliResult<()> {
    let cfg = setup(config, common)?;
    let geometry = cfg.geometry().map_err(config_err)?;
    let reference = cfg.reference_excitations().map_err(config_err)?;
    let pmm_cfg = cfg.pmm_config();
    pmm_cfg.validate(cfg.n).map_err(config_err)?;
    let metric_grid = pmm_cfg.metric_grid().map_err(config_err)?;
    // Weighting needs the inverse transform; surface its preconditions as
    // configuration errors before any work is done.
    IpmProblem::new(&geometry, &reference, metric_grid, cfg.ipm).map_err(config_err)?;

    let pmm = pmm_synthesize(&geometry, &reference, &pmm_cfg).map_err(runtime_err)?;
    let emm = if cfg.compare_emm {
        Some(
            emm_synthesize(&geometry, &reference, &cfg.emm_params(), metric_grid)
                .map_err(runtime_err)?,
        )
    } else {
        None
    };

    let out = &common.out_dir;
    let best_u = pmm
        .best_sample
        .map(|m| pmm_cfg.clustering_grid().unwrap().node(m));
    let pmm_patterns = RunPatterns::new(&geometry, &reference, &pmm.clustering, &pmm.weights)
        .map_err(runtime_err)?;
    let summary = summarize(
        "PMM",
        &cfg,
        &pmm_patterns,
        &pmm,
        best_u,
        emm.as_ref().map(|e| e.gamma),
    )
    .map_err(runtime_err)?;
    write_run_bundle(out, "", &summary, &pmm, &pmm_patterns).map_err(runtime_err)?;
    write_gamma_curve_csv(out.join("gamma_curve.csv"), &pmm).map_err(runtime_err)?;
    write_pattern_csv(out.join("reference_pattern.csv"), &pmm_patterns.reference)
        .map_err(runtime_err)?;

    println!(
        "PMM  Q={} gamma={:.6e} best_u={} degenerate_samples={}",
        cfg.q,
        pmm.gamma,
        best_u.map_or("-".into(), |u| format!("{u:.4}")),
        pmm.degenerate_samples().len()
    );
    if let Some(emm) = emm {
        let patterns = RunPatterns::new(&geometry, &reference, &emm.clustering, &emm.weights)
            .map_err(runtime_err)?;
        let emm_summary =
            summarize("EMM", &cfg, &patterns, &emm, None, None).map_err(runtime_err)?;
        write_run_bundle(out, "emm_", &emm_summary, &emm, &patterns).map_err(runtime_err)?;
        println!("EMM  Q={} gamma={:.6e}", cfg.q, emm.gamma);
        if let Some(r) = summary.matching_improvement_pct {
            println!("R = {r:.2}%");
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn enumerate(config: &Path, common: &Common, resume: Option<&Path>) -> CliResult<()> {
    let cfg = setup(config, common)?;
    let geometry = cfg.geometry().map_err(config_err)?;
    let reference = cfg.reference_excitations().map_err(config_err)?;
    let count = stirling2(cfg.n, cfg.q);
    if count > cfg.enumerate_cap {
        return Err(config_err(Error::EnumerationCap {
            count,
            cap: cfg.enumerate_cap,
        }));
    }
    let grid = AngularGrid::uniform(cfg.metric_samples()).map_err(config_err)?;
    let checkpoint = match resume {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| config_err(Error::io(p, e)))?;
            Some(
                serde_json::from_str::<EnumerationCheckpoint>(&text).map_err(|e| {
                    config_err(Error::Parse {
                        path: p.to_path_buf(),
                        line: e.line(),
                        message: e.to_string(),
                    })
                })?,
            )
        }
        None => None,
    };
    let options = EnumerationOptions {
        cap: cfg.enumerate_cap,
        ..EnumerationOptions::default()
    };
    let cp_path = common.out_dir.join("enumerate_checkpoint.json");
    let mut cp_error = None;
    let result = epm_enumerate_resumable(
        &geometry,
        &reference,
        cfg.q,
        grid,
        cfg.ipm,
        &options,
        checkpoint.as_ref(),
        |cp| {
            let json = serde_json::to_string_pretty(cp).expect("checkpoint serialises");
            if let Err(e) = fs::write(&cp_path, json) {
                cp_error.get_or_insert(Error::io(&cp_path, e));
            }
        },
    )
    .map_err(|e| match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Unsupported(_) => config_err(e),
        e => runtime_err(e),
    })?;
    if let Some(e) = cp_error {
        return Err(runtime_err(e));
    }

    let patterns = RunPatterns::new(&geometry, &reference, &result.clustering, &result.weights)
        .map_err(runtime_err)?;
    let as_synthesis = SynthesisResult {
        clustering: result.clustering.clone(),
        weights: result.weights.clone(),
        gamma: result.gamma,
        best_sample: None,
        per_sample: Vec::new(),
    };
    let summary =
        summarize("EPM", &cfg, &patterns, &as_synthesis, None, None).map_err(runtime_err)?;
    let out = &common.out_dir;
    write_run_bundle(out, "epm_", &summary, &as_synthesis, &patterns).map_err(runtime_err)?;
    println!(
        "EPM  Q={} partitions={} gamma={:.6e} clustering={}",
        cfg.q, result.partition_count, result.gamma, result.clustering
    );
    Ok(())
}

fn compare(paths: &[PathBuf], csv: Option<&Path>) -> CliResult<()> {
    let summaries = paths
        .iter()
        .map(Summary::read)
        .collect::<cpa_core::Result<Vec<_>>>()
        .map_err(config_err)?;
    let rows = compare_summaries(&summaries).map_err(config_err)?;
    print!("{}", format_compare_table(&rows));
    if let Some(p) = csv {
        let mut buf = Vec::new();
        write_compare_csv(&rows, &mut buf).expect("writing to memory");
        fs::write(p, buf).map_err(|e| runtime_err(Error::io(p, e)))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth { config, common } => synth(config, common),
        Command::Enumerate {
            config,
            common,
            resume,
        } => enumerate(config, common, resume.as_deref()),
        Command::Compare { summaries, csv } => compare(summaries, csv.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
