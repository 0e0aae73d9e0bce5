//! Command-line front end: run BER sweeps, evaluate union bounds, list
//! presets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smdet::analysis::{ber_union_bound, data_block_indices};
use smdet::corrmodel::spatial_correlation;
use smdet::detectors::EstimatorKind;
use smdet::harness::{find_preset, load_scenario, presets, run_sweep, write_results, Scenario};
use smdet::smcodec::{build_constellation, enumerate_candidates, DEFAULT_CANDIDATE_CAP};

#[derive(Parser)]
#[command(
    name = "smdet",
    about = "Link-level simulator for spatial-modulation detection under imperfect CSI",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo BER sweep of a scenario.
    Simulate {
        /// Scenario JSON file (omit when using --preset).
        scenario: Option<PathBuf>,
        /// Use a built-in preset instead of a file.
        #[arg(long)]
        preset: Option<String>,
        /// Output CSV path.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Evaluate the analytical union bound on BER per data block.
    Bound {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Monte Carlo draws for the estimate average per candidate pair.
        #[arg(long, default_value_t = 2000)]
        pairwise_mc: usize,
        /// Output CSV path.
        #[arg(long, default_value = "bound.csv")]
        out: PathBuf,
    },
    /// List built-in scenario presets.
    ListPresets,
}

fn resolve_scenario(path: Option<PathBuf>, preset: Option<String>) -> Result<Scenario, String> {
    match (path, preset) {
        (_, Some(name)) => find_preset(&name).map_err(|e| e.to_string()),
        (Some(p), None) => load_scenario(&p).map_err(|e| e.to_string()),
        (None, None) => Err("provide a scenario file or --preset".into()),
    }
}

fn cmd_simulate(
    scenario: Option<PathBuf>,
    preset: Option<String>,
    out: PathBuf,
    workers: usize,
) -> ExitCode {
    let scenario = match resolve_scenario(scenario, preset) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_sweep(&scenario, workers) {
        Ok(curve) => {
            for p in &curve.points {
                if p.hit_max_bits {
                    eprintln!(
                        "note: {} at {} dB stopped at the bit budget with {} errors",
                        p.detector, p.snr_db, p.total.errors
                    );
                }
            }
            if let Err(e) = write_results(&curve, &out) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_bound(scenario: PathBuf, pairwise_mc: usize, out: PathBuf) -> ExitCode {
    let scenario = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if scenario.estimator != EstimatorKind::Mb {
        eprintln!("error: the union bound is computed for the mb estimator");
        return ExitCode::from(1);
    }
    let run = || -> smdet::Result<String> {
        let mut csv = String::from("detector,estimator,snr_db,block_k,ber_bound\n");
        for &snr_db in &scenario.snr_db {
            let cfg = scenario.system_config(snr_db);
            let cons = build_constellation(cfg.mod_kind, cfg.mod_order, cfg.symbol_power)?;
            let set = enumerate_candidates(
                &cfg,
                &cons,
                scenario.candidate_mode,
                DEFAULT_CANDIDATE_CAP,
            )?;
            let truth = spatial_correlation(&scenario.spatial.to_model()?, &cfg)?;
            let ks = data_block_indices(EstimatorKind::Mb, cfg.frame_len);
            let mut per_k = Vec::new();
            for (i, &k) in ks.iter().enumerate() {
                let b = ber_union_bound(
                    k,
                    0,
                    &cfg,
                    &truth.phi,
                    scenario.temporal,
                    &set,
                    &cons,
                    pairwise_mc,
                    scenario.seed.wrapping_add(i as u64),
                )?;
                per_k.push((k, b));
            }
            let avg = smdet::analysis::ber_average(&per_k, EstimatorKind::Mb, cfg.frame_len)?;
            csv.push_str(&format!("ceea-ml,mb,{snr_db},-1,{avg}\n"));
            for (k, b) in per_k {
                csv.push_str(&format!("ceea-ml,mb,{snr_db},{k},{b}\n"));
            }
            eprintln!("bound at {snr_db} dB done");
        }
        Ok(csv)
    };
    match run() {
        Ok(csv) => {
            let tmp = out.with_extension("csv.tmp");
            if let Err(e) = std::fs::write(&tmp, csv).and_then(|_| std::fs::rename(&tmp, &out)) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Simulate {
            scenario,
            preset,
            out,
            workers,
        } => cmd_simulate(scenario, preset, out, workers),
        Command::Bound {
            scenario,
            pairwise_mc,
            out,
        } => cmd_bound(scenario, pairwise_mc, out),
        Command::ListPresets => {
            for p in presets() {
                println!("{:<28} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
    }
}
