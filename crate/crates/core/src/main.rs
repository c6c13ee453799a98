//! Command-line front end: config-driven experiment runs, exact gap
//! reports, the delay-dichotomy benchmark table, debug dumps of augmented
//! MDPs, and config validation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use impaired_mdp::aug::{build_delayed_aug, build_missing_aug, AugMdp, BuildOpts};
use impaired_mdp::harness::{run_experiment, ExperimentConfig};
use impaired_mdp::oracle::{gap_bound, make_fig2_instance};
use impaired_mdp::Error;

#[derive(Parser)]
#[command(name = "impaired-mdp", about = "Exact-DP toolkit and online learners for tabular MDPs with delayed or missing observations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and emit CSV traces plus JSON summaries.
    Run {
        /// Path to the experiment config JSON.
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's episode count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's replication count.
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Print the exact gap report for a configured instance as JSON.
    Gap {
        /// Path to an experiment config JSON with a delay impairment.
        config: PathBuf,
    },
    /// Print the delay dichotomy table for d = 1..=max_d.
    BenchProp3 {
        #[arg(long, default_value_t = 3)]
        max_d: usize,
    },
    /// Dump the augmented MDP built for a config's instance as JSON.
    DumpAug {
        config: PathBuf,
    },
    /// Validate a config file and its instance without running anything.
    Validate {
        config: PathBuf,
    },
}

fn apply_overrides(
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    episodes: Option<usize>,
    out: Option<PathBuf>,
    replications: Option<usize>,
) -> ExperimentConfig {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(k) = episodes {
        cfg.episodes = k;
    }
    if let Some(o) = out {
        cfg.out = Some(o);
    }
    if let Some(r) = replications {
        cfg.replications = r;
    }
    cfg
}

#[derive(serde::Serialize)]
struct AugDump<'a> {
    variant: String,
    num_states: usize,
    num_actions: usize,
    real_horizon: usize,
    layers: Vec<Vec<String>>,
    reward: &'a [Vec<Vec<f64>>],
    trans: &'a [Vec<Vec<Vec<(usize, f64)>>>],
    init: &'a [(usize, f64)],
}

fn dump_aug(aug: &AugMdp<f64>) -> String {
    let layers: Vec<Vec<String>> = aug
        .layers
        .iter()
        .map(|layer| layer.states.iter().map(|tau| tau.to_string()).collect())
        .collect();
    let dump = AugDump {
        variant: format!("{:?}", aug.variant),
        num_states: aug.num_states,
        num_actions: aug.num_actions,
        real_horizon: aug.real_horizon,
        layers,
        reward: &aug.reward,
        trans: &aug.trans,
        init: &aug.init,
    };
    serde_json::to_string_pretty(&dump).expect("dump serializes")
}

fn run(cli: Cli) -> impaired_mdp::Result<()> {
    match cli.command {
        Command::Run { config, seed, episodes, out, replications } => {
            let cfg = ExperimentConfig::load_json(&config)?;
            let cfg = apply_overrides(cfg, seed, episodes, out, replications);
            let summaries = run_experiment(&cfg)?;
            for s in &summaries {
                println!("{}", serde_json::to_string(s)?);
            }
            Ok(())
        }
        Command::Gap { config } => {
            let cfg = ExperimentConfig::load_json(&config)?;
            let mdp = cfg.resolve_instance()?;
            let model = cfg.impairment.delay_model(&mdp)?;
            let report = gap_bound(&mdp, &model)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::BenchProp3 { max_d } => {
            println!("{:>3} {:>3} {:>12} {:>12}", "d", "H", "gap_d", "gap_d_plus_1");
            for d in 1..=max_d {
                let (mdp, short, long) = make_fig2_instance(d, d + 2)?;
                let gap_short = gap_bound(&mdp, &short)?.gap;
                let gap_long = gap_bound(&mdp, &long)?.gap;
                println!("{:>3} {:>3} {:>12.9} {:>12.9}", d, d + 2, gap_short, gap_long);
            }
            Ok(())
        }
        Command::DumpAug { config } => {
            let cfg = ExperimentConfig::load_json(&config)?;
            let mdp = cfg.resolve_instance()?;
            let opts = BuildOpts { cap: cfg.aug_cap, ..BuildOpts::default() };
            let aug = if cfg.impairment.is_delay() {
                build_delayed_aug(&mdp, &cfg.impairment.delay_model(&mdp)?, opts)?
            } else {
                build_missing_aug(&mdp, &cfg.impairment.missing_model(&mdp)?, opts)?
            };
            println!("{}", dump_aug(&aug));
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load_json(&config)?;
            let mdp = cfg.resolve_instance()?;
            mdp.validate()?;
            if cfg.impairment.is_delay() {
                cfg.impairment.delay_model(&mdp)?.validate()?;
            } else {
                cfg.impairment.missing_model(&mdp)?;
            }
            println!(
                "ok: instance {} (S={}, A={}, H={}), algorithm {}, {} episodes",
                cfg.instance,
                mdp.num_states,
                mdp.num_actions,
                mdp.horizon,
                cfg.algorithm.name(),
                cfg.episodes
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::CapExceeded { .. } | Error::InstanceTooLarge(_))) => {
            eprintln!("resource cap exceeded: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
