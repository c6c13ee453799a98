//! Configuration-driven experiment runner: resolves an instance and an
//! impairment model from a JSON config, dispatches to a learner (or the
//! exact oracle), and emits a deterministic CSV trace plus a JSON summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{constant_delay, geometric_delay, table_delay, DelayModel, MissingModel};
use crate::harness::RegretTrace;
use crate::learners::{run_alg1, run_alg2, run_alg3, LearnerConfig};
use crate::mdp::{random_mdp, TabularMdp};
use crate::oracle::{gap_bound, make_fig2_instance};
use crate::{Error, Result};

fn default_gamma() -> f64 {
    0.1
}
fn default_c() -> f64 {
    1.0
}
fn default_cap() -> usize {
    2_000_000
}
fn default_replications() -> usize {
    1
}

/// Impairment channel spec as it appears in the config JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ImpairmentConfig {
    Geometric { p: f64 },
    Constant { d: usize },
    Table { pmf: Vec<f64> },
    Missing { lambda: Vec<f64> },
}

impl ImpairmentConfig {
    pub fn is_delay(&self) -> bool {
        !matches!(self, ImpairmentConfig::Missing { .. })
    }

    pub fn delay_model(&self, mdp: &TabularMdp<f64>) -> Result<DelayModel<f64>> {
        let (s, a, h) = (mdp.num_states, mdp.num_actions, mdp.horizon);
        match self {
            ImpairmentConfig::Geometric { p } => geometric_delay(*p, s, a, h),
            ImpairmentConfig::Constant { d } => constant_delay(*d, s, a, h),
            ImpairmentConfig::Table { pmf } => table_delay(pmf, s, a, h),
            ImpairmentConfig::Missing { .. } => {
                Err(Error::Config("missing-observation block used where a delay model is required".into()))
            }
        }
    }

    pub fn missing_model(&self, mdp: &TabularMdp<f64>) -> Result<MissingModel<f64>> {
        match self {
            ImpairmentConfig::Missing { lambda } => {
                if lambda.len() == 1 {
                    MissingModel::constant(lambda[0], mdp.horizon)
                } else if lambda.len() == mdp.horizon {
                    MissingModel::new(lambda.clone())
                } else {
                    Err(Error::Config(format!(
                        "lambda has {} entries; expected 1 or H={}",
                        lambda.len(),
                        mdp.horizon
                    )))
                }
            }
            _ => Err(Error::Config("delay block used where a missing model is required".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
    OracleOnly,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
            Algorithm::OracleOnly => "oracle-only",
        }
    }
}

/// One experiment: instance, impairment, algorithm, and run knobs.
///
/// `instance` is either a builtin name (`fig2-d1`, `random-3x2x4`) or a path
/// to a tabular-MDP JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: String,
    pub impairment: ImpairmentConfig,
    pub algorithm: Algorithm,
    pub episodes: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_cap")]
    pub aug_cap: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

impl ExperimentConfig {
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma={} must lie in (0,1)", self.gamma)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let compatible = match self.algorithm {
            Algorithm::Alg1 => self.impairment.is_delay(),
            Algorithm::Alg2 | Algorithm::Alg3 => !self.impairment.is_delay(),
            Algorithm::OracleOnly => true,
        };
        if !compatible {
            return Err(Error::Config(format!(
                "algorithm {} is incompatible with the configured impairment: \
                 alg1 needs a delay block, alg2/alg3 need a missing block",
                self.algorithm.name()
            )));
        }
        Ok(())
    }

    /// Builds the MDP named by `instance`; random instances are drawn from a
    /// dedicated RNG stream so they do not perturb the simulation streams.
    pub fn resolve_instance(&self) -> Result<TabularMdp<f64>> {
        if let Some(d) = parse_fig2(&self.instance) {
            let (mdp, _, _) = make_fig2_instance(d, d + 2)?;
            return Ok(mdp);
        }
        if let Some((s, a, h)) = parse_random(&self.instance) {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(3);
            return Ok(random_mdp::<f64, _>(s, a, h, &mut rng));
        }
        let path = Path::new(&self.instance);
        if path.exists() {
            let mdp = TabularMdp::<f64>::load_json(path)?;
            return Ok(mdp);
        }
        Err(Error::Config(format!(
            "unknown instance '{}': expected fig2-dN, random-SxAxH, or a readable JSON file",
            self.instance
        )))
    }

    /// Short stable identifier used in output filenames.
    fn instance_tag(&self) -> String {
        let path = Path::new(&self.instance);
        let base = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.instance.clone());
        base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' }).collect()
    }

    fn config_hash(&self) -> String {
        // the output directory is plumbing, not an experiment parameter
        let mut semantic = self.clone();
        semantic.out = None;
        let canonical = serde_json::to_string(&semantic).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_fig2(name: &str) -> Option<usize> {
    name.strip_prefix("fig2-d")?.parse().ok()
}

fn parse_random(name: &str) -> Option<(usize, usize, usize)> {
    let rest = name.strip_prefix("random-")?;
    let mut parts = rest.split('x');
    let s = parts.next()?.parse().ok()?;
    let a = parts.next()?.parse().ok()?;
    let h = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((s, a, h))
}

/// Per-run result summary, serialized next to the CSV trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub final_regret: f64,
    pub slope_first_decile: f64,
    pub slope_last_decile: f64,
    pub optimism_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<serde_json::Value>,
    pub config_hash: String,
    pub seed: u64,
}

fn float12(x: f64) -> String {
    // 12 significant digits, byte-stable
    format!("{x:.11e}")
}

pub fn trace_csv(trace: &RegretTrace, seed: u64) -> String {
    let mut out = String::from(
        "episode,regret_increment,cumulative_regret,optimistic_value,oracle_value,seed\n",
    );
    for k in 0..trace.episodes() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            k,
            float12(trace.increments[k]),
            float12(trace.cumulative[k]),
            float12(trace.optimistic[k]),
            float12(trace.oracle[k]),
            seed
        );
    }
    out
}

fn summary_of(trace: &RegretTrace, hash: String, seed: u64) -> Summary {
    Summary {
        final_regret: trace.final_regret(),
        slope_first_decile: trace.slope_first_decile(),
        slope_last_decile: trace.slope_last_decile(),
        optimism_rate: trace.optimism_rate(),
        gap: None,
        config_hash: hash,
        seed,
    }
}

fn write_outputs(
    out_dir: Option<&Path>,
    base: &str,
    csv: Option<&str>,
    summary: &Summary,
) -> Result<()> {
    let Some(dir) = out_dir else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    if let Some(csv) = csv {
        std::fs::write(dir.join(format!("{base}.csv")), csv)?;
    }
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    std::fs::write(dir.join(format!("{base}_summary.json")), json)?;
    Ok(())
}

fn oracle_summary(cfg: &ExperimentConfig, mdp: &TabularMdp<f64>) -> Result<Summary> {
    let gap_json = if let Some(d) = parse_fig2(&cfg.instance) {
        let (mdp, model_d, model_d1) = make_fig2_instance(d, d + 2)?;
        let rep_d = gap_bound(&mdp, &model_d)?;
        let rep_d1 = gap_bound(&mdp, &model_d1)?;
        serde_json::json!({
            "gap_d": rep_d.gap,
            "gap_d_plus_1": rep_d1.gap,
            "bound_d": rep_d.bound,
            "bound_d_plus_1": rep_d1.bound,
        })
    } else if cfg.impairment.is_delay() {
        let model = cfg.impairment.delay_model(mdp)?;
        serde_json::to_value(gap_bound(mdp, &model)?)?
    } else {
        // missing channel: exact value lost to the impairment
        let model = cfg.impairment.missing_model(mdp)?;
        let (_, table) = crate::mdp::value_iteration(mdp);
        let v_full: f64 = (0..mdp.num_states).map(|s| mdp.initial_dist[s] * table.v[0][s]).sum();
        let aug = crate::aug::build_missing_aug(
            mdp,
            &model,
            crate::aug::BuildOpts { cap: cfg.aug_cap, ..Default::default() },
        )?;
        let (_, vals) = crate::aug::optimal_aug(&aug);
        serde_json::json!({ "v_full": v_full, "v_impaired": vals.initial, "gap": v_full - vals.initial })
    };
    Ok(Summary {
        final_regret: 0.0,
        slope_first_decile: 0.0,
        slope_last_decile: 0.0,
        optimism_rate: 1.0,
        gap: Some(gap_json),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
    })
}

/// Runs the configured experiment (all replications sequentially) and emits
/// one CSV + summary pair per replication into the output directory, when
/// one is configured. Returns the summaries in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Summary>> {
    cfg.validate()?;
    let mdp = cfg.resolve_instance()?;
    mdp.validate()?;
    let tag = cfg.instance_tag();
    let hash = cfg.config_hash();

    if cfg.algorithm == Algorithm::OracleOnly {
        let summary = oracle_summary(cfg, &mdp)?;
        let base = format!("{}_{}_{}", cfg.algorithm.name(), tag, cfg.seed);
        write_outputs(cfg.out.as_deref(), &base, None, &summary)?;
        return Ok(vec![summary]);
    }

    let lcfg = LearnerConfig {
        episodes: cfg.episodes,
        gamma: cfg.gamma,
        c: cfg.c,
        aug_cap: cfg.aug_cap,
    };
    let mut summaries = Vec::with_capacity(cfg.replications);
    for r in 0..cfg.replications {
        let seed = cfg.seed + r as u64;
        let run = match cfg.algorithm {
            Algorithm::Alg1 => run_alg1(&mdp, &cfg.impairment.delay_model(&mdp)?, &lcfg, seed)?,
            Algorithm::Alg2 => run_alg2(&mdp, &cfg.impairment.missing_model(&mdp)?, &lcfg, seed)?,
            Algorithm::Alg3 => run_alg3(&mdp, &cfg.impairment.missing_model(&mdp)?, &lcfg, seed)?,
            Algorithm::OracleOnly => unreachable!(),
        };
        let csv = trace_csv(&run.trace, seed);
        let summary = summary_of(&run.trace, hash.clone(), seed);
        let base = format!("{}_{}_{}", cfg.algorithm.name(), tag, seed);
        write_outputs(cfg.out.as_deref(), &base, Some(&csv), &summary)?;
        summaries.push(summary);
    }
    Ok(summaries)
}
