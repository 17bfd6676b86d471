//! Multi-restart fitting driver and its on-disk outputs.
//!
//! Restart `r` draws its initial model from a ChaCha8 stream seeded with
//! `seed + r`, so results do not depend on scheduling. Restarts run on a
//! rayon pool whose size `LATENTEM_THREADS` can cap.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use latentem::io::{read_csv_path, read_edge_list_path};
use latentem::network::prepare_network_table;
use latentem::{
    argmax_rows, fit_network_co, mh_membership_recovery, CoLatentModel, ContingencyTable, FitTrace,
    LatentMarkovSummary, LatentModel, NetworkCoModel, NetworkCoOptions, NetworkLatentModel, Variant,
};
use log::{info, warn};
use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Command, InputFormat, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::model::{rows, Model, SavedModel};
use crate::text::ingest_text;

pub const THREADS_ENV: &str = "LATENTEM_THREADS";

/// Reads the input named by the configuration.
pub fn load_table(config: &RunConfig) -> Result<ContingencyTable> {
    let path = &config.input_path;
    let ctx = || path.display().to_string();
    match config.input_format {
        InputFormat::Csv => read_csv_path(path).context(ctx),
        InputFormat::Edgelist => read_edge_list_path(path).context(ctx),
        InputFormat::Text => ingest_text(path, config.alphabet)?.to_table(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restart {
    pub model: Model,
    pub trace: FitTrace,
    pub mh_deviation_per_iteration: Option<Vec<f64>>,
    pub markov: Option<LatentMarkovSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `None` when unbounded.
    pub nonneg: Option<f64>,
    pub psd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Markov {
    pub w: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub mh_deviation: f64,
    pub multiple_stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub rho: Vec<f64>,
    /// Group-major memberships.
    pub z: Vec<Vec<f64>>,
    pub residual: f64,
    pub non_unique: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mutual_information: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub is_diffusive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub is_symmetric: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mh_deviation: Option<f64>,
    /// Bounds of the symmetrized table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bounds: Option<Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov: Option<Markov>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mh_deviation_per_iteration: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mh_recovery: Option<Recovery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mh_recovery_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignments {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<IndexMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<IndexMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<IndexMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub command: String,
    pub input: String,
    pub groups: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub seed: u64,
    pub restarts: usize,
    pub best_restart: usize,
    pub best_kl: f64,
    pub per_restart_kl: Vec<f64>,
    pub per_restart_iterations: Vec<usize>,
    pub per_restart_converged: Vec<bool>,
    pub hard_assignments: Assignments,
    pub diagnostics: Diagnostics,
    pub best_model: SavedModel,
}

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: FitReport,
    pub restarts: Vec<Restart>,
}

impl RunOutput {
    pub fn best(&self) -> &Restart {
        &self.restarts[self.report.best_restart]
    }
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn run_restarts<F>(config: &RunConfig, fit_one: F) -> Result<Vec<Restart>>
where
    F: Fn(&mut ChaCha8Rng) -> latentem::Result<Restart> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()?).build()?;
    pool.install(|| {
        (0..config.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
                let restart = fit_one(&mut rng).context(|| format!("restart {r}"))?;
                info!("restart {r}: K = {:e} after {} cycles", restart.trace.final_kl(), restart.trace.iterations_run);
                Ok(restart)
            })
            .collect()
    })
}

fn label_map(labels: impl Iterator<Item = String>, groups: &[usize]) -> IndexMap<String, usize> {
    let mut map = IndexMap::new();
    for (label, &g) in labels.zip(groups) {
        if map.insert(label.clone(), g).is_some() {
            warn!("duplicate label {label:?} in hard assignments");
        }
    }
    map
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn markov(summary: &LatentMarkovSummary) -> Markov {
    Markov {
        w: rows(&summary.w),
        pi: summary.pi.to_vec(),
        mh_deviation: summary.mh_deviation,
        multiple_stationary: summary.multiple_stationary,
    }
}

fn table_diagnostics(f: &ContingencyTable) -> Diagnostics {
    let mut d = Diagnostics {
        mutual_information: f.mutual_information(),
        ..Default::default()
    };
    if let Ok(report) = f.spectral_report() {
        d.min_eigenvalue = Some(report.min_eigenvalue);
        d.is_diffusive = Some(report.is_diffusive);
        d.is_symmetric = Some(report.is_symmetric);
        d.mh_deviation = Some(report.mh_deviation);
    }
    if let Ok(bounds) = f.symmetrize().and_then(|s| s.lambda_bounds()) {
        d.lambda_bounds = Some(Bounds {
            nonneg: finite(bounds.nonneg),
            psd: finite(bounds.psd),
        });
    }
    d
}

/// Fits `config.restarts` models and assembles the report. Nothing is
/// written to disk.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.command == Command::Inspect {
        return Err(CliError::InvalidConfig("inspect does not fit a model".into()));
    }
    let f = load_table(config)?;
    let mut diagnostics = table_diagnostics(&f);
    let opts = config.fit_options();
    let m = config.m;
    let input = config.input_path.display().to_string();

    let restarts = match config.command {
        Command::FitLatent => run_restarts(config, |rng| {
            let (model, trace) = LatentModel::random_init(&f, m, rng)?.fit(&f, &opts)?;
            Ok(Restart {
                model: Model::Latent(model),
                trace,
                mh_deviation_per_iteration: None,
                markov: None,
            })
        })?,
        Command::FitColatent => {
            let m2 = config.m2();
            run_restarts(config, |rng| {
                let (model, trace) = CoLatentModel::random_init(&f, m, m2, rng)?.fit(&f, &opts)?;
                let markov = if m == m2 { Some(model.markov_summary()?) } else { None };
                Ok(Restart {
                    model: Model::CoLatent(model),
                    trace,
                    mh_deviation_per_iteration: None,
                    markov,
                })
            })?
        }
        Command::FitNetwork => {
            let table = prepare_network_table(&f, Some(config.lambda)).context(|| input.clone())?;
            diagnostics.lambda = Some(config.lambda);
            run_restarts(config, |rng| {
                let (model, trace) = NetworkLatentModel::random_init(&table, m, rng)?.fit(&table, &opts)?;
                Ok(Restart {
                    model: Model::Network(model),
                    trace,
                    mh_deviation_per_iteration: None,
                    markov: None,
                })
            })?
        }
        Command::FitNetworkCo => {
            let table = if config.variant == Variant::Symmetric && !f.is_symmetric() {
                warn!("symmetric variant on an asymmetric table; fitting (F + F')/2");
                f.symmetrize().context(|| input.clone())?
            } else {
                f.clone()
            };
            let co_opts = NetworkCoOptions {
                fit: opts,
                mh_projection_every: config.mh_projection_every,
            };
            run_restarts(config, |rng| {
                let init = NetworkCoModel::random_init(&table, m, config.variant, rng)?;
                let fit = fit_network_co(&table, &init, &co_opts)?;
                Ok(Restart {
                    model: Model::NetworkCo(fit.model),
                    trace: fit.trace,
                    mh_deviation_per_iteration: Some(fit.mh_deviation_per_iteration),
                    markov: Some(fit.summary),
                })
            })?
        }
        Command::Inspect => unreachable!(),
    };

    let per_restart_kl: Vec<f64> = restarts.iter().map(|r| r.trace.final_kl()).collect();
    let mut best_restart = 0;
    for (r, &k) in per_restart_kl.iter().enumerate() {
        if k < per_restart_kl[best_restart] {
            best_restart = r;
        }
    }
    let best = &restarts[best_restart];

    let row_labels = || (0..f.nrows()).map(|i| f.row_label(i));
    let col_labels = || (0..f.ncols()).map(|k| f.col_label(k));
    let hard_assignments = match &best.model {
        Model::Latent(model) => Assignments {
            rows: Some(label_map(row_labels(), &argmax_rows(model.row_memberships().view()))),
            columns: Some(label_map(col_labels(), &argmax_rows(model.col_memberships().view()))),
            vertices: None,
        },
        Model::CoLatent(model) => Assignments {
            rows: Some(label_map(row_labels(), &argmax_rows(model.row_memberships().view()))),
            columns: Some(label_map(col_labels(), &argmax_rows(model.col_memberships().view()))),
            vertices: None,
        },
        Model::Network(model) => Assignments {
            vertices: Some(label_map(row_labels(), &model.hard_assignment())),
            ..Default::default()
        },
        Model::NetworkCo(model) => Assignments {
            vertices: Some(label_map(row_labels(), &model.hard_assignment())),
            ..Default::default()
        },
    };

    diagnostics.markov = best.markov.as_ref().map(markov);
    diagnostics.mh_deviation_per_iteration = best.mh_deviation_per_iteration.clone();
    if let Model::NetworkCo(model) = &best.model {
        if model.variant() == Variant::MarginallyHomogeneous {
            let weights: Array1<f64> = (&f.row_margins() + &f.col_margins()) * 0.5;
            match mh_membership_recovery(model.a(), &weights) {
                Ok(rec) => {
                    diagnostics.mh_recovery = Some(Recovery {
                        rho: rec.rho.to_vec(),
                        z: rec.z.columns().into_iter().map(|c| c.to_vec()).collect(),
                        residual: rec.residual,
                        non_unique: rec.non_unique,
                    })
                }
                Err(e) => {
                    warn!("membership recovery failed: {e}");
                    diagnostics.mh_recovery_error = Some(e.to_string());
                }
            }
        }
    }

    let groups = match config.command {
        Command::FitColatent => vec![m, config.m2()],
        _ => vec![m],
    };
    let variant = (config.command == Command::FitNetworkCo).then(|| config.variant.to_string());
    let report = FitReport {
        command: config.command.name().to_string(),
        input,
        groups,
        variant,
        seed: config.seed,
        restarts: config.restarts,
        best_restart,
        best_kl: per_restart_kl[best_restart],
        per_restart_iterations: restarts.iter().map(|r| r.trace.iterations_run).collect(),
        per_restart_converged: restarts.iter().map(|r| r.trace.converged).collect(),
        per_restart_kl,
        hard_assignments,
        diagnostics,
        best_model: best.model.to_saved(),
    };
    Ok(RunOutput { report, restarts })
}

pub fn trace_path(dir: &Path, restart: usize) -> PathBuf {
    dir.join("traces").join(format!("restart_{restart:03}.jsonl"))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(contents).map_err(io)
}

/// Writes `model.json`, `report.json` and one JSONL trace per restart.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<()> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).map_err(|source| CliError::Io { path: traces, source })?;
    let mut model = output.best().model.to_json()?;
    model.push('\n');
    write_file(&dir.join("model.json"), model.as_bytes())?;
    let mut report = serde_json::to_string_pretty(&output.report)?;
    report.push('\n');
    write_file(&dir.join("report.json"), report.as_bytes())?;
    for (r, restart) in output.restarts.iter().enumerate() {
        let mut lines = String::new();
        for (t, kl) in restart.trace.kl_per_iteration.iter().enumerate() {
            lines.push_str(&serde_json::json!({ "iter": t, "kl": kl }).to_string());
            lines.push('\n');
        }
        write_file(&trace_path(dir, r), lines.as_bytes())?;
    }
    Ok(())
}

/// Fits and writes the outputs to `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<FitReport> {
    let output = execute(config)?;
    write_outputs(&output, &config.output_dir)?;
    Ok(output.report)
}
