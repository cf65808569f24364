//! Local, centralized and federated experiment runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fedcast_core::clean::{clean, CleaningReport};
use fedcast_core::federated::{
    run_rounds_with, ClientHandle, ClientId, FedRoundState, RoundLog, RoundOptions, ServerStrategy, Transport,
};
use fedcast_core::metrics::{evaluate, EvalReport, Task};
use fedcast_core::model::{train_local, ForecastModel, TrainConfig};
use fedcast_core::params::ParamVector;
use fedcast_core::rng::derive_seed;
use fedcast_core::series::{align, chronological_split, make_windows, Split, SupervisedWindowSet, TimeSeries};
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig, Mode};
use crate::csv_io::read_long_csv;
use crate::error::{AppError, AppResult};
use crate::synth::synthesize;

/// Seed streams derived from the master seed.
const INIT_STREAM: u64 = 2;
const SAMPLING_STREAM: u64 = 3;
const TRANSPORT_STREAM: u64 = 4;

/// Cleaned channels of one client.
#[derive(Debug, Clone)]
pub struct ClientData {
    pub id: String,
    pub channels: Vec<TimeSeries>,
    pub cleaning: Vec<(String, CleaningReport)>,
}

/// Loads, aligns and cleans the data of every client.
pub fn load_clients(cfg: &ExperimentConfig) -> AppResult<Vec<ClientData>> {
    let raw: Vec<(String, Vec<TimeSeries>)> = match &cfg.data {
        DataSource::Synthetic { clients, spec } => (0..*clients)
            .map(|i| {
                let spec = crate::synth::SyntheticSpec { seed: derive_seed(spec.seed, i as u64), ..spec.clone() };
                Ok((format!("client{i}"), synthesize(&spec)?))
            })
            .collect::<AppResult<_>>()?,
        DataSource::Csv { clients } => clients
            .iter()
            .map(|c| {
                let series = read_long_csv(&c.path)?;
                let shared_grid = series.windows(2).all(|w| {
                    w[0].start() == w[1].start() && w[0].step() == w[1].step() && w[0].len() == w[1].len()
                });
                let series = match (c.step, shared_grid) {
                    (None, true) => series,
                    (step, _) => {
                        let step = step.unwrap_or_else(|| series.iter().map(TimeSeries::step).max().unwrap_or(3600));
                        align(&series, step).map_err(|e| AppError::core(format!("client `{}`", c.id), e))?
                    }
                };
                Ok((c.id.clone(), series))
            })
            .collect::<AppResult<_>>()?,
    };

    raw.into_iter()
        .map(|(id, series)| {
            let mut cleaning = Vec::new();
            let channels = series
                .into_iter()
                .map(|s| match cfg.cleaning.get(s.channel_id()) {
                    Some(policy) => {
                        let (cleaned, report) = clean(&s, policy)
                            .map_err(|e| AppError::core(format!("client `{id}` channel `{}`", s.channel_id()), e))?;
                        cleaning.push((s.channel_id().to_string(), report));
                        Ok(cleaned)
                    }
                    None => Ok(s),
                })
                .collect::<AppResult<_>>()?;
            Ok(ClientData { id, channels, cleaning })
        })
        .collect()
}

/// Test-set evaluation of one client.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientEval {
    pub mode: Mode,
    pub client: String,
    pub target: String,
    pub task: Task,
    pub compliant: bool,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// `global` or a client id.
    pub owner: String,
    pub target: String,
    pub params: ParamVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub mode: Mode,
    pub evaluations: Vec<ClientEval>,
    #[serde(skip)]
    pub round_logs: Vec<(String, RoundLog)>,
    #[serde(skip)]
    pub checkpoints: Vec<Checkpoint>,
}

/// Splits of every client for one target.
struct TargetData {
    clients: Vec<(String, Split)>,
}

fn prepare(cfg: &ExperimentConfig, data: &[ClientData], target: &str) -> AppResult<TargetData> {
    let spec = cfg.window.spec_for(target);
    let clients = data
        .iter()
        .map(|c| {
            let ctx = |e| AppError::core(format!("client `{}` target `{target}`", c.id), e);
            let ws = make_windows(&c.channels, &spec).map_err(ctx)?;
            let split = chronological_split(&ws, cfg.split.train, cfg.split.val).map_err(ctx)?;
            Ok((c.id.clone(), split))
        })
        .collect::<AppResult<_>>()?;
    Ok(TargetData { clients })
}

/// `rounds` consecutive blocks of local training, each with the seed of
/// the matching federated round.
pub fn train_blocks(
    model: &ForecastModel,
    init: &ParamVector,
    data: &SupervisedWindowSet,
    cfg: &TrainConfig,
    rounds: usize,
) -> fedcast_core::Result<ParamVector> {
    let mut params = init.clone();
    for t in 0..rounds {
        params = train_local(model, &params, data, &cfg.for_round(t))?.0;
    }
    Ok(params)
}

fn base_model(cfg: &ExperimentConfig, split: &Split) -> fedcast_core::Result<ForecastModel> {
    ForecastModel::new(cfg.model.spec.clone(), split.train.shape(), cfg.model.quantiles.clone())
}

/// The model used to evaluate `client` in `mode`: scalers are fitted on the
/// client's own training split, except in centralized mode where they are
/// fitted on the pooled training data.
fn model_for(cfg: &ExperimentConfig, mode: Mode, td: &TargetData, client: usize) -> fedcast_core::Result<ForecastModel> {
    let split = &td.clients[client].1;
    let base = base_model(cfg, split)?;
    match mode {
        Mode::Centralized => {
            let pooled = SupervisedWindowSet::pooled(td.clients.iter().map(|(_, s)| &s.train))?;
            base.fitted(&pooled)
        }
        Mode::Local | Mode::Federated => base.fitted(&split.train),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> AppResult<ExperimentReport> {
    cfg.validate()?;
    let data = load_clients(cfg)?;
    run_mode(cfg, cfg.mode, &data)
}

/// Runs one learning case on already loaded data.
pub fn run_mode(cfg: &ExperimentConfig, mode: Mode, data: &[ClientData]) -> AppResult<ExperimentReport> {
    let mut report = ExperimentReport {
        config_hash: cfg.hash(),
        mode,
        evaluations: Vec::new(),
        round_logs: Vec::new(),
        checkpoints: Vec::new(),
    };
    let train_cfg = cfg.train_config();
    let rounds = cfg.server.rounds;
    for target in &cfg.window.targets {
        let td = prepare(cfg, data, target)?;
        let ctx = |who: &str, e| AppError::core(format!("{} / {who} / target `{target}`", mode.name()), e);
        let models: Vec<ForecastModel> = (0..td.clients.len())
            .map(|i| model_for(cfg, mode, &td, i).map_err(|e| ctx(&td.clients[i].0, e)))
            .collect::<AppResult<_>>()?;
        let init = models[0].init_params(derive_seed(cfg.seed, INIT_STREAM));
        let trainable = models[0].is_trainable();

        // one parameter vector per client, plus the checkpoints to keep
        let params: Vec<ParamVector> = match mode {
            Mode::Local => {
                let mut out = Vec::new();
                for (i, (id, split)) in td.clients.iter().enumerate() {
                    let p = if trainable {
                        train_blocks(&models[i], &init, &split.train, &train_cfg, rounds).map_err(|e| ctx(id, e))?
                    } else {
                        init.clone()
                    };
                    report.checkpoints.push(Checkpoint { owner: id.clone(), target: target.clone(), params: p.clone() });
                    out.push(p);
                }
                out
            }
            Mode::Centralized => {
                let pooled = SupervisedWindowSet::pooled(td.clients.iter().map(|(_, s)| &s.train))
                    .map_err(|e| ctx("pooled", e))?;
                let p = if trainable {
                    train_blocks(&models[0], &init, &pooled, &train_cfg, rounds).map_err(|e| ctx("pooled", e))?
                } else {
                    init.clone()
                };
                report.checkpoints.push(Checkpoint { owner: "global".into(), target: target.clone(), params: p.clone() });
                vec![p; td.clients.len()]
            }
            Mode::Federated => {
                let p = if trainable {
                    let (p, log) = federate(cfg, &td, &models, &init, &train_cfg).map_err(|e| ctx("server", e))?;
                    report.round_logs.push((target.clone(), log));
                    p
                } else {
                    init.clone()
                };
                report.checkpoints.push(Checkpoint { owner: "global".into(), target: target.clone(), params: p.clone() });
                vec![p; td.clients.len()]
            }
        };

        let task = cfg.task_for(target);
        for (i, (id, split)) in td.clients.iter().enumerate() {
            let r = evaluate(&models[i], &params[i], &split.test, cfg.per_step).map_err(|e| ctx(id, e))?;
            report.evaluations.push(ClientEval {
                mode,
                client: id.clone(),
                target: target.clone(),
                task,
                compliant: r.compliance.for_task(task),
                report: r,
            });
        }
    }
    Ok(report)
}

fn federate(
    cfg: &ExperimentConfig,
    td: &TargetData,
    models: &[ForecastModel],
    init: &ParamVector,
    train_cfg: &TrainConfig,
) -> fedcast_core::Result<(ParamVector, RoundLog)> {
    let clients: Vec<ClientHandle> = td
        .clients
        .iter()
        .zip(models)
        .map(|((id, split), model)| {
            ClientHandle::new(ClientId::new(id.clone()), model.clone(), split.train.clone(), Some(split.val.clone()))
        })
        .collect::<fedcast_core::Result<_>>()?;
    let strategy = ServerStrategy::with_params(cfg.server.strategy, cfg.server.params())?;
    let mut state = FedRoundState::new(
        init.clone(),
        strategy,
        cfg.server.sample_fraction,
        derive_seed(cfg.seed, SAMPLING_STREAM),
    )?;
    let transport = if cfg.server.loss_prob > 0.0 {
        Some(Transport::new(cfg.server.loss_prob, derive_seed(cfg.seed, TRANSPORT_STREAM))?)
    } else {
        None
    };
    let started = Instant::now();
    let clock = move || started.elapsed().as_millis() as u64;
    let mut opts = RoundOptions {
        transport,
        clock: cfg.record_timing.then_some(&clock as &dyn Fn() -> u64),
        skip_validation: false,
    };
    run_rounds_with(&mut state, &clients, cfg.server.rounds, train_cfg, &mut opts)
}

/// Evaluates saved parameters on the test split of every client.
pub fn evaluate_checkpoint(
    cfg: &ExperimentConfig,
    mode: Mode,
    target: &str,
    params: &ParamVector,
    only_client: Option<&str>,
) -> AppResult<Vec<ClientEval>> {
    cfg.validate()?;
    let data = load_clients(cfg)?;
    let td = prepare(cfg, &data, target)?;
    let task = cfg.task_for(target);
    let mut out = Vec::new();
    for (i, (id, split)) in td.clients.iter().enumerate() {
        if only_client.is_some_and(|c| c != id) {
            continue;
        }
        let ctx = |e| AppError::core(format!("eval / {id} / target `{target}`"), e);
        let model = model_for(cfg, mode, &td, i).map_err(ctx)?;
        let r = evaluate(&model, params, &split.test, cfg.per_step).map_err(ctx)?;
        out.push(ClientEval {
            mode,
            client: id.clone(),
            target: target.to_string(),
            task,
            compliant: r.compliance.for_task(task),
            report: r,
        });
    }
    if out.is_empty() {
        return Err(AppError::Config(format!("no client matches {}", only_client.unwrap_or("<all>"))));
    }
    Ok(out)
}

// ---- output files ----

fn safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const EVAL_HEADER: [&str; 11] = [
    "config_hash",
    "mode",
    "client",
    "target",
    "task",
    "cv_rmse_pct",
    "nmbe_pct",
    "n_points",
    "compliant",
    "rho_risk",
    "quantile_crossing_rate",
];

pub fn eval_row(hash: &str, e: &ClientEval) -> Vec<String> {
    let rho = e.report.rho_risk.iter().map(|q| format!("{}:{}", q.p, q.rho_risk)).collect::<Vec<_>>().join(";");
    vec![
        hash.to_string(),
        e.mode.name().to_string(),
        e.client.clone(),
        e.target.clone(),
        serde_json::to_value(e.task).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        e.report.cv_rmse_pct.to_string(),
        e.report.nmbe_pct.to_string(),
        e.report.n_points.to_string(),
        e.compliant.to_string(),
        rho,
        opt(e.report.quantile_crossing_rate),
    ]
}

pub fn round_log_csv(hash: &str, log: &RoundLog) -> Vec<u8> {
    let rows: Vec<Vec<String>> = log
        .rows
        .iter()
        .map(|r| {
            vec![
                hash.to_string(),
                r.round.to_string(),
                r.strategy.name().to_string(),
                r.participants.to_string(),
                r.dropped.to_string(),
                opt(r.global_val_cv_rmse),
                opt(r.global_val_nmbe),
                r.wall_ms.to_string(),
            ]
        })
        .collect();
    csv_bytes(
        &["config_hash", "round", "strategy", "participants", "dropped", "global_val_cv_rmse", "global_val_nmbe", "wall_ms"],
        &rows,
    )
}

#[derive(Serialize)]
struct ClientReportFile<'a> {
    config_hash: &'a str,
    #[serde(flatten)]
    eval: &'a ClientEval,
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes every artifact of a run below `dir/<mode>/` and returns the
/// written paths.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> AppResult<Vec<PathBuf>> {
    let base = dir.join(report.mode.name());
    let hash = report.config_hash.as_str();
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, bytes: Vec<u8>| -> AppResult<()> {
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };

    for e in &report.evaluations {
        let path = base.join(safe(&e.target)).join(format!("{}.json", safe(&e.client)));
        emit(path, json_bytes(&ClientReportFile { config_hash: hash, eval: e }))?;
    }
    let rows: Vec<Vec<String>> = report.evaluations.iter().map(|e| eval_row(hash, e)).collect();
    emit(base.join("eval.csv"), csv_bytes(&EVAL_HEADER, &rows))?;
    emit(base.join("report.json"), json_bytes(report))?;
    for (target, log) in &report.round_logs {
        emit(base.join(safe(target)).join("round_log.csv"), round_log_csv(hash, log))?;
    }
    for c in &report.checkpoints {
        emit(base.join(safe(&c.target)).join(format!("{}.fcpv", safe(&c.owner))), c.params.to_bytes())?;
    }
    Ok(written)
}

#[derive(Serialize)]
struct CleaningFile<'a> {
    config_hash: &'a str,
    client: &'a str,
    channel: &'a str,
    #[serde(flatten)]
    report: &'a CleaningReport,
}

/// One JSON cleaning report per cleaned client.
pub fn write_cleaning_reports(dir: &Path, hash: &str, data: &[ClientData]) -> AppResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for c in data.iter().filter(|c| !c.cleaning.is_empty()) {
        let entries: Vec<CleaningFile> = c
            .cleaning
            .iter()
            .map(|(ch, r)| CleaningFile { config_hash: hash, client: &c.id, channel: ch, report: r })
            .collect();
        let path = dir.join("cleaning").join(format!("{}.json", safe(&c.id)));
        write_file(&path, &json_bytes(&entries))?;
        written.push(path);
    }
    Ok(written)
}

/// Runs all three modes on the same data and writes their artifacts plus
/// `comparison.csv`, one row per (mode, client, target).
pub fn run_compare(cfg: &ExperimentConfig, dir: &Path) -> AppResult<Vec<ExperimentReport>> {
    cfg.validate()?;
    let data = load_clients(cfg)?;
    write_cleaning_reports(dir, &cfg.hash(), &data)?;
    let reports = Mode::ALL
        .iter()
        .map(|&m| run_mode(cfg, m, &data))
        .collect::<AppResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for r in &reports {
        write_report(dir, r)?;
        rows.extend(r.evaluations.iter().map(|e| eval_row(&r.config_hash, e)));
    }
    write_file(&dir.join("comparison.csv"), &csv_bytes(&EVAL_HEADER, &rows))?;
    Ok(reports)
}

/// Runs the configured mode and writes its artifacts.
pub fn run_and_write(cfg: &ExperimentConfig, dir: &Path) -> AppResult<ExperimentReport> {
    cfg.validate()?;
    let data = load_clients(cfg)?;
    write_cleaning_reports(dir, &cfg.hash(), &data)?;
    let report = run_mode(cfg, cfg.mode, &data)?;
    write_report(dir, &report)?;
    Ok(report)
}

/// Prints a short table to `out`.
pub fn summarize(out: &mut impl Write, reports: &[ExperimentReport]) -> std::io::Result<()> {
    writeln!(out, "{:<12} {:<16} {:<16} {:>10} {:>10} {:>9}", "mode", "client", "target", "cv_rmse%", "nmbe%", "compliant")?;
    for r in reports {
        for e in &r.evaluations {
            writeln!(
                out,
                "{:<12} {:<16} {:<16} {:>10.3} {:>10.3} {:>9}",
                e.mode.name(),
                e.client,
                e.target,
                e.report.cv_rmse_pct,
                e.report.nmbe_pct,
                e.compliant
            )?;
        }
    }
    Ok(())
}
