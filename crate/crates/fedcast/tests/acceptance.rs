//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr, bypassing the test harness capture.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use fedcast::config::{DataSource, ExperimentConfig, Mode, ModelConfig, ServerConfig, SplitConfig, WindowConfig};
use fedcast::experiment::{load_clients, run_compare, run_mode, train_blocks};
use fedcast::synth::{synthesize, ChannelKind, ChannelSpec, SyntheticSpec};
use fedcast_core::climate::{en15757_decompose, lim1, mixing_ratio, ClimateSample, DecompositionOptions};
use fedcast_core::federated::{
    run_rounds, ClientHandle, ClientId, ClientUpdate, Delivery, FedRoundState, ServerStrategy, StrategyKind,
    Transport,
};
use fedcast_core::metrics::{compliance, cv_rmse, evaluate, nmbe, pool_forecasts, rho_risk, Task};
use fedcast_core::model::{train_local, ForecastModel, LossKind, ModelSpec, QuantileLevels, TrainConfig};
use fedcast_core::params::{LayoutTag, ParamVector};
use fedcast_core::rng::stream_rng;
use fedcast_core::series::{chronological_split, make_windows, InputShape, Sample, SupervisedWindowSet, TimeSeries, WindowSpec};
use rand::Rng;

fn verdict(name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] {name}: {detail}");
    assert!(ok, "{name}: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---- formula oracles ----

/// Straightforward re-derivations, written independently of the library.
mod oracle {
    pub fn mean(v: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        s / v.len() as f64
    }

    pub fn cv_rmse(p: &[f64], y: &[f64]) -> f64 {
        let mut sq = 0.0;
        for i in 0..y.len() {
            let e = y[i] - p[i];
            sq += e * e;
        }
        (sq / y.len() as f64).sqrt() / mean(y) * 100.0
    }

    pub fn nmbe(p: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..y.len() {
            s += p[i] - y[i];
        }
        s / y.len() as f64 / mean(y) * 100.0
    }

    pub fn rho(p: &[f64], y: &[f64], q: f64) -> f64 {
        let (mut loss, mut total) = (0.0, 0.0);
        for i in 0..y.len() {
            let r = y[i] - p[i];
            loss += (q * r).max((q - 1.0) * r);
            total += y[i];
        }
        2.0 * loss / total
    }
}

#[test]
fn metric_oracles() {
    let started = Instant::now();
    let mut rng = stream_rng(2024, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..500.0)).collect();
        let p: Vec<f64> = y.iter().map(|v| v + rng.random_range(-50.0..50.0)).collect();
        let q = rng.random_range(0.01..0.99);
        worst = worst
            .max(rel(cv_rmse(&p, &y).unwrap(), oracle::cv_rmse(&p, &y)))
            .max(rel(nmbe(&p, &y).unwrap(), oracle::nmbe(&p, &y)))
            .max(rel(rho_risk(&p, &y, q).unwrap(), oracle::rho(&p, &y, q)));
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        "metric oracles",
        worst < 1e-12 && secs < 5.0,
        &format!("max rel err {worst:.2e} over 1000 pairs in {secs:.2}s"),
    );
}

#[test]
fn ashrae_gate() {
    use Task::*;
    let cases = [
        (30.0, 0.0, WholeBuildingEnergy, true),
        (30.0, 10.0, WholeBuildingEnergy, true),
        (30.0, -10.0, WholeBuildingEnergy, true),
        (30.000001, 0.0, WholeBuildingEnergy, false),
        (10.0, 10.000001, WholeBuildingEnergy, false),
        (10.0, -10.000001, WholeBuildingEnergy, false),
        (32.2, 0.0, WholeBuildingEnergy, false),
        (20.0, 5.0, IndoorTRh, true),
        (20.0, -5.0, IndoorTRh, true),
        (20.000001, 0.0, IndoorTRh, false),
        (5.0, 5.000001, IndoorTRh, false),
        (25.0, 0.0, IndoorTRh, false),
        (30.0, -10.0, Co2, true),
        (30.5, 0.0, Co2, false),
    ];
    let wrong: Vec<_> = cases.iter().filter(|(cv, b, t, want)| compliance(*cv, *b, *t) != *want).collect();
    verdict(
        "ASHRAE gate",
        wrong.is_empty(),
        &format!("{} boundary cases, misclassified: {wrong:?}", cases.len()),
    );
}

// ---- gradients ----

fn random_set(rng: &mut impl Rng, shape: InputShape, n: usize) -> SupervisedWindowSet {
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| 10.0 + rng.random_range(-3.0..3.0)).collect() };
    let samples = (0..n)
        .map(|i| Sample {
            origin: i as i64 * 3600,
            y_past: draw(shape.lookback),
            xb_past: draw(shape.lookback * shape.past_covariates),
            xf_future: draw(shape.horizon * shape.future_covariates),
            y_future: draw(shape.horizon),
        })
        .collect();
    SupervisedWindowSet::new(shape, 3600, samples).unwrap()
}

/// `None` when a kink or tie lies within the finite-difference step.
fn gradient_error(seed: u64, dense: bool, quantile: bool) -> Option<f64> {
    const H: f64 = 1e-5;
    let mut rng = stream_rng(seed, 99);
    let shape = InputShape {
        lookback: rng.random_range(1..8),
        horizon: rng.random_range(1..4),
        past_covariates: rng.random_range(0..3),
        future_covariates: rng.random_range(0..2),
    };
    let spec = if dense {
        ModelSpec::DenseNet { hidden: (0..rng.random_range(1..3)).map(|_| rng.random_range(2..7)).collect() }
    } else {
        ModelSpec::Linear
    };
    let levels = quantile.then(|| QuantileLevels::new(vec![0.1, 0.5, 0.9]).unwrap());
    let loss = if quantile { LossKind::Quantile } else { LossKind::Squared };
    let n = rng.random_range(1..8);
    let data = random_set(&mut rng, shape, n);
    let model = ForecastModel::new(spec, shape, levels).unwrap().fitted(&data).unwrap();
    let theta: Vec<f64> = (0..model.param_len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let params = ParamVector::new(model.layout().clone(), theta.clone()).unwrap();
    let batch: Vec<&Sample> = data.samples().iter().collect();
    if quantile {
        for s in &batch {
            let pred = model.predict(&params, s).unwrap();
            for (i, y) in s.y_future.iter().enumerate() {
                if pred[3 * i..3 * i + 3].iter().any(|p| (p - y).abs() < 1e-3) {
                    return None;
                }
            }
        }
    }
    let f = |v: &[f64]| model.batch_loss(&ParamVector::new(model.layout().clone(), v.to_vec()).unwrap(), &batch, loss).unwrap();
    let analytic = model.gradient(&params, &batch, loss).unwrap();
    let f0 = f(&theta);
    let (mut num2, mut diff2, mut ana2) = (0.0, 0.0, 0.0);
    for (i, a) in analytic.values().iter().enumerate() {
        let mut v = theta.clone();
        v[i] = theta[i] + H;
        let fp = f(&v);
        v[i] = theta[i] - H;
        let fm = f(&v);
        let central = (fp - fm) / (2.0 * H);
        if ((fp - f0) / H - (f0 - fm) / H).abs() > 1e-3 * central.abs().max(1.0) {
            return None;
        }
        num2 += central * central;
        ana2 += a * a;
        diff2 += (a - central) * (a - central);
    }
    let denom = num2.max(ana2).sqrt();
    Some(if denom == 0.0 { 0.0 } else { diff2.sqrt() / denom })
}

#[test]
fn gradient_checks() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (dense, quantile) in [(false, false), (false, true), (true, false), (true, true)] {
        let (mut checked, mut seed) = (0, 1000);
        while checked < 100 && seed < 3000 {
            seed += 1;
            match gradient_error(seed, dense, quantile) {
                Some(e) => {
                    worst = worst.max(e);
                    checked += 1;
                }
                None => skipped += 1,
            }
        }
        assert_eq!(checked, 100);
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        "gradient checks",
        worst < 1e-5 && secs < 30.0,
        &format!("400 configurations (linear/dense x squared/quantile), max rel err {worst:.2e}, {skipped} resampled at kinks, {secs:.1}s"),
    );
}

// ---- federated laws ----

fn ar_windows(seed: u64, len: usize, w: usize, h: usize) -> SupervisedWindowSet {
    let mut rng = stream_rng(seed, 0);
    let mut e = 0.0;
    let v: Vec<f64> = (0..len)
        .map(|i| {
            e = 0.8 * e + rng.random_range(-1.0..1.0);
            50.0 + 5.0 * (std::f64::consts::TAU * i as f64 / 24.0).sin() + e
        })
        .collect();
    let ts = TimeSeries::from_values("y", 0, 3600, &v).unwrap();
    make_windows(&[ts], &WindowSpec::new(w, h, "y")).unwrap()
}

#[test]
fn fedavg_reduction_law() {
    let data = ar_windows(1, 500, 24, 3);
    let cfg = TrainConfig { eta_c: 0.002, epochs: 2, batch_size: 16, seed: 4, loss: LossKind::Squared };
    let mut worst: f64 = 0.0;
    for spec in [ModelSpec::Linear, ModelSpec::DenseNet { hidden: vec![8] }] {
        let model = ForecastModel::new(spec, data.shape(), None).unwrap().fitted(&data).unwrap();
        let init = model.init_params(3);
        let client = ClientHandle::new(ClientId::new("solo"), model.clone(), data.clone(), None).unwrap();
        let mut state = FedRoundState::new(init.clone(), ServerStrategy::new(StrategyKind::FedAvg), 1.0, 0).unwrap();
        let rounds = 8;
        let (fed, _) = run_rounds(&mut state, &[client], rounds, &cfg).unwrap();
        let local = train_blocks(&model, &init, &data, &cfg, rounds).unwrap();
        let diff = fed.values().iter().zip(local.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    verdict("FedAvg reduction law", worst < 1e-12, &format!("1 client, C=1, eta_s=1, T=8: max abs diff {worst:.2e}"));
}

#[test]
fn fedavg_weighted_average_identity() {
    let sets = [ar_windows(10, 260, 12, 2), ar_windows(11, 610, 12, 2), ar_windows(12, 140, 12, 2)];
    let model = ForecastModel::new(ModelSpec::DenseNet { hidden: vec![6] }, sets[0].shape(), None)
        .unwrap()
        .fitted(&sets[0])
        .unwrap();
    let cfg = TrainConfig { eta_c: 0.003, epochs: 3, batch_size: 8, seed: 9, loss: LossKind::Squared };
    let init = model.init_params(1);
    let n: usize = sets.iter().map(SupervisedWindowSet::len).sum();
    let mut expected = vec![0.0; model.param_len()];
    for s in &sets {
        let (theta_i, _) = train_local(&model, &init, s, &cfg.for_round(0)).unwrap();
        for (e, v) in expected.iter_mut().zip(theta_i.values()) {
            *e += s.len() as f64 / n as f64 * v;
        }
    }
    let clients: Vec<ClientHandle> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| ClientHandle::new(ClientId::new(format!("c{i}")), model.clone(), s.clone(), None).unwrap())
        .collect();
    let mut state = FedRoundState::new(init, ServerStrategy::new(StrategyKind::FedAvg), 1.0, 0).unwrap();
    let (global, _) = run_rounds(&mut state, &clients, 1, &cfg).unwrap();
    let diff = global.values().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdict(
        "FedAvg weighted-average identity",
        diff < 1e-12,
        &format!("sizes {:?}, E=3: max abs diff {diff:.2e}", sets.iter().map(|s| s.len()).collect::<Vec<_>>()),
    );
}

fn update(id: &str, delta: Vec<f64>, size: usize) -> ClientUpdate {
    ClientUpdate { client_id: ClientId::new(id), delta: ParamVector::new(LayoutTag::new("t"), delta).unwrap(), size }
}

#[test]
fn fedadam_single_round() {
    let mut s = ServerStrategy::new(StrategyKind::FedAdam);
    let theta = ParamVector::zeros(LayoutTag::new("t"), 3);
    let next = s.aggregate(&[update("a", vec![1.0; 3], 5)], &theta).unwrap();
    let want = 0.1 * 0.1 / (0.1 + 1e-3);
    let err = next.values().iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
    verdict("FedAdam single-round step", err <= 1e-15, &format!("step {:?}, expected {want}", next.values()));
}

#[test]
fn fedmedian_robustness() {
    let benign = [
        vec![0.3, -1.2, 0.05, 2.0],
        vec![0.1, -0.8, 0.07, 1.5],
        vec![0.4, -1.0, 0.02, 2.5],
        vec![0.2, -0.9, 0.09, 1.0],
    ];
    let mut updates: Vec<ClientUpdate> =
        benign.iter().enumerate().map(|(i, d)| update(&format!("b{i}"), d.clone(), 100)).collect();
    updates.push(update("z", vec![1e6, -1e6, 1e6, -1e6], 100));
    let theta = ParamVector::zeros(LayoutTag::new("t"), 4);
    let next = ServerStrategy::new(StrategyKind::FedMedian).aggregate(&updates, &theta).unwrap();
    let ok = next.values().iter().enumerate().all(|(j, v)| {
        let col: Vec<f64> = benign.iter().map(|d| d[j]).collect();
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo..=hi).contains(v)
    });
    verdict("FedMedian robustness", ok, &format!("applied step {:?} with one 1e6 outlier", next.values()));
}

// ---- experiments on synthetic data ----

fn energy_spec(days: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        daily_amp: 20.0,
        noise_sd: 4.0,
        ar_coef: 0.8,
        ..SyntheticSpec::new(days, seed, vec![ChannelSpec { id: "energy".into(), kind: ChannelKind::Energy, mean: None }])
    }
}

fn experiment(spec: SyntheticSpec, clients: usize, lookback: usize, horizon: usize, model: ModelSpec) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::Federated,
        seed: 17,
        output_dir: "unused".into(),
        data: DataSource::Synthetic { clients, spec },
        window: WindowConfig {
            lookback,
            horizon,
            targets: vec!["energy".into()],
            past_covariates: vec![],
            future_covariates: vec![],
        },
        model: ModelConfig { spec: model, quantiles: None },
        train: TrainConfig { eta_c: 3e-6, epochs: 1, batch_size: 32, seed: 0, loss: LossKind::Squared },
        server: ServerConfig::default(),
        split: SplitConfig::default(),
        cleaning: BTreeMap::new(),
        tasks: BTreeMap::new(),
        per_step: false,
        record_timing: false,
    }
}

#[test]
fn federated_close_to_centralized() {
    let started = Instant::now();
    let cfg = experiment(energy_spec(60, 5), 3, 168, 6, ModelSpec::Linear);
    let data = load_clients(&cfg).unwrap();
    let central = run_mode(&cfg, Mode::Centralized, &data).unwrap();
    let fed = run_mode(&cfg, Mode::Federated, &data).unwrap();
    let naive_cfg = ExperimentConfig { model: ModelConfig { spec: ModelSpec::SeasonalNaive { period: 24 }, quantiles: None }, ..cfg.clone() };
    let naive = run_mode(&naive_cfg, Mode::Local, &data).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for ((c, f), n) in central.evaluations.iter().zip(&fed.evaluations).zip(&naive.evaluations) {
        let (c, f, n) = (c.report.cv_rmse_pct, f.report.cv_rmse_pct, n.report.cv_rmse_pct);
        let gap = (f - c).abs() / c;
        ok &= gap <= 0.15 && f < n && c < n;
        detail.push(format!("central {c:.2}% fed {f:.2}% (rel {gap:.3}) SN-24 {n:.2}%"));
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 180.0;
    verdict("federated close to centralized", ok, &format!("{}; {secs:.1}s", detail.join(" | ")));
}

fn naive_cv(series: &TimeSeries, period: usize, lookback: usize) -> f64 {
    let ws = make_windows(std::slice::from_ref(series), &WindowSpec::new(lookback, 6, series.channel_id())).unwrap();
    let model = ForecastModel::new(ModelSpec::SeasonalNaive { period }, ws.shape(), None).unwrap();
    evaluate(&model, &model.init_params(0), &ws, false).unwrap().cv_rmse_pct
}

#[test]
fn seasonal_naive_exactness() {
    let daily = SyntheticSpec { daily_amp: 25.0, ..energy_spec(20, 3) };
    let daily = SyntheticSpec { noise_sd: 0.0, ar_coef: 0.0, ..daily };
    let s = &synthesize(&daily).unwrap()[0];
    let sn24 = naive_cv(s, 24, 168);
    let weekly = SyntheticSpec { daily_amp: 0.0, weekly_amp: 15.0, noise_sd: 1.0, ar_coef: 0.0, ..energy_spec(40, 8) };
    let w = &synthesize(&weekly).unwrap()[0];
    let (w24, w168) = (naive_cv(w, 24, 168), naive_cv(w, 168, 168));
    verdict(
        "seasonal naive exactness",
        sn24 < 1e-9 && w168 < w24,
        &format!("SN-24 on a pure daily cycle {sn24:.2e}%; weekly-only series SN-168 {w168:.3}% vs SN-24 {w24:.3}%"),
    );
}

#[test]
fn quantile_coverage() {
    let spec = SyntheticSpec {
        daily_amp: 20.0,
        noise_sd: 6.0,
        ar_coef: 0.5,
        heteroskedastic: 0.6,
        ..SyntheticSpec::new(150, 21, vec![ChannelSpec { id: "energy".into(), kind: ChannelKind::Energy, mean: None }])
    };
    let series = synthesize(&spec).unwrap();
    let ws = make_windows(&series, &WindowSpec::new(48, 6, "energy")).unwrap();
    let split = chronological_split(&ws, 0.7, 0.1).unwrap();
    let levels = QuantileLevels::new(vec![0.1, 0.5, 0.9]).unwrap();
    let model = ForecastModel::new(ModelSpec::Linear, ws.shape(), Some(levels)).unwrap().fitted(&split.train).unwrap();
    let cfg = TrainConfig { eta_c: 2e-3, epochs: 1, batch_size: 32, seed: 1, loss: LossKind::Quantile };
    let params = train_blocks(&model, &model.init_params(0), &split.train, &cfg, 40).unwrap();
    let pooled = pool_forecasts(&model, &params, &split.test).unwrap();
    let inside = pooled
        .truth
        .iter()
        .enumerate()
        .filter(|&(i, y)| pooled.quantiles[0][i] <= *y && *y <= pooled.quantiles[2][i])
        .count();
    let coverage = inside as f64 / pooled.truth.len() as f64;
    let median = &pooled.quantiles[1];
    let identity = pooled.truth.iter().zip(median).map(|(y, p)| (p - y).abs()).sum::<f64>() / pooled.truth.iter().sum::<f64>();
    let rho = rho_risk(median, &pooled.truth, 0.5).unwrap();
    let id_err = (rho - identity).abs();
    verdict(
        "quantile coverage",
        (0.70..=0.90).contains(&coverage) && id_err < 1e-12,
        &format!("[0.1, 0.9] band covers {coverage:.3} of {} test points; rho-risk(0.5) identity err {id_err:.1e}", pooled.truth.len()),
    );
}

// ---- climate ----

#[test]
fn climate_formulas() {
    // reference values evaluated at 40 significant digits
    let checks = [
        (mixing_ratio(&ClimateSample::new(20.0, 50.0).with_pressure(1013.0)).unwrap(), 7.241465268838114),
        (lim1(20.0), 76.942_724_827_057_3),
        (lim1(0.0), 98.500_596_355_714_7),
    ];
    let worst = checks.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let at30 = lim1(30.0);
    let dry = mixing_ratio(&ClimateSample::new(20.0, 0.0)).unwrap();
    verdict(
        "climate formulas",
        worst < 1e-2 && at30 == 76.0 && dry == 0.0,
        &format!("max abs err {worst:.2e}; lim1(30) = {at30}; MR at RH 0 = {dry}"),
    );
}

#[test]
fn en15757_decomposition() {
    let opts = DecompositionOptions::default();
    let flat = TimeSeries::from_values("rh", 0, 3600, &vec![55.0; 1500]).unwrap();
    let d = en15757_decompose(&flat, &opts).unwrap();
    let flat_ok = d.short_term_dev.values().iter().flatten().all(|v| *v == 0.0)
        && d.short_term_dev.values().iter().flatten().count() == 1500 - 720;
    let (m, a) = (62.0, 9.0);
    let v: Vec<f64> = (0..2200).map(|i| m + a * (std::f64::consts::TAU * i as f64 / 24.0).sin()).collect();
    let s = TimeSeries::from_values("rh", 0, 3600, &v).unwrap();
    let d = en15757_decompose(&s, &opts).unwrap();
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for i in 0..v.len() {
        if let (Some(c), Some(dev)) = (d.seasonal_cma.values()[i], d.short_term_dev.values()[i]) {
            worst = worst.max((c - m).abs());
            exact &= c + dev == v[i];
        }
    }
    verdict(
        "EN 15757 decomposition",
        flat_ok && worst < 1e-6 * a && exact,
        &format!("constant series all-zero deviations: {flat_ok}; sinusoid max |CMA - M| = {worst:.2e} (A = {a}); exact reconstruction: {exact}"),
    );
}

// ---- determinism ----

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn determinism() {
    let mut cfg = experiment(energy_spec(20, 9), 4, 24, 3, ModelSpec::DenseNet { hidden: vec![8] });
    cfg.server = ServerConfig {
        strategy: StrategyKind::FedYogi,
        sample_fraction: 0.5,
        rounds: 4,
        loss_prob: 0.2,
        ..ServerConfig::default()
    };
    cfg.model.quantiles = Some(QuantileLevels::new(vec![0.1, 0.5, 0.9]).unwrap());
    cfg.cleaning.insert("energy".into(), fedcast_core::clean::CleaningPolicy::new(0.0, 1000.0));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_compare(&cfg, a.path()).unwrap();
    run_compare(&cfg, b.path()).unwrap();
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    let same = sa == sb;
    verdict(
        "determinism",
        same && sa.len() > 10,
        &format!("{} report files from two runs with master seed {}, byte-identical: {same}", sa.len(), cfg.seed),
    );
}

// ---- transport ----

#[test]
fn transport_loss_rate() {
    let mut t = Transport::new(0.02, 31).unwrap();
    let dropped = (0..10_000).filter(|i| matches!(t.transmit(*i), Delivery::Dropped)).count();
    let rate = dropped as f64 / 10_000.0;
    verdict(
        "transport loss",
        (0.015..=0.025).contains(&rate),
        &format!("{dropped} of 10000 deliveries dropped at loss_prob 0.02 (rate {rate:.4})"),
    );
}
