use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use lacboost::boost::{adaboost_train, train as train_booster, BoostMode, OffsetFlag, StopReason, THETA_GRID};
use lacboost::cascade::{
    evaluate_cascade_roc, train_cascade as run_cascade, Background, CascadeStop, DatasetNegatives, ImageNegatives,
    NegativeSource, SyntheticNegatives,
};
use lacboost::io::fmt_scalar;
use lacboost::mpm::{covariance_diagonality, normality_qq, worst_case_gamma, DistributionFamily};
use lacboost::qp::{eg_solve, reference_solve};
use lacboost::weak::{FeatureSource, HaarFeatureSet, WeakClassifier, WeakLearnerPool};
use lacboost::{CascadeConfig, CascadeModel, Dataset, EgConfig, ModelFile, SimplexQp, StrongClassifier};
use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::usage;
use crate::input::{ensure_file, ensure_writable, load_csv, load_images, responses, LoadedModel};
use crate::Finished;

/// Provenance block embedded in every artifact.
fn meta(command: &str, config: &Value, seed: Option<u64>) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
    })
}

/// Sub-seeds for the pool, the negative source and the feature subset, all
/// drawn from one generator seeded by `--seed`.
struct Seeds(ChaCha8Rng);

impl Seeds {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self) -> u64 {
        self.0.next_u64()
    }
}

/// CSV whose first line is `# ` followed by the provenance JSON.
fn write_csv(path: &Path, meta: &Value, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut s = format!("# {meta}\n{header}\n");
    for r in rows {
        writeln!(s, "{}", r.join(","))?;
    }
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

pub fn gen_toy(name: &str, a: &GenToyArgs, cfg: Value) -> anyhow::Result<Finished> {
    let out = a.out()?;
    ensure_writable(out)?;
    let data: Dataset = lacboost::toy::generate(a.kind.into(), a.n_pos, a.n_neg, a.seed)?;
    let comment = serde_json::to_string(&meta(name, &cfg, Some(a.seed)))?;
    data.save_csv(out, Some(&comment))?;
    Ok(Finished::ok())
}

/// The metrics `train` embeds and `eval` reports for a single classifier.
fn strong_metrics(clf: &StrongClassifier, data: &Dataset) -> Value {
    let (d, f) = clf.rates(data);
    json!({
        "detection_rate": d,
        "fp_rate": f,
        "error": clf.training_error(data),
        "examples": data.m(),
    })
}

/// Detection and false-positive rate of the cascade cut after each exit.
struct CascadeRates {
    per_exit: Vec<(f64, f64)>,
    error: f64,
}

fn cascade_rates(model: &CascadeModel, data: &Dataset) -> CascadeRates {
    let n = model.n_exits();
    let mut tp = vec![0usize; n];
    let mut fp = vec![0usize; n];
    for i in 0..data.m() {
        let trace = model.classify_traced(data.row(i));
        let passed = trace.rejected_at.unwrap_or(n);
        let counts = if i < data.m1() { &mut tp } else { &mut fp };
        counts[..passed].iter_mut().for_each(|c| *c += 1);
    }
    let (m1, m2) = (data.m1() as f64, data.m2() as f64);
    let per_exit = tp.iter().zip(&fp).map(|(&t, &f)| (t as f64 / m1, f as f64 / m2)).collect();
    let wrong = data.m1() - tp.last().copied().unwrap_or(data.m1()) + fp.last().copied().unwrap_or(0);
    CascadeRates { per_exit, error: wrong as f64 / data.m() as f64 }
}

fn cascade_metrics(model: &CascadeModel, data: &Dataset) -> (Value, CascadeRates) {
    let rates = cascade_rates(model, data);
    let (d, f) = rates.per_exit.last().copied().unwrap_or((1.0, 1.0));
    let v = json!({
        "detection_rate": d,
        "fp_rate": f,
        "error": rates.error,
        "examples": data.m(),
    });
    (v, rates)
}

pub fn train(name: &str, a: &TrainArgs, cfg: Value) -> anyhow::Result<Finished> {
    let (path, out) = (a.data()?, a.out()?);
    ensure_file(path)?;
    ensure_writable(out)?;
    let data = load_csv(path)?;
    let mut seeds = Seeds::new(a.seed);
    let mut pool = WeakLearnerPool::tabular(data.n_features(), a.boost.pool_fraction, seeds.next())?;
    let mut flags = Vec::new();

    let (classifier, mode_name, report) = match a.mode {
        ModeArg::Adaboost => {
            let out = adaboost_train(&data, &mut pool, a.boost.n_max)?;
            let report = json!({
                "alphas": out.alphas,
                "weighted_errors": out.weighted_errors,
                "training_errors": out.training_errors,
                "stopped_early": out.stopped_early,
            });
            (out.classifier, "AdaBoost", report)
        }
        ModeArg::Lacboost | ModeArg::Fisherboost => {
            let mode = if a.mode == ModeArg::Lacboost { BoostMode::LacBoost } else { BoostMode::FisherBoost };
            let booster = a.boost.booster(mode, a.offset_target())?;
            let out = train_booster(&data, &mut pool, &booster)?;
            if out.report.truncated {
                flags.push("weak-learner pool exhausted before convergence".to_string());
            }
            if out.report.offset_flag != OffsetFlag::Ok {
                flags.push(format!("offset target: {:?}", out.report.offset_flag));
            }
            if out.report.stop_reason != StopReason::Converged {
                info!("stopped with {:?}", out.report.stop_reason);
            }
            (out.classifier, mode.name(), serde_json::to_value(&out.report)?)
        }
    };

    let metrics = strong_metrics(&classifier, &data);
    let mut metadata = meta(name, &cfg, Some(a.seed));
    metadata["metrics"] = metrics.clone();
    metadata["report"] = report;
    metadata["flags"] = json!(flags);
    ModelFile::new(&classifier, mode_name, a.boost.theta, metadata).save(out)?;
    print_json(&json!({ "model": out, "weak_classifiers": classifier.len(), "metrics": metrics, "flags": flags }))?;
    Ok(Finished { flags })
}

fn negative_source(data: &Dataset, kind: NegativesArg, seed: u64) -> anyhow::Result<Box<dyn NegativeSource<f64>>> {
    let rows: Vec<Vec<f64>> = data.negatives().map(<[f64]>::to_vec).collect();
    if kind == NegativesArg::Data {
        return Ok(Box::new(DatasetNegatives::new(rows)?));
    }
    let d = data.n_features();
    let column = |j: usize| rows.iter().map(move |r| r[j]);
    let background = match kind {
        NegativesArg::Gaussian => {
            let n = rows.len() as f64;
            let mean: Vec<f64> = (0..d).map(|j| column(j).sum::<f64>() / n).collect();
            let std = (0..d)
                .map(|j| (column(j).map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
                .collect();
            Background::Gaussian { mean, std }
        }
        _ => Background::Uniform {
            low: (0..d).map(|j| column(j).fold(f64::INFINITY, f64::min)).collect(),
            high: (0..d).map(|j| column(j).fold(f64::NEG_INFINITY, f64::max)).collect(),
        },
    };
    Ok(Box::new(SyntheticNegatives::new(background, seed)?))
}

fn haar_subset(width: usize, height: usize, keep: usize, seed: u64) -> anyhow::Result<HaarFeatureSet> {
    let full = HaarFeatureSet::full(width, height);
    if keep == 0 || keep >= full.len() {
        return Ok(full);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, full.len(), keep).into_vec();
    idx.sort_unstable();
    Ok(HaarFeatureSet::new(width, height, idx.into_iter().map(|i| full.features[i]).collect())?)
}

fn cascade_flags(config: &CascadeConfig, report: &lacboost::cascade::CascadeReport<f64>) -> Vec<String> {
    let mut flags: Vec<String> = report
        .nodes
        .iter()
        .filter(|n| !n.met_targets)
        .map(|n| format!("node {} missed its targets (d = {}, f = {})", n.node, n.detection_rate, n.fp_rate))
        .collect();
    if report.stop != CascadeStop::TargetReached {
        flags.push(format!(
            "false-positive target {} not reached ({:?}, f = {})",
            config.targets.f_target, report.stop, report.fp_rate
        ));
    }
    flags
}

pub fn train_cascade(name: &str, a: &TrainCascadeArgs, cfg: Value) -> anyhow::Result<Finished> {
    let out = a.out()?;
    ensure_writable(out)?;
    if let Some(p) = &a.node_report {
        ensure_writable(p)?;
    }
    let c = &a.cascade;
    let config = c.cascade_config(c.boost.theta)?;
    let mut seeds = Seeds::new(c.seed);
    let (pool_seed, neg_seed, haar_seed) = (seeds.next(), seeds.next(), seeds.next());

    let mut haar = None;
    let mut train_data = None;
    let (positives, mut negatives, mut pool) = match (&a.data, &a.positives, &a.backgrounds) {
        (Some(path), None, None) => {
            let data = load_csv(path)?;
            let positives: Vec<Vec<f64>> = data.positives().map(<[f64]>::to_vec).collect();
            let negatives = negative_source(&data, c.negatives, neg_seed)?;
            let pool = WeakLearnerPool::tabular(data.n_features(), c.boost.pool_fraction, pool_seed)?;
            train_data = Some(data);
            (positives, negatives, pool)
        }
        (None, Some(pos_dir), Some(bg_dir)) => {
            let windows = load_images(pos_dir)?;
            let first = windows.first().ok_or_else(|| usage(format!("no windows in {}", pos_dir.display())))?;
            let set = haar_subset(first.width, first.height, a.haar_features, haar_seed)?;
            info!("{} Haar features on {}x{} windows", set.len(), set.window_width, set.window_height);
            let positives = responses(&windows, &set)?;
            let backgrounds = load_images(bg_dir)?;
            let negatives: Box<dyn NegativeSource<f64>> = Box::new(ImageNegatives::new(&backgrounds, set.clone(), neg_seed)?);
            let pool = WeakLearnerPool::new(FeatureSource::Haar(set.clone()), c.boost.pool_fraction, pool_seed)?;
            haar = Some(set);
            (positives, negatives, pool)
        }
        _ => return Err(usage("give --data, or --positives together with --backgrounds")),
    };

    let outcome = run_cascade(&positives, negatives.as_mut(), &mut pool, &config)?;
    let mut model = outcome.model;
    let report = outcome.report;
    let flags = cascade_flags(&config, &report);

    let mut metadata = meta(name, &cfg, Some(c.seed));
    metadata["report"] = serde_json::to_value(&report)?;
    metadata["haar"] = serde_json::to_value(&haar)?;
    if let Some(data) = &train_data {
        metadata["metrics"] = cascade_metrics(&model, data).0;
    }
    metadata["flags"] = json!(flags);
    model.metadata = metadata.clone();
    model.save(out)?;

    if let Some(p) = &a.node_report {
        let rows: Vec<Vec<String>> = report
            .nodes
            .iter()
            .map(|n| {
                vec![
                    n.node.to_string(),
                    n.mode.name().to_string(),
                    n.n_total.to_string(),
                    n.n_new.to_string(),
                    n.negatives.to_string(),
                    fmt_scalar(n.detection_rate),
                    fmt_scalar(n.fp_rate),
                    fmt_scalar(n.b),
                    n.met_targets.to_string(),
                ]
            })
            .collect();
        let header = "node,mode,n_total,n_new,negatives,detection_rate,fp_rate,b,met_targets";
        write_csv(p, &meta(name, &cfg, Some(c.seed)), header, &rows)?;
    }
    print_json(&json!({
        "model": out,
        "exits": model.n_exits(),
        "weak_classifiers": model.classifiers.len(),
        "stop": report.stop,
        "detection_rate": report.detection_rate,
        "fp_rate": report.fp_rate,
        "metrics": metadata.get("metrics"),
        "flags": flags,
    }))?;
    Ok(Finished { flags })
}

fn load_model_and_data(model: &Path, input: &InputArgs) -> anyhow::Result<(LoadedModel, Dataset)> {
    let model = LoadedModel::load(model)?;
    let data = input.load(model.haar()?.as_ref())?;
    model.check_features(&data)?;
    Ok((model, data))
}

pub fn eval(name: &str, a: &EvalArgs, cfg: Value) -> anyhow::Result<Finished> {
    if let Some(out) = &a.out {
        ensure_writable(out)?;
    }
    let (model, data) = load_model_and_data(a.model()?, &a.input)?;
    let (cascade_summary, rates) = cascade_metrics(&model.cascade, &data);
    let metrics = if model.is_cascade { cascade_summary } else { strong_metrics(&model.cascade.exit_classifier(0)?, &data) };
    let nodes: Vec<Value> = rates
        .per_exit
        .iter()
        .zip(&model.cascade.exits)
        .enumerate()
        .map(|(t, (&(d, f), e))| json!({ "node": t + 1, "n_t": e.n_t, "detection_rate": d, "fp_rate": f }))
        .collect();
    if let Some(out) = &a.out {
        let rows: Vec<Vec<String>> = rates
            .per_exit
            .iter()
            .zip(&model.cascade.exits)
            .enumerate()
            .map(|(t, (&(d, f), e))| vec![(t + 1).to_string(), e.n_t.to_string(), fmt_scalar(d), fmt_scalar(f)])
            .collect();
        write_csv(out, &meta(name, &cfg, None), "node,n_t,detection_rate,fp_rate", &rows)?;
    }
    let mut summary = meta(name, &cfg, None);
    summary["metrics"] = metrics;
    summary["nodes"] = json!(nodes);
    print_json(&summary)?;
    Ok(Finished::ok())
}

/// Every distinct final-exit score among examples that pass the earlier
/// exits, plus one offset above them all.
fn breakpoints(model: &CascadeModel, data: &Dataset) -> Vec<f64> {
    let last = model.n_exits() - 1;
    let mut scores: Vec<f64> = data
        .rows()
        .filter(|row| model.classify_traced(row).rejected_at.is_none_or(|t| t >= last))
        .map(|row| model.exit_score(last, row))
        .collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    match scores.last() {
        Some(&top) => {
            scores.push(top + 1.0);
            scores
        }
        None => vec![model.exits[last].b],
    }
}

pub fn roc(name: &str, a: &RocArgs, cfg: Value) -> anyhow::Result<Finished> {
    let out = a.out()?;
    ensure_writable(out)?;
    let (model, data) = load_model_and_data(a.model()?, &a.input)?;
    let sweep = a.offsets.clone().unwrap_or_else(|| breakpoints(&model.cascade, &data));
    let points = evaluate_cascade_roc(&model.cascade, &data, &sweep)?;
    let m2 = data.m2() as f64;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt_scalar(p.offset),
                p.fp_count.to_string(),
                fmt_scalar(p.fp_count as f64 / m2),
                fmt_scalar(p.detection_rate),
            ]
        })
        .collect();
    write_csv(out, &meta(name, &cfg, None), "offset,fp_count,fp_rate,detection_rate", &rows)?;
    print_json(&json!({ "roc": out, "points": points.len() }))?;
    Ok(Finished::ok())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Matrix {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Deserialize)]
struct Problem {
    #[serde(alias = "P")]
    p: Matrix,
    c: Vec<f64>,
}

#[derive(Serialize)]
struct QpReport<'a> {
    w: &'a [f64],
    objective: f64,
    iters: usize,
    converged: bool,
    gap: f64,
    solver: SolverArg,
}

pub fn solve_qp(name: &str, a: &SolveQpArgs, cfg: Value) -> anyhow::Result<Finished> {
    let path = a.problem()?;
    ensure_file(path)?;
    if let Some(out) = &a.out {
        ensure_writable(out)?;
    }
    let problem: Problem = lacboost::io::read_json(path).with_context(|| format!("reading {}", path.display()))?;
    let n = problem.c.len();
    let p = match problem.p {
        Matrix::Flat(v) => v,
        Matrix::Rows(rows) => {
            if let Some(r) = rows.iter().find(|r| r.len() != n) {
                return Err(lacboost::Error::DimensionMismatch { expected: n, got: r.len() }.into());
            }
            rows.concat()
        }
    };
    let qp = SimplexQp::new(p, problem.c)?;
    let sol = match a.solver {
        SolverArg::Eg => {
            let eg = EgConfig {
                max_iters: a.max_iters,
                tol: a.tol,
                step_schedule: step_schedule(a.step, a.step_size)?,
                ..EgConfig::default()
            };
            eg_solve(&qp, &eg)?
        }
        SolverArg::Reference => reference_solve(&qp, a.tol)?,
    };
    let report = QpReport {
        w: &sol.w,
        objective: sol.objective,
        iters: sol.iters,
        converged: sol.converged,
        gap: sol.gap,
        solver: a.solver,
    };
    let mut v = meta(name, &cfg, None);
    v["solution"] = serde_json::to_value(&report)?;
    match &a.out {
        Some(out) => lacboost::io::write_json(out, &v)?,
        None => print_json(&v)?,
    }
    let flags = if sol.converged { Vec::new() } else { vec![format!("no convergence in {} iterations", sol.iters)] };
    Ok(Finished { flags })
}

pub fn analyze(name: &str, a: &AnalyzeArgs, cfg: Value) -> anyhow::Result<Finished> {
    for out in [&a.qq_out, &a.diag_out].into_iter().flatten() {
        ensure_writable(out)?;
    }
    let (model, data) = load_model_and_data(a.model()?, &a.input)?;
    let n_exits = model.cascade.n_exits();
    let t = match a.exit {
        None => n_exits - 1,
        Some(e) if (1..=n_exits).contains(&e) => e - 1,
        Some(e) => return Err(usage(format!("--exit {e} is outside 1..={n_exits}"))),
    };
    let clf = model.cascade.exit_classifier(t)?;
    let outputs = |row: &[f64]| -> Vec<f64> { clf.weak_classifiers.iter().map(|h| f64::from(h.classify(row))).collect() };

    let pos_scores: Vec<f64> = data.positives().map(|r| clf.score(r)).collect();
    let qq = normality_qq(&pos_scores)?;
    if let Some(out) = &a.qq_out {
        let rows: Vec<Vec<String>> = qq.pairs.iter().map(|&(x, y)| vec![fmt_scalar(x), fmt_scalar(y)]).collect();
        write_csv(out, &meta(name, &cfg, None), "theoretical,sample", &rows)?;
    }

    let neg_outputs: Vec<Vec<f64>> = data.negatives().map(outputs).collect();
    let diag = covariance_diagonality(&neg_outputs);
    if let (Some(out), Ok(d)) = (&a.diag_out, &diag) {
        let rows = vec![vec![fmt_scalar(d.mean_abs_diag), fmt_scalar(d.mean_abs_offdiag), fmt_scalar(d.ratio)]];
        write_csv(out, &meta(name, &cfg, None), "mean_abs_diag,mean_abs_offdiag,ratio", &rows)?;
    }

    // moments of the weak outputs on the positive class
    let pos_outputs: Vec<Vec<f64>> = data.positives().map(outputs).collect();
    let n = clf.len();
    let m1 = pos_outputs.len() as f64;
    let mu1: Vec<f64> = (0..n).map(|j| pos_outputs.iter().map(|r| r[j]).sum::<f64>() / m1).collect();
    let mut sigma1 = vec![0.0; n * n];
    for r in &pos_outputs {
        for i in 0..n {
            for j in 0..n {
                sigma1[i * n + j] += (r[i] - mu1[i]) * (r[j] - mu1[j]) / m1;
            }
        }
    }
    let worst_case: Vec<Value> = DistributionFamily::ALL
        .iter()
        .map(|&family| match worst_case_gamma(&clf.w, clf.b, &mu1, &sigma1, family) {
            Ok(wc) => serde_json::to_value(wc).unwrap_or(Value::Null),
            Err(e) => json!({ "family": family, "error": e.to_string() }),
        })
        .collect();

    let mut summary = meta(name, &cfg, None);
    summary["exit"] = json!(t + 1);
    summary["qq_correlation"] = json!(qq.correlation);
    summary["diagonality"] = match diag {
        Ok(d) => serde_json::to_value(d)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    summary["worst_case"] = json!(worst_case);
    print_json(&summary)?;
    Ok(Finished::ok())
}

pub fn theta_sweep(name: &str, a: &ThetaSweepArgs, cfg: Value) -> anyhow::Result<Finished> {
    let (path, out) = (a.data()?, a.out()?);
    ensure_writable(out)?;
    let data = load_csv(path)?;
    let grid = a.grid.clone().unwrap_or_else(|| THETA_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0)) {
        return Err(usage("--grid needs positive values"));
    }
    let c = &a.cascade;
    let mut seeds = Seeds::new(c.seed);
    let (pool_seed, neg_seed) = (seeds.next(), seeds.next());
    let positives: Vec<Vec<f64>> = data.positives().map(<[f64]>::to_vec).collect();

    let mut results = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &theta in &grid {
        let mut config = c.cascade_config(theta)?;
        config.max_nodes = a.nodes;
        let mut negatives = negative_source(&data, c.negatives, neg_seed)?;
        let mut pool = WeakLearnerPool::tabular(data.n_features(), c.boost.pool_fraction, pool_seed)?;
        let outcome = run_cascade(&positives, negatives.as_mut(), &mut pool, &config)?;
        let rates = cascade_rates(&outcome.model, &data);
        let (d, f) = rates.per_exit.last().copied().unwrap_or((1.0, 1.0));
        let accuracy = 1.0 - rates.error;
        info!("theta {theta}: accuracy {accuracy}");
        // ties go to the smaller theta
        best = match best {
            Some((bt, ba)) if ba > accuracy || (ba == accuracy && bt <= theta) => Some((bt, ba)),
            _ => Some((theta, accuracy)),
        };
        results.push((theta, accuracy, d, f, outcome.model.n_exits()));
    }
    let (best_theta, best_accuracy) = best.expect("non-empty grid");

    let mut m = meta(name, &cfg, Some(c.seed));
    m["best_theta"] = json!(best_theta);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|&(t, acc, d, f, nodes)| vec![fmt_scalar(t), fmt_scalar(acc), fmt_scalar(d), fmt_scalar(f), nodes.to_string()])
        .collect();
    write_csv(out, &m, "theta,accuracy,detection_rate,fp_rate,nodes", &rows)?;
    print_json(&json!({ "best_theta": best_theta, "best_accuracy": best_accuracy, "out": out }))?;
    Ok(Finished::ok())
}
