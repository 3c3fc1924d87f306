use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use marginlab::compression::{generalization_experiment, planted_source};
use marginlab::io::{read_csv, read_points, write_csv};
use marginlab::mlp::{self, load_idx, MlpConfig, MlpDataset, MnistFiles};
use marginlab::oracle;
use marginlab::projection::{self, DimredConfig, LabelingMode, ProjectionMatrix};
use marginlab::separation;
use marginlab::suite::{self, binomial_band, Profile, SuiteOptions};
use marginlab::variants::{self, ScanOrder, VariantConfig};
use marginlab::{BoundCheck, LabeledDataset};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Algo, CensusArgs, DimredArgs, GameArgs, GenexpArgs, MlpArgs, OracleArgs, ProjectArgs, Scan};
use crate::{SeparateArgs, SharpnessArgs, TrainArgs, VerifyArgs};

/// What a subcommand produced.
pub struct Outcome {
    pub report: Value,
    pub out: Option<PathBuf>,
    /// When false the report only goes to `out`.
    pub print_report: bool,
    pub artifacts: Vec<PathBuf>,
    pub failed: Vec<String>,
    pub summary: String,
}

impl Outcome {
    fn new(report: impl Serialize, out: &Option<PathBuf>) -> Result<Self> {
        Ok(Outcome {
            report: serde_json::to_value(report)?,
            out: out.clone(),
            print_report: true,
            artifacts: Vec::new(),
            failed: Vec::new(),
            summary: String::new(),
        })
    }

    fn checks(mut self, checks: &[BoundCheck]) -> Self {
        self.failed.extend(checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()));
        self
    }

    fn summary(mut self, s: impl Into<String>) -> Self {
        self.summary = s.into();
        self
    }

    /// Tags the report with the command name, then writes it to `out` or
    /// stdout.
    pub fn emit(&mut self, command: &str) -> Result<()> {
        if let Value::Object(map) = &mut self.report {
            map.insert("command".into(), Value::String(command.into()));
        }
        let mut text = serde_json::to_string_pretty(&self.report)?;
        text.push('\n');
        let mut stdout = std::io::stdout().lock();
        match &self.out {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
                self.artifacts.push(path.clone());
                if !self.summary.is_empty() {
                    writeln!(stdout, "{}", self.summary)?;
                }
            }
            None if self.print_report => stdout.write_all(text.as_bytes())?,
            None => {
                if !self.summary.is_empty() {
                    writeln!(stdout, "{}", self.summary)?;
                }
            }
        }
        for name in &self.failed {
            eprintln!("failed check: {name}");
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<LabeledDataset> {
    Ok(read_csv(path)?)
}

fn points(path: &Path) -> Result<Vec<Vec<f64>>> {
    Ok(read_points(path)?)
}

pub fn train(a: &TrainArgs) -> Result<Outcome> {
    let mut cfg = match a.algo {
        Algo::Classic => VariantConfig::classic(),
        Algo::Beta => match a.beta {
            Some(b) => VariantConfig::beta(b),
            None => bail!("--algo beta requires --beta"),
        },
        Algo::RIndep => VariantConfig::r_independent(),
        Algo::Inf | Algo::Combined => {
            let Some(alpha) = a.alpha else {
                bail!("--algo {} requires --alpha", if matches!(a.algo, Algo::Inf) { "inf" } else { "combined" });
            };
            if matches!(a.algo, Algo::Inf) {
                VariantConfig::infinity(alpha)
            } else {
                VariantConfig::combined(alpha)
            }
        }
    };
    cfg = cfg.with_scan(match a.scan {
        Scan::Cyclic => ScanOrder::Cyclic,
        Scan::First => ScanOrder::FirstViolation,
    });
    cfg.validate()?;
    let ds = load(&a.data)?;
    let cert = oracle::optimal_margin(&ds)?;
    let eps = cert.separable().then_some(cert.eps_star);
    cfg = cfg.clone().with_max_updates(
        a.max_updates
            .unwrap_or_else(|| variants::default_max_updates(&cfg, eps, ds.max_norm())),
    );
    let result = variants::train(&ds, &cfg)?;
    let (checks, info) = variants::bound_checks(&ds, &cfg, &result, &cert);
    let margin = result.margin(&ds).unwrap_or(f64::NEG_INFINITY);
    let report = json!({
        "algorithm": cfg.algorithm.name(),
        "params": cfg.params_json(),
        "update_count": result.update_count(),
        "margin": finite_or_null(margin),
        "bound_checks": checks,
        "informational": info,
        "terminated": result.terminated,
        "eps_star": cert.eps_star,
        "radius": ds.max_norm(),
        "beta_final": result.beta_final,
        "beta_changes": result.beta_changes,
        "hyperplane": result.hyperplane,
    });
    let mut out = Outcome::new(report, &a.out)?.checks(&checks).summary(format!(
        "{}: {} updates, margin {margin:.6}, eps* {:.6}, {}",
        cfg.algorithm.name(),
        result.update_count(),
        cert.eps_star,
        pass_word(&checks)
    ));
    if let Some(path) = &a.trace {
        fs::write(path, result.trace.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        out.artifacts.push(path.clone());
    }
    Ok(out)
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn pass_word(checks: &[BoundCheck]) -> &'static str {
    if checks.iter().all(|c| c.pass) {
        "all checks pass"
    } else {
        "CHECK FAILED"
    }
}

pub fn oracle(a: &OracleArgs) -> Result<Outcome> {
    let ds = load(&a.data)?;
    let tol = a.tol.unwrap_or_else(|| oracle::default_tol(ds.max_norm()));
    let cert = oracle::max_margin(&ds, tol)?;
    let checks = vec![BoundCheck::holds("converged", cert.converged)];
    let summary = format!(
        "eps* in [{:.9}, {:.9}], separable: {}",
        cert.eps_star,
        cert.upper_bound,
        cert.separable()
    );
    let mut report = serde_json::to_value(&cert)?;
    report["separable"] = json!(cert.separable());
    report["n"] = json!(ds.len());
    report["d"] = json!(ds.dim());
    report["tol"] = json!(tol);
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn separate(a: &SeparateArgs) -> Result<Outcome> {
    let k = points(&a.k)?;
    let l = points(&a.l)?;
    let outcome = separation::sparse_separate(&k, &l, a.eps)?;
    let checks = separation::verify_outcome(&outcome, &k, &l, a.eps);
    let summary = match &outcome {
        separation::SeparationOutcome::Hyperplane(h) => format!(
            "hyperplane with {} contributors, K margin {:.6}, L margin {:.6}",
            h.sparsity, h.min_k_margin, h.max_l_margin
        ),
        separation::SeparationOutcome::Proximity(p) => {
            format!("proximity witness at distance {:.6} after {} updates", p.distance, p.updates)
        }
    };
    let report = json!({ "eps": a.eps, "outcome": outcome, "checks": checks });
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn game(a: &GameArgs) -> Result<Outcome> {
    let v = points(&a.v)?;
    let g = separation::game_strategies(&v, a.tmax)?;
    let worst = g
        .values
        .iter()
        .enumerate()
        .map(|(t, val)| val / (3.0 / (t + 1) as f64).sqrt())
        .fold(0.0, f64::max);
    let mut checks = vec![BoundCheck::at_most("value_vs_sqrt_3_over_t", worst, 1.0, 1e-12)];
    if g.terminated {
        checks.push(BoundCheck::at_least(
            "hyperplane_payoff",
            g.eps_star_game,
            g.value_lower,
            1e-9,
        ));
    }
    let summary = format!(
        "{} steps, terminated: {}, game value in [{:.6}, {:.6}]",
        g.steps(),
        g.terminated,
        g.eps_star_game,
        g.value_upper
    );
    let mut report = serde_json::to_value(&g)?;
    report["checks"] = serde_json::to_value(&checks)?;
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn project(a: &ProjectArgs, seed: u64) -> Result<Outcome> {
    let ds = load(&a.data)?;
    let m = ProjectionMatrix::sample(ds.dim(), a.k, seed)?;
    let projected = m.apply_all(ds.points())?;
    let distortion = projection::max_inner_product_distortion(ds.points(), &projected);
    let mut out_artifacts = Vec::new();
    if let Some(path) = &a.csv {
        write_csv(&LabeledDataset::new(projected.clone(), ds.labels().to_vec())?, path)?;
        out_artifacts.push(path.clone());
    }
    let report = json!({
        "d": ds.dim(),
        "k": a.k,
        "seed": seed,
        "max_inner_product_distortion": distortion,
        "points": projected,
    });
    let mut out = Outcome::new(report, &a.out)?.summary(format!(
        "projected {} points from {} to {} dimensions, max inner product distortion {distortion:.6}",
        ds.len(),
        ds.dim(),
        a.k
    ));
    out.artifacts = out_artifacts;
    Ok(out)
}

pub fn census(a: &CensusArgs) -> Result<Outcome> {
    let x = points(&a.data)?;
    let c = projection::census(&x, a.eps)?;
    let checks = vec![BoundCheck::at_most("partition_count", c.count as f64, c.bound, 0.0)];
    let summary = format!("{} eps-partitions, bound {:.6e}", c.count, c.bound);
    let mut report = serde_json::to_value(&c)?;
    report["within_bound"] = json!(c.within_bound());
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn dimred(a: &DimredArgs, seed: u64) -> Result<Outcome> {
    let x = points(&a.data)?;
    let mut cfg = DimredConfig::new(a.eps, a.delta, a.trials);
    cfg.c = a.c;
    cfg.seeds = (0..a.trials).map(|t| seed.wrapping_add(t)).collect();
    if let Some(count) = a.sampled {
        cfg.mode = LabelingMode::Sampled { count, seed };
    }
    let r = projection::dimred_experiment(&x, &cfg)?;
    let limit = a.delta + binomial_band(a.delta, a.trials as usize);
    let checks = vec![BoundCheck::at_most("failure_rate", r.failure_rate, limit, 0.0)];
    let summary = format!(
        "k = {}, {} of {} seeds failed (rate {:.4}, limit {limit:.4})",
        r.k,
        r.failures,
        r.per_seed.len(),
        r.failure_rate
    );
    let mut report = serde_json::to_value(&r)?;
    report["c"] = json!(a.c);
    report["failure_limit"] = json!(limit);
    report["checks"] = serde_json::to_value(&checks)?;
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn genexp(a: &GenexpArgs, seed: u64) -> Result<Outcome> {
    let margin = a.margin.unwrap_or(a.eps);
    let src = planted_source(a.dim, margin, seed)?;
    let s = generalization_experiment(&src, a.m, a.eps, a.delta, a.test_size, a.trials, seed)?;
    let limit = a.delta + binomial_band(a.delta, a.trials);
    let checks = vec![BoundCheck::at_most("violation_rate", s.violation_rate, limit, 0.0)];
    let summary = format!(
        "{} violations in {} trials (limit rate {limit:.4}), mean L_S {:.5}, mean L_D {:.5}",
        s.violations, s.trials, s.mean_empirical_error, s.mean_true_error
    );
    let mut report = serde_json::to_value(&s)?;
    report["dist"] = json!("planted");
    report["margin"] = json!(margin);
    report["dim"] = json!(a.dim);
    report["violation_limit"] = json!(limit);
    report["checks"] = serde_json::to_value(&checks)?;
    Ok(Outcome::new(report, &a.out)?.checks(&checks).summary(summary))
}

pub fn mlp(a: &MlpArgs, seed: u64) -> Result<Outcome> {
    let dir = a.mnist_dir.clone().unwrap_or_else(suite::default_mnist_dir);
    let files = MnistFiles::in_dir(&dir);
    let pick = |explicit: &Option<PathBuf>, default: &PathBuf| explicit.clone().unwrap_or_else(|| default.clone());
    let train = load_idx(
        pick(&a.train_images, &files.train_images),
        pick(&a.train_labels, &files.train_labels),
    )?;
    let test = load_idx(
        pick(&a.test_images, &files.test_images),
        pick(&a.test_labels, &files.test_labels),
    )?;
    let train = a.train_limit.map_or(train.clone(), |n| train.truncated(n));
    let test = a.test_limit.map_or(test.clone(), |n| test.truncated(n));
    let mut schedule = a.schedule;
    schedule.per_neuron_clock = !a.global_clock;
    let cfg = MlpConfig {
        hidden: (a.hidden > 0).then_some(a.hidden),
        schedule,
        lr: a.lr,
        hidden_lr: a.hidden_lr,
        epochs: a.epochs,
        batch: a.batch,
        seed,
        shuffle: !a.no_shuffle,
        ..MlpConfig::default()
    };
    let (_, log) = mlp::train_mlp(
        &MlpDataset::from_images(&train),
        Some(&MlpDataset::from_images(&test)),
        &cfg,
    )?;
    let summary = format!(
        "{} epochs, {} steps, final test error {:.4}",
        log.epochs.len(),
        log.total_steps,
        log.final_test_error.unwrap_or(f64::NAN)
    );
    Ok(Outcome::new(&log, &a.out)?.summary(summary))
}

pub fn sharpness(a: &SharpnessArgs) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &eps in &a.eps {
        let closed = variants::sharp_pair_update_count(eps, a.alpha);
        let simulated = if closed <= a.simulate_up_to as f64 {
            let cfg = VariantConfig::infinity(a.alpha).with_max_updates(a.simulate_up_to as usize + 2);
            let run = variants::train_infinity(&variants::sharp_pair(eps)?, &cfg)?;
            run.terminated.then_some(run.update_count())
        } else {
            None
        };
        rows.push(json!({ "eps": eps, "updates": closed, "simulated": simulated }));
    }
    let (inv, counts): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|r| (1.0 / r["eps"].as_f64().unwrap_or(1.0), r["updates"].as_f64().unwrap_or(1.0)))
        .unzip();
    let slope = (rows.len() >= 2).then(|| suite::log_log_slope(&inv, &counts));
    let summary = match slope {
        Some(s) => format!("log-log slope {s:.3}, exponent 2/(2-alpha) = {:.3}", 2.0 / (2.0 - a.alpha)),
        None => format!("{} point(s)", rows.len()),
    };
    let report = json!({
        "alpha": a.alpha,
        "points": rows,
        "slope": slope,
        "exponent": 2.0 / (2.0 - a.alpha),
    });
    Ok(Outcome::new(report, &a.out)?.summary(summary))
}

pub fn verify_all(a: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let profile = if a.full { Profile::Full } else { Profile::Quick };
    let mut opts = SuiteOptions::new(profile, seed);
    if let Some(dir) = &a.mnist_dir {
        opts.mnist_dir = dir.clone();
    }
    let summary = if a.only.is_empty() {
        suite::verify_all(&opts, |r| println!("{}", r.line()))
    } else {
        let results: Vec<_> = a
            .only
            .iter()
            .map(|&id| {
                if !suite::CRITERIA.iter().any(|c| c.0 == id) {
                    bail!("no criterion {id}; criteria are numbered 1 to {}", suite::CRITERIA.len());
                }
                let r = suite::run_criterion(id, &opts);
                println!("{}", r.line());
                Ok(r)
            })
            .collect::<Result<_>>()?;
        suite::SuiteSummary {
            profile,
            seed,
            all_pass: results.iter().all(|r| r.pass),
            results,
        }
    };
    let passed = summary.results.iter().filter(|r| r.pass).count();
    let mut out = Outcome::new(&summary, &a.out)?.summary(format!(
        "{passed}/{} criteria passed",
        summary.results.len()
    ));
    out.print_report = false;
    out.failed = summary
        .results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("criterion {} ({})", r.id, r.name))
        .collect();
    Ok(out)
}
