//! CSV series from JSON reports, one file per figure-style view.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::PlotsArgs;

struct Series {
    name: String,
    header: &'static str,
    rows: Vec<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into())
}

fn mlp_series(stem: &str, r: &Value) -> Series {
    let rows = r["epochs"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|e| format!("{},{},{}", cell(&e["epoch"]), cell(&e["train_error"]), cell(&e["test_error"])))
        .collect();
    Series {
        name: format!("{stem}.error_vs_epoch.csv"),
        header: "epoch,train_error,test_error",
        rows,
    }
}

fn sharpness_series(stem: &str, points: &[Value]) -> Series {
    Series {
        name: format!("{stem}.updates_vs_eps.csv"),
        header: "eps,updates,simulated",
        rows: points
            .iter()
            .map(|p| format!("{},{},{}", cell(&p["eps"]), cell(&p["updates"]), cell(&p["simulated"])))
            .collect(),
    }
}

fn genexp_series(stem: &str, r: &Value) -> Series {
    Series {
        name: format!("{stem}.generalization.csv"),
        header: "seed,empirical_error,true_error_estimate,bound_eps,violated",
        rows: r["reports"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|t| {
                format!(
                    "{},{},{},{},{}",
                    cell(&t["seed"]),
                    cell(&t["empirical_error"]),
                    cell(&t["true_error_estimate"]),
                    cell(&t["bound_eps"]),
                    cell(&t["violated"])
                )
            })
            .collect(),
    }
}

fn verify_series(stem: &str, r: &Value) -> Vec<Series> {
    let mut out = Vec::new();
    for c in r["results"].as_array().into_iter().flatten() {
        let m = &c["metrics"];
        match c["id"].as_u64() {
            Some(4) => {
                let points: Vec<Value> = m["sharp_eps"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .zip(m["sharp_updates"].as_array().into_iter().flatten())
                    .map(|(e, u)| json!({ "eps": e, "updates": u }))
                    .collect();
                out.push(sharpness_series(stem, &points));
            }
            Some(11) => {
                let mut rows = Vec::new();
                for run in m["runs"].as_array().into_iter().flatten() {
                    for (i, e) in run["test_errors"].as_array().into_iter().flatten().enumerate() {
                        rows.push(format!("{},{},{},{}", cell(&run["seed"]), cell(&run["schedule"]), i + 1, cell(e)));
                    }
                }
                out.push(Series {
                    name: format!("{stem}.mnist_error_vs_epoch.csv"),
                    header: "seed,schedule,epoch,test_error",
                    rows,
                });
            }
            _ => {}
        }
    }
    out
}

pub fn emit(a: &PlotsArgs) -> Result<Outcome> {
    let mut series = Vec::new();
    let mut margin_rows = Vec::new();
    for path in &a.reports {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let r: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let stem = stem(path);
        match r["command"].as_str() {
            Some("mlp") => series.push(mlp_series(&stem, &r)),
            Some("sharpness") => {
                series.push(sharpness_series(&stem, r["points"].as_array().map_or(&[], |v| v.as_slice())))
            }
            Some("genexp") => series.push(genexp_series(&stem, &r)),
            Some("verify-all") => series.extend(verify_series(&stem, &r)),
            Some("train") => margin_rows.push(format!(
                "{},{},{},{},{},{},{}",
                stem,
                cell(&r["algorithm"]),
                cell(&r["params"]["beta"]),
                cell(&r["params"]["alpha"]),
                cell(&r["eps_star"]),
                cell(&r["margin"]),
                cell(&r["update_count"])
            )),
            other => bail!(
                "{}: no CSV series for reports of command {}",
                path.display(),
                other.unwrap_or("(none)")
            ),
        }
    }
    if !margin_rows.is_empty() {
        series.push(Series {
            name: "margin_vs_beta.csv".into(),
            header: "report,algorithm,beta,alpha,eps_star,margin,update_count",
            rows: margin_rows,
        });
    }

    let mut written: Vec<PathBuf> = Vec::new();
    if !series.is_empty() {
        fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    }
    for s in &series {
        let path = a.out_dir.join(&s.name);
        let mut text = String::from(s.header);
        text.push('\n');
        for row in &s.rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    let summary = written
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome {
        report: json!({ "files": written }),
        out: a.out.clone(),
        print_report: false,
        artifacts: written,
        failed: Vec::new(),
        summary,
    })
}
