//! CSV, JSON and SVG artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bo::RunTrace;
use crate::demo::DemoResult;
use crate::error::{HarnessError, Result};
use crate::mismatch::MismatchResult;
use crate::study::BoStudyResult;
use crate::svg::{stack, Plot, Series};
use crate::variance::VarStudyResult;

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::io(path, std::io::Error::other(e)))?;
    write_text(path, &(text + "\n"))
}

struct Csv {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

impl Csv {
    fn create(path: &Path) -> Result<Csv> {
        let w = csv::Writer::from_path(path).map_err(|e| HarnessError::io(path, e.into()))?;
        Ok(Csv {
            path: path.to_path_buf(),
            w,
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w
            .write_record(fields)
            .map_err(|e| HarnessError::io(&self.path, e.into()))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

fn trace_header(dim: usize, with_rep: bool) -> Vec<String> {
    let mut h = Vec::new();
    if with_rep {
        h.push("replication".to_string());
    }
    h.push("iteration".into());
    h.extend((1..=dim).map(|i| format!("x{i}")));
    h.extend(
        ["y", "best_so_far", "wall_ms", "policy", "estimate_mean", "estimate_se"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn trace_rows(t: &RunTrace, with_rep: bool) -> Vec<Vec<String>> {
    t.records
        .iter()
        .map(|r| {
            let mut row = Vec::new();
            if with_rep {
                row.push(t.replication.to_string());
            }
            row.push(r.iteration.to_string());
            row.extend(r.x.iter().map(|v| num(*v)));
            row.push(num(r.y));
            row.push(num(r.best_so_far));
            row.push(opt(r.wall_ms));
            row.push(r.policy.clone().unwrap_or_default());
            row.push(opt(r.estimate_mean));
            row.push(opt(r.estimate_se));
            row
        })
        .collect()
}

/// One CSV per replication plus `all.csv` stacking them with a replication
/// column.
pub fn write_traces(dir: &Path, traces: &[RunTrace], dim: usize) -> Result<()> {
    create_dir(dir)?;
    let mut all = Csv::create(&dir.join("all.csv"))?;
    all.row(trace_header(dim, true))?;
    for t in traces {
        let mut one = Csv::create(&dir.join(format!("rep_{:04}.csv", t.replication)))?;
        one.row(trace_header(dim, false))?;
        for row in trace_rows(t, false) {
            one.row(row)?;
        }
        one.finish()?;
        for row in trace_rows(t, true) {
            all.row(row)?;
        }
    }
    all.finish()
}

fn band(se: &[Option<f64>]) -> Vec<f64> {
    se.iter().map(|s| s.unwrap_or(0.0)).collect()
}

pub fn emit_study(result: &BoStudyResult, dim: usize, out: &Path) -> Result<()> {
    create_dir(out)?;
    for m in &result.methods {
        write_traces(&out.join(&m.method), &m.traces, dim)?;
        if let Some(usage) = &m.usage {
            let path = out.join(format!("{}_usage.csv", m.method));
            let mut w = Csv::create(&path)?;
            let mut header = vec!["decision".to_string()];
            header.extend(usage.members.iter().cloned());
            w.row(header)?;
            for (t, row) in usage.fractions.iter().enumerate() {
                let mut r = vec![(t + 1).to_string()];
                r.extend(row.iter().map(|v| num(*v)));
                w.row(r)?;
            }
            w.finish()?;
            let xs: Vec<f64> = (1..=usage.fractions.len()).map(|t| t as f64).collect();
            let plot = Plot {
                title: format!("{} policy usage", m.method),
                x_label: "decision".into(),
                y_label: "fraction of replications".into(),
                series: usage
                    .members
                    .iter()
                    .enumerate()
                    .map(|(i, name)| Series::line(name, xs.clone(), usage.fractions.iter().map(|r| r[i]).collect()))
                    .collect(),
                ..Default::default()
            };
            write_text(&out.join(format!("{}_usage.svg", m.method)), &plot.render())?;
        }
    }
    let mut curves = Csv::create(&out.join("curves.csv"))?;
    curves.row(["method", "iteration", "mean_best", "se_best"])?;
    for m in &result.methods {
        for (i, (v, s)) in m.curve.iter().zip(&m.curve_se).enumerate() {
            curves.row([m.method.clone(), (i + 1).to_string(), num(*v), opt(*s)])?;
        }
    }
    curves.finish()?;
    write_json(&out.join("summary.json"), result)?;
    let plot = Plot {
        title: "best observed value".into(),
        x_label: "evaluations".into(),
        y_label: "best so far (mean ± s.e.)".into(),
        series: result
            .methods
            .iter()
            .map(|m| {
                let xs = (1..=m.curve.len()).map(|i| i as f64).collect();
                Series::line(&m.method, xs, m.curve.clone()).with_band(band(&m.curve_se))
            })
            .collect(),
        ..Default::default()
    };
    write_text(&out.join("best_so_far.svg"), &plot.render())
}

pub fn emit_variance(result: &VarStudyResult, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut w = Csv::create(&out.join("errors.csv"))?;
    w.row(["horizon", "estimator", "n", "mean_error", "se_error"])?;
    for h in &result.horizons {
        for c in &h.curves {
            for (j, n) in result.ns.iter().enumerate() {
                w.row([
                    h.horizon.to_string(),
                    c.estimator.to_string(),
                    n.to_string(),
                    num(c.mean_error[j]),
                    opt(c.se_error[j]),
                ])?;
            }
        }
    }
    w.finish()?;
    let mut t = Csv::create(&out.join("rates.csv"))?;
    t.row(["horizon", "mc_rate", "qmc_rate", "qmc_cv_rate", "error_reduction", "qmc_reduction"])?;
    for h in &result.horizons {
        t.row([
            h.horizon.to_string(),
            num(h.curves[0].rate),
            num(h.curves[1].rate),
            num(h.curves[2].rate),
            num(h.error_reduction),
            num(h.qmc_reduction),
        ])?;
    }
    t.finish()?;
    write_json(&out.join("summary.json"), result)?;
    let ns: Vec<f64> = result.ns.iter().map(|n| *n as f64).collect();
    let plots: Vec<Plot> = result
        .horizons
        .iter()
        .map(|h| Plot {
            title: format!("estimation error, h = {}", h.horizon),
            x_label: "samples N".into(),
            y_label: "mean absolute error".into(),
            log_x: true,
            log_y: true,
            series: h
                .curves
                .iter()
                .map(|c| Series::line(c.estimator.to_string(), ns.clone(), c.mean_error.clone()).with_band(band(&c.se_error)))
                .collect(),
        })
        .collect();
    write_text(&out.join("errors.svg"), &stack(&plots))
}

pub fn emit_mismatch(result: &MismatchResult, out: &Path) -> Result<()> {
    create_dir(out)?;
    for (truth, h, traces) in &result.traces {
        write_traces(&out.join(format!("{truth}_h{h}")), traces, 1)?;
    }
    let mut w = Csv::create(&out.join("cells.csv"))?;
    w.row(["truth", "horizon", "mean_best", "se_best", "mean_reward", "se_reward", "completed", "failed"])?;
    for c in &result.cells {
        w.row([
            c.truth.clone(),
            c.horizon.to_string(),
            num(c.mean_best),
            opt(c.se_best),
            num(c.mean_reward),
            opt(c.se_reward),
            c.completed.to_string(),
            c.failed.to_string(),
        ])?;
    }
    w.finish()?;
    write_json(&out.join("summary.json"), result)?;
    let mut truths: Vec<&str> = Vec::new();
    for c in &result.cells {
        if !truths.contains(&c.truth.as_str()) {
            truths.push(&c.truth);
        }
    }
    let plots: Vec<Plot> = truths
        .iter()
        .map(|truth| Plot {
            title: format!("truth: {truth}"),
            x_label: "evaluations".into(),
            y_label: "best so far (mean ± s.e.)".into(),
            series: result
                .cells
                .iter()
                .filter(|c| c.truth == *truth)
                .map(|c| {
                    let xs = (1..=c.curve.len()).map(|i| i as f64).collect();
                    Series::line(format!("h = {}", c.horizon), xs, c.curve.clone()).with_band(band(&c.curve_se))
                })
                .collect(),
            ..Default::default()
        })
        .collect();
    write_text(&out.join("mismatch.svg"), &stack(&plots))
}

pub fn emit_demo(result: &DemoResult, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut w = Csv::create(&out.join("grid.csv"))?;
    let mut header = vec!["x".to_string(), "truth".into(), "mean".into(), "sd".into()];
    header.extend(result.panels.iter().map(|p| p.policy.clone()));
    w.row(header)?;
    for i in 0..result.grid.len() {
        let mut row = vec![num(result.grid[i]), num(result.truth[i]), num(result.mean[i]), num(result.sd[i])];
        row.extend(result.panels.iter().map(|p| num(p.acquisition[i])));
        w.row(row)?;
    }
    w.finish()?;
    write_json(&out.join("summary.json"), result)?;
    let obs_x: Vec<f64> = result.observations.iter().map(|o| o.0).collect();
    let obs_y: Vec<f64> = result.observations.iter().map(|o| o.1).collect();
    for p in &result.panels {
        let posterior = Plot {
            title: format!("{}: posterior and chosen points", p.policy),
            x_label: "x".into(),
            y_label: "f(x)".into(),
            series: vec![
                Series::line("objective", result.grid.clone(), result.truth.clone()),
                Series::line("posterior mean ± 2 sd", result.grid.clone(), result.mean.clone())
                    .with_band(result.sd.iter().map(|s| 2.0 * s).collect()),
                Series::points("observations", obs_x.clone(), obs_y.clone()),
                Series::points(
                    "chosen",
                    p.chosen.iter().map(|c| c.0).collect(),
                    p.chosen.iter().map(|c| c.1).collect(),
                ),
            ],
            ..Default::default()
        };
        let acq = Plot {
            title: format!("{} acquisition", p.policy),
            x_label: "x".into(),
            y_label: "value".into(),
            series: vec![Series::line(&p.policy, result.grid.clone(), p.acquisition.clone())],
            ..Default::default()
        };
        write_text(&out.join(format!("demo_{}.svg", p.policy)), &stack(&[posterior, acq]))?;
    }
    Ok(())
}
