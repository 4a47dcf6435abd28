//! Command execution. Every command produces a [`Table`]; per-point failures
//! stay in the table as error rows and are also listed as error records.

use std::path::{Path, PathBuf};

use chlab_core::bounds::{
    conjugate_family, conjugate_sweep_with, fit_blowup_at, sweep_ratio_with, SweepRecord,
};
use chlab_core::functions::dilate;
use chlab_core::grid::GridEvaluator;
use chlab_core::norms::{gls_norm_source, gls_norm_with, LpSource, NormResult, OperatorImage};
use chlab_core::operators::{apply_batch, vs_image_lp_integral, Operator};
use chlab_core::{FunctionSpec, QuadratureSpec};
use serde_json::{json, Map, Value};

use crate::config::{Command, OutputFormat, RunConfig};
use crate::error::{CliError, ErrorRecord, EXIT_OK};
use crate::io::{fit_json, read_sweep_csv, sweep_table};
use crate::parallel::Rayon;
use crate::table::{json_float, Cell, Table};

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub table: Table,
    /// Additional JSON fields (a fit, a GLS ratio) next to `results`.
    pub extra: Map<String, Value>,
    pub errors: Vec<ErrorRecord>,
}

impl Report {
    fn new(table: Table) -> Self {
        Report {
            table,
            ..Default::default()
        }
    }

    /// 0, or the code of the first failure.
    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(EXIT_OK, |e| e.exit_code)
    }
}

fn function(cfg: &RunConfig) -> &FunctionSpec {
    cfg.function.as_ref().expect("checked by RunConfig")
}

fn p_values(cfg: &RunConfig) -> &[f64] {
    cfg.p_values.as_deref().expect("checked by RunConfig")
}

/// Divergent norms are reported as `inf`; other failures leave the value
/// blank.
fn failed_value(e: &chlab_core::Error) -> Cell {
    match e {
        chlab_core::Error::Divergence { .. } => Cell::Num(f64::INFINITY),
        _ => Cell::Empty,
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    run_with(cfg, &Rayon)
}

pub fn run_with<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Result<Report, CliError> {
    match cfg.command {
        Command::Params => Ok(params(cfg)),
        Command::Apply => Ok(apply(cfg, eval)),
        Command::Norm => Ok(norm(cfg, eval)),
        Command::GlsNorm => gls(cfg, eval),
        Command::Sweep => Ok(sweep(cfg, eval)),
        Command::FitBlowup => fit(cfg, eval),
        Command::VerifyScaling => Ok(scaling(cfg, eval)),
        Command::HardyCheck => hardy(cfg, eval),
        Command::ConjugateSweep => Ok(conjugate(cfg, eval)),
    }
}

fn params(cfg: &RunConfig) -> Report {
    let w = cfg.params.window();
    let mut t = Table::new(&["kappa", "p_minus", "p_plus", "q_minus", "q_plus"]);
    t.push(vec![
        cfg.params.kappa().into(),
        w.p_minus.into(),
        w.p_plus.into(),
        w.q_minus.into(),
        w.q_plus.into(),
    ]);
    Report::new(t)
}

fn apply<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Report {
    let xs = cfg.x_values.as_deref().expect("checked by RunConfig");
    let results = apply_batch(cfg.op, &cfg.params, function(cfg), xs, &cfg.quad, eval);
    let mut rep = Report::new(Table::new(&["x", "value", "error_estimate", "error"]));
    for (i, (x, r)) in xs.iter().zip(results).enumerate() {
        match r {
            Ok(v) => rep.table.push(vec![(*x).into(), v.value.into(), v.error_estimate.into(), Cell::Empty]),
            Err(e) => {
                rep.table.push(vec![(*x).into(), failed_value(&e), Cell::Empty, e.to_string().into()]);
                rep.errors.push(ErrorRecord::at(i, &e));
            }
        }
    }
    rep
}

fn norm<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Report {
    let ps = p_values(cfg);
    let f = function(cfg);
    let mut rep = Report::new(Table::new(&["p", "q", "value", "error_estimate", "error"]));
    let results: Vec<(Option<f64>, chlab_core::Result<NormResult>)> = eval.map(ps.len(), |i| {
        let p = ps[i];
        match cfg.image {
            None => (None, f.lp_norm(p, &cfg.quad)),
            Some(op) => match cfg.params.q_of_p(p) {
                Ok(q) => (Some(q), OperatorImage { op, params: cfg.params, f }.lp_norm(q, &cfg.quad)),
                Err(e) => (None, Err(e)),
            },
        }
    });
    for (i, (p, (q, r))) in ps.iter().zip(results).enumerate() {
        match r {
            Ok(n) => rep.table.push(vec![(*p).into(), q.into(), n.value.into(), n.error_estimate.into(), Cell::Empty]),
            Err(e) => {
                rep.table.push(vec![(*p).into(), q.into(), failed_value(&e), Cell::Empty, e.to_string().into()]);
                rep.errors.push(ErrorRecord::at(i, &e));
            }
        }
    }
    rep
}

const GLS_COLUMNS: [&str; 6] = ["quantity", "value", "achieved_at", "p_cap", "error_estimate", "error"];

fn gls_row(rep: &mut Report, index: usize, label: &str, r: &chlab_core::Result<NormResult>) {
    match r {
        Ok(n) => rep.table.push(vec![
            label.into(),
            n.value.into(),
            n.achieved_at.into(),
            n.p_cap.into(),
            n.error_estimate.into(),
            Cell::Empty,
        ]),
        Err(e) => {
            rep.table.push(vec![label.into(), failed_value(e), Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into()]);
            rep.errors.push(ErrorRecord::at(index, e));
        }
    }
}

fn gls<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Result<Report, CliError> {
    let f = function(cfg);
    let psi = cfg
        .psi
        .as_ref()
        .expect("checked by RunConfig")
        .to_psi(&cfg.params, Some(f), &cfg.quad)?;
    let mut rep = Report::new(Table::new(&GLS_COLUMNS));
    if !cfg.transfer {
        let r = gls_norm_with(f, &psi, &cfg.quad, cfg.grid, eval);
        gls_row(&mut rep, 0, "f", &r);
        return Ok(rep);
    }
    let (psi_k, psi_ab) = chlab_core::bounds::psi_K_transfer(&cfg.params, &psi)?;
    let rhs = gls_norm_with(f, &psi_ab, &cfg.quad, cfg.grid, eval);
    let image = OperatorImage {
        op: Operator::U,
        params: cfg.params,
        f,
    };
    let lhs = gls_norm_source(&image, &psi_k, &cfg.quad, cfg.grid, eval);
    gls_row(&mut rep, 0, "f", &rhs);
    gls_row(&mut rep, 1, "Uf", &lhs);
    let (a, b) = psi_ab.support();
    rep.extra.insert("exponent_window".into(), json!([json_float(a), json_float(b)]));
    if let (Ok(l), Ok(r)) = (&lhs, &rhs) {
        rep.extra.insert("ratio".into(), json_float(l.value / r.value));
    }
    Ok(rep)
}

fn records_to_report(ps: &[f64], records: &[chlab_core::Result<SweepRecord>]) -> Report {
    let mut rep = Report::new(sweep_table(ps, records));
    for (i, r) in records.iter().enumerate() {
        if let Err(e) = r {
            rep.errors.push(ErrorRecord::at(i, e));
        }
    }
    rep
}

fn sweep_records<E: GridEvaluator>(cfg: &RunConfig, f: &FunctionSpec, eval: &E) -> Vec<chlab_core::Result<SweepRecord>> {
    let ps = p_values(cfg);
    match cfg.op {
        Operator::U => sweep_ratio_with(&cfg.params, f, ps, &cfg.quad, eval),
        Operator::W => conjugate_sweep_with(&cfg.params, f, ps, &cfg.quad, eval),
    }
}

fn sweep<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Report {
    let records = sweep_records(cfg, function(cfg), eval);
    records_to_report(p_values(cfg), &records)
}

fn default_endpoint(cfg: &RunConfig, op: Operator) -> f64 {
    let w = cfg.params.window();
    cfg.endpoint.unwrap_or(match op {
        Operator::U => w.p_minus,
        Operator::W => w.p_plus,
    })
}

const FIT_COLUMNS: [&str; 6] = [
    "fitted_exponent",
    "fitted_constant",
    "residual",
    "n_points",
    "endpoint",
    "expected_exponent",
];

fn fit<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Result<Report, CliError> {
    let records: Vec<SweepRecord> = match &cfg.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            read_sweep_csv(&text)?
        }
        None => sweep_records(cfg, function(cfg), eval).into_iter().filter_map(Result::ok).collect(),
    };
    let endpoint = default_endpoint(cfg, cfg.op);
    let expected = -cfg.params.kappa();
    let fit = fit_blowup_at(&records, endpoint)?;
    let mut t = Table::new(&FIT_COLUMNS);
    t.push(vec![
        fit.fitted_exponent.into(),
        fit.fitted_constant.into(),
        fit.residual.into(),
        Cell::Int(fit.p_points.len() as u64),
        endpoint.into(),
        expected.into(),
    ]);
    let mut rep = Report::new(t);
    rep.extra.insert("fit".into(), fit_json(&fit, endpoint, expected));
    Ok(rep)
}

struct ScalingPoint {
    q: f64,
    measured: f64,
    predicted: f64,
}

fn scaling_point(cfg: &RunConfig, f: &FunctionSpec, gamma: f64, p: f64, spec: &QuadratureSpec) -> chlab_core::Result<ScalingPoint> {
    let q = cfg.params.q_of_p(p)?;
    let fg = dilate(f, gamma)?;
    let base = OperatorImage { op: Operator::U, params: cfg.params, f }.lp_norm(q, spec)?;
    let scaled = OperatorImage { op: Operator::U, params: cfg.params, f: &fg }.lp_norm(q, spec)?;
    Ok(ScalingPoint {
        q,
        measured: scaled.value / base.value,
        predicted: gamma.powf(cfg.params.kappa() - 1.0 - 1.0 / q),
    })
}

fn scaling<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Report {
    let f = function(cfg);
    let gammas = cfg.gamma.as_deref().expect("checked by RunConfig");
    let ps = p_values(cfg);
    let pairs: Vec<(f64, f64)> = gammas.iter().flat_map(|g| ps.iter().map(move |p| (*g, *p))).collect();
    let results = eval.map(pairs.len(), |i| scaling_point(cfg, f, pairs[i].0, pairs[i].1, &cfg.quad));
    let mut rep = Report::new(Table::new(&["gamma", "p", "q", "measured", "predicted", "rel_deviation", "error"]));
    for (i, ((g, p), r)) in pairs.iter().zip(results).enumerate() {
        match r {
            Ok(s) => rep.table.push(vec![
                (*g).into(),
                (*p).into(),
                s.q.into(),
                s.measured.into(),
                s.predicted.into(),
                ((s.measured - s.predicted).abs() / s.predicted).into(),
                Cell::Empty,
            ]),
            Err(e) => {
                let mut row = vec![(*g).into(), (*p).into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 4));
                row.push(e.to_string().into());
                rep.table.push(row);
                rep.errors.push(ErrorRecord::at(i, &e));
            }
        }
    }
    rep
}

struct HardyPoint {
    image_norm: f64,
    f_norm: f64,
    bound: f64,
}

fn hardy<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Result<Report, CliError> {
    let w = cfg.weight.to_spec()?;
    let f = function(cfg);
    let ps = p_values(cfg);
    let results = eval.map(ps.len(), |i| -> chlab_core::Result<HardyPoint> {
        let p = ps[i];
        let bound = chlab_core::bounds::hardy_convolution_bound(&w, p)?;
        let f_norm = f.lp_norm(p, &cfg.quad)?.value;
        let img = vs_image_lp_integral(&w, f, p, &cfg.quad)?;
        Ok(HardyPoint {
            image_norm: img.value.max(0.0).powf(1.0 / p),
            f_norm,
            bound,
        })
    });
    let mut rep = Report::new(Table::new(&[
        "p",
        "image_norm",
        "f_norm",
        "ratio",
        "bound",
        "classical_bound",
        "error",
    ]));
    for (i, (p, r)) in ps.iter().zip(results).enumerate() {
        let classical = if *p > 1.0 { Cell::Num(p / (p - 1.0)) } else { Cell::Empty };
        match r {
            Ok(h) => rep.table.push(vec![
                (*p).into(),
                h.image_norm.into(),
                h.f_norm.into(),
                (h.image_norm / h.f_norm).into(),
                h.bound.into(),
                classical,
                Cell::Empty,
            ]),
            Err(e) => {
                let mut row = vec![(*p).into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 4));
                row.push(classical);
                row.push(e.to_string().into());
                rep.table.push(row);
                rep.errors.push(ErrorRecord::at(i, &e));
            }
        }
    }
    Ok(rep)
}

/// Points used when no exponents are given: `p_+ - 10^{-k}`, `k = 1..4`.
const DEFAULT_CONJUGATE_POINTS: u32 = 4;

fn conjugate<E: GridEvaluator>(cfg: &RunConfig, eval: &E) -> Report {
    let h = cfg.function.clone().unwrap_or_else(|| conjugate_family(&cfg.params));
    let ps = cfg
        .p_values
        .clone()
        .unwrap_or_else(|| chlab_core::bounds::near_p_plus(&cfg.params, DEFAULT_CONJUGATE_POINTS));
    let records = conjugate_sweep_with(&cfg.params, &h, &ps, &cfg.quad, eval);
    let mut rep = records_to_report(&ps, &records);
    let ok: Vec<SweepRecord> = records.into_iter().filter_map(Result::ok).collect();
    let endpoint = default_endpoint(cfg, Operator::W);
    match fit_blowup_at(&ok, endpoint) {
        Ok(fit) => {
            rep.extra.insert("fit".into(), fit_json(&fit, endpoint, -cfg.params.kappa()));
        }
        Err(e) => {
            rep.extra.insert("fit".into(), json!({"error": e.to_string()}));
        }
    }
    rep
}

/// The artifact text in the configured format.
pub fn render(cfg: &RunConfig, rep: &Report) -> String {
    match cfg.output_format {
        OutputFormat::Csv => rep.table.to_csv(),
        OutputFormat::Json => {
            let mut top = Map::new();
            top.insert("config".into(), cfg.echo.clone());
            top.insert("results".into(), rep.table.to_json_rows());
            for (k, v) in &rep.extra {
                top.insert(k.clone(), v.clone());
            }
            top.insert("errors".into(), Value::Array(rep.errors.iter().map(ErrorRecord::to_json).collect()));
            top.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

pub fn plot_script_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".plot.py");
    output.with_file_name(name)
}

/// A matplotlib script plotting every numeric column against the first one.
pub fn plot_script(data_file: &Path) -> String {
    let name = data_file.file_name().unwrap_or_default().to_string_lossy();
    format!(
        r#"# Plot every numeric column of {name} against its first column.
import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt

path = Path(__file__).with_name("{name}")
text = path.read_text()
if text.lstrip().startswith("{{"):
    rows = json.loads(text)["results"]
    header = list(rows[0].keys()) if rows else []
    rows = [[r[h] for h in header] for r in rows]
else:
    reader = csv.reader(text.splitlines())
    header = next(reader)
    rows = list(reader)


def num(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return None


xs = [num(r[0]) for r in rows]
fig, ax = plt.subplots()
for j in range(1, len(header)):
    pts = [(x, num(r[j])) for x, r in zip(xs, rows)]
    pts = [(x, y) for x, y in pts if x is not None and y is not None]
    if pts:
        ax.plot(*zip(*pts), marker="o", label=header[j])
ax.set_xlabel(header[0] if header else "")
ax.legend()
out = path.with_suffix(".png")
fig.savefig(out, dpi=150)
print(out, file=sys.stderr)
"#
    )
}
