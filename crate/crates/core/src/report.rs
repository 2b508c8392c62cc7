//! Output artifacts: selection JSON, comparison and score-table CSV, spectrum
//! dumps and a minimal SVG scatter plot.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::KernelFamily;
use crate::pgreedy::{SelectionState, StopReason};
use crate::spectral::Spectrum;
use crate::tuning::{CvResult, CvSpec};

/// Shortest round-trip decimal; scientific notation outside `[1e-6, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-6..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutput {
    pub nodes: Vec<usize>,
    pub max_power: Vec<f64>,
    pub max_residual: Vec<f64>,
    pub mean_residual: Vec<f64>,
    pub kernel: String,
    pub laplacian: String,
    pub tolerance: f64,
    pub stop_reason: Option<StopReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SelectionOutput {
    pub fn new(state: &SelectionState, graph: &Graph, kernel: String, laplacian: String, tolerance: f64) -> Self {
        let history = state.history();
        SelectionOutput {
            nodes: state.chosen().to_vec(),
            max_power: history.iter().map(|h| h.max_power).collect(),
            max_residual: history.iter().map(|h| h.max_residual).collect(),
            mean_residual: history.iter().map(|h| h.mean_residual).collect(),
            kernel,
            laplacian,
            tolerance,
            stop_reason: state.stop_reason(),
            labels: graph
                .labels()
                .map(|l| state.chosen().iter().map(|&v| l[v].clone()).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("selection serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub k: usize,
    pub node_id: usize,
    pub max_std: f64,
    pub mean_std: f64,
    pub ic_score: f64,
}

pub const COMPARISON_HEADER: &str = "method,k,node_id,max_std,mean_std,ic_score";

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.k,
            r.node_id,
            fmt_float(r.max_std),
            fmt_float(r.mean_std),
            fmt_float(r.ic_score)
        );
    }
    out
}

/// Reads back a comparison CSV written by [`comparison_csv`].
pub fn parse_comparison_csv(text: &str) -> Result<Vec<ComparisonRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == COMPARISON_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {COMPARISON_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let bad = |msg: &str| Error::Parse {
            line: idx + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
        rows.push(ComparisonRow {
            method: f[0].to_string(),
            k: f[1].parse().map_err(|_| bad("invalid k"))?,
            node_id: f[2].parse().map_err(|_| bad("invalid node id"))?,
            max_std: num(f[3])?,
            mean_std: num(f[4])?,
            ic_score: num(f[5])?,
        });
    }
    Ok(rows)
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, l) in s.eigenvalues().iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_float(*l));
    }
    out
}

/// Row `v`, column `k` holds `u_k(v)`.
pub fn eigenvectors_csv(s: &Spectrum) -> String {
    let n = s.len();
    let mut out = String::from("node");
    for k in 0..n {
        let _ = write!(out, ",u{k}");
    }
    out.push('\n');
    for v in 0..n {
        let _ = write!(out, "{v}");
        for x in s.modes_at(v) {
            let _ = write!(out, ",{}", fmt_float(*x));
        }
        out.push('\n');
    }
    out
}

fn family_params(f: &KernelFamily) -> Vec<(&'static str, f64)> {
    match f {
        KernelFamily::Diffusion { t } => vec![("t", *t)],
        KernelFamily::VariationalSpline { eps, s } => vec![("eps", *eps), ("s", *s)],
        KernelFamily::CustomSpectral { .. } => vec![],
    }
}

/// One row per grid point in evaluation order, with per-fold errors.
pub fn score_table_csv(result: &CvResult) -> String {
    let mut out = String::from("index");
    let Some(first) = result.table.first() else {
        return out + "\n";
    };
    for (name, _) in family_params(&first.family) {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",score");
    for i in 0..first.fold_errors.len() {
        let _ = write!(out, ",fold{i}");
    }
    out.push('\n');
    for (i, p) in result.table.iter().enumerate() {
        let _ = write!(out, "{i}");
        for (_, x) in family_params(&p.family) {
            let _ = write!(out, ",{}", fmt_float(x));
        }
        let _ = write!(out, ",{}", fmt_float(p.score));
        for e in &p.fold_errors {
            let _ = write!(out, ",{}", fmt_float(*e));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestParams {
    pub kernel: String,
    pub spec: String,
    pub params: std::collections::BTreeMap<String, f64>,
    pub score: f64,
    pub folds: usize,
    pub seed: u64,
    pub metric: String,
    pub grid_points: usize,
}

impl BestParams {
    pub fn new(result: &CvResult, spec: &CvSpec) -> Self {
        BestParams {
            kernel: result.best.name().to_string(),
            spec: result.best.spec().map(|s| s.to_string()).unwrap_or_default(),
            params: family_params(&result.best)
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            score: result.best_score,
            folds: spec.folds,
            seed: spec.seed,
            metric: spec.metric.to_string(),
            grid_points: result.table.len(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("best params serialize") + "\n"
    }
}

/// Maps `t` in `[0, 1]` onto a dark-blue to yellow ramp.
fn ramp(t: f64) -> String {
    let stops = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let (lo, hi) = if t <= 0.5 {
        (stops[0], stops[1])
    } else {
        (stops[1], stops[2])
    };
    let f = (t - lo.0) / (hi.0 - lo.0);
    let c: Vec<u8> = (0..3)
        .map(|i| (lo.1[i] + f * (hi.1[i] - lo.1[i])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Scatter plot of node positions colored by `values`, with `highlight`
/// nodes circled. Requires node positions.
pub fn svg_scatter(g: &Graph, values: &[f64], highlight: &[usize]) -> Result<String> {
    let pos = g
        .positions()
        .ok_or_else(|| Error::InvalidParameter("graph has no node positions to plot".into()))?;
    if values.len() != g.node_count() {
        return Err(Error::Dimension {
            expected: g.node_count(),
            got: values.len(),
        });
    }
    const SIZE: f64 = 600.0;
    const PAD: f64 = 20.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pos {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let map = |p: [f64; 2]| {
        (
            PAD + (p[0] - x0) / span * (SIZE - 2.0 * PAD),
            SIZE - PAD - (p[1] - y0) / span * (SIZE - 2.0 * PAD),
        )
    };
    let vmax = values.iter().copied().fold(0.0f64, f64::max);
    let vmin = values.iter().copied().fold(vmax, f64::min);
    let range = if vmax > vmin { vmax - vmin } else { 1.0 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r##"<g stroke="#bbbbbb" stroke-width="0.5">"##);
    for e in g.edges() {
        let (a, b) = (map(pos[e.u]), map(pos[e.v]));
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            a.0, a.1, b.0, b.1
        );
    }
    let _ = writeln!(out, "</g>");
    for (v, &p) in pos.iter().enumerate() {
        let (x, y) = map(p);
        let color = ramp((values[v] - vmin) / range);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"><title>{v}</title></circle>"#
        );
    }
    for &v in highlight {
        let (x, y) = map(pos[v]);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="7" fill="none" stroke="red" stroke-width="1.5"/>"#
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(0.75), "0.75");
        assert_eq!(fmt_float(1e-20), "1e-20");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(-2.5e20).parse::<f64>().unwrap(), -2.5e20);
    }

    #[test]
    fn comparison_round_trip() {
        let rows = vec![ComparisonRow {
            method: "kernel".into(),
            k: 1,
            node_id: 3,
            max_std: 0.1 + 0.2,
            mean_std: 1e-13,
            ic_score: 0.5,
        }];
        assert_eq!(parse_comparison_csv(&comparison_csv(&rows)).unwrap(), rows);
        assert!(parse_comparison_csv("nope\n").is_err());
    }

    #[test]
    fn svg_needs_positions() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        assert!(svg_scatter(&g, &[0.0, 1.0], &[0]).is_err());
        let g = g.with_positions(vec![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let svg = svg_scatter(&g, &[0.0, 1.0], &[0]).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("stroke=\"red\""));
        assert_eq!(ramp(0.0), "#440154");
    }
}
