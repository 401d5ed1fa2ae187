//! Parameter sweeps over (n, d), written as CSV and a small SVG chart.

use std::collections::BTreeMap;
use std::io;

use super::engine::{derive_seed, run_once, SimConfig, SimResult};

/// What a CSV row describes.
#[derive(Debug, Clone, PartialEq)]
pub enum RowKind {
    Run { rep: usize, result: SimResult },
    Mean { t_full: Option<f64>, messages: f64, bytes: f64 },
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub nodes: usize,
    pub degree: usize,
    pub mode: String,
    pub seed: u64,
    pub kind: RowKind,
}

impl SweepRow {
    pub fn t_full(&self) -> Option<f64> {
        match &self.kind {
            RowKind::Run { result, .. } => result.full_propagation_time,
            RowKind::Mean { t_full, .. } => *t_full,
            RowKind::Error(_) => None,
        }
    }

    pub fn is_mean(&self) -> bool {
        matches!(self.kind, RowKind::Mean { .. })
    }
}

/// Every (n, d) cell, each with `template.repetitions` runs followed by a
/// mean row. A failing repetition becomes an error row and the cell's mean
/// is skipped.
pub fn sweep(template: &SimConfig, ns: &[usize], ds: &[usize]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &n in ns {
        for &d in ds {
            let config = SimConfig {
                nodes: n,
                degree: d,
                ..template.clone()
            };
            rows.extend(sweep_cell(&config));
        }
    }
    rows
}

/// The rows for one configuration.
pub fn sweep_cell(config: &SimConfig) -> Vec<SweepRow> {
    let row = |seed, kind| SweepRow {
        nodes: config.nodes,
        degree: config.degree,
        mode: config.mode.label(),
        seed,
        kind,
    };
    if let Err(e) = config.validate() {
        return vec![row(config.seed, RowKind::Error(e.to_string()))];
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for rep in 0..config.repetitions {
        let seed = derive_seed(config.seed, rep as u64);
        match run_once(config, rep) {
            Ok(result) => {
                results.push(result.clone());
                rows.push(row(seed, RowKind::Run { rep, result }));
            }
            Err(e) => rows.push(row(seed, RowKind::Error(e.to_string()))),
        }
    }
    if results.len() == config.repetitions {
        let k = results.len() as f64;
        let t_full = results
            .iter()
            .map(|r| r.full_propagation_time)
            .sum::<Option<f64>>()
            .map(|t| t / k);
        rows.push(row(
            config.seed,
            RowKind::Mean {
                t_full,
                messages: results.iter().map(|r| r.messages_sent as f64).sum::<f64>() / k,
                bytes: results.iter().map(|r| r.bytes_sent as f64).sum::<f64>() / k,
            },
        ));
    }
    rows
}

pub const CSV_HEADER: [&str; 8] = ["n", "d", "mode", "seed", "rep", "t_full", "messages", "bytes"];

/// Columns as in [`CSV_HEADER`]. `rep` is the repetition index, `mean`, or
/// `error`; `t_full` is empty when the run hit its time cap and holds the
/// message on error rows.
pub fn write_csv<W: io::Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let fmt_t = |t: Option<f64>| t.map(|t| format!("{t:.6}")).unwrap_or_default();
    for r in rows {
        let (rep, t_full, messages, bytes) = match &r.kind {
            RowKind::Run { rep, result } => (
                rep.to_string(),
                fmt_t(result.full_propagation_time),
                result.messages_sent.to_string(),
                result.bytes_sent.to_string(),
            ),
            RowKind::Mean {
                t_full,
                messages,
                bytes,
            } => ("mean".into(), fmt_t(*t_full), format!("{messages:.1}"), format!("{bytes:.1}")),
            RowKind::Error(e) => ("error".into(), e.clone(), String::new(), String::new()),
        };
        w.write_record([
            r.nodes.to_string(),
            r.degree.to_string(),
            r.mode.clone(),
            r.seed.to_string(),
            rep,
            t_full,
            messages,
            bytes,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Mean propagation time against n (log scale), one line per d.
pub fn render_svg(rows: &[SweepRow]) -> String {
    let mut series: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_mean()) {
        if let Some(t) = r.t_full() {
            series.entry(r.degree).or_default().push((r.nodes, t));
        }
    }
    for points in series.values_mut() {
        points.sort_by_key(|p| p.0);
    }
    let (w, h, pad) = (640.0, 400.0, 60.0);
    let xs = series.values().flatten().map(|p| (p.0 as f64).log10());
    let (xmin, xmax) = xs.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
    let ymax = series.values().flatten().map(|p| p.1).fold(0.0, f64::max);
    let (xmin, xmax) = if xmin >= xmax { (xmin - 0.5, xmin + 0.5) } else { (xmin, xmax) };
    let ymax = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let px = |n: usize| pad + ((n as f64).log10() - xmin) / (xmax - xmin) * (w - 2.0 * pad);
    let py = |t: f64| h - pad - t / ymax * (h - 2.0 * pad);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg += &format!(
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - pad,
        w - pad
    );
    svg += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">clients (log scale)</text>\n",
        w / 2.0,
        h - 15.0
    );
    svg += &format!(
        "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">full propagation time (s)</text>\n",
        h / 2.0,
        h / 2.0
    );
    for i in 0..=4 {
        let t = ymax * i as f64 / 4.0;
        svg += &format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{t:.1}</text>\n",
            pad - 5.0,
            py(t) + 4.0
        );
    }
    let ticks: Vec<usize> = series.values().flatten().map(|p| p.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for n in ticks {
        svg += &format!(
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{n}</text>\n",
            px(n),
            h - pad + 16.0
        );
    }
    for (i, (d, points)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(n, t)| format!("{:.1},{:.1}", px(n), py(t)))
            .collect();
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        );
        for &(n, t) in points {
            svg += &format!("<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{colour}\"/>\n", px(n), py(t));
        }
        svg += &format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">d = {d}</text>\n",
            w - pad + 5.0,
            pad + 16.0 * i as f64
        );
    }
    svg += "</svg>\n";
    svg
}
