//! On-disk formats: JSON-lines datasets, JSON documents, CSV traces and
//! curves, and small SVG plots.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use lbi_core::data::VqaExample;
use lbi_core::lbi::EpochSnapshot;
use lbi_core::ssl::CurvePoint;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Reads one example per non-blank line. An empty file is an empty dataset.
pub fn load_dataset(path: &Path) -> Result<Vec<VqaExample>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = serde_json::from_str(&line).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(ex);
    }
    Ok(out)
}

pub fn dataset_bytes(examples: &[VqaExample]) -> Vec<u8> {
    let mut out = Vec::new();
    for ex in examples {
        serde_json::to_writer(&mut out, ex).expect("examples serialize");
        out.push(b'\n');
    }
    out
}

pub fn save_dataset(examples: &[VqaExample], path: &Path) -> Result<()> {
    write_bytes(path, &dataset_bytes(examples))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("value serializes");
    out.push(b'\n');
    out
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), line: e.line(), detail: e.to_string() })
}

fn csv_bytes<F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>>(f: F) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w).expect("writing CSV to memory");
    w.into_inner().expect("flushing CSV to memory")
}

/// `epoch,example_id,a,loss,corrupted`, one row per example per epoch. The
/// `corrupted` column is present only when `corrupted` is given.
pub fn trace_csv(trace: &[EpochSnapshot], ids: &[u64], corrupted: Option<&[bool]>) -> Vec<u8> {
    csv_bytes(|w| {
        if corrupted.is_some() {
            w.write_record(["epoch", "example_id", "a", "loss", "corrupted"])?;
        } else {
            w.write_record(["epoch", "example_id", "a", "loss"])?;
        }
        for snap in trace {
            for (i, id) in ids.iter().enumerate() {
                let mut row = vec![snap.epoch.to_string(), id.to_string(), snap.a[i].to_string(), snap.losses[i].to_string()];
                if let Some(c) = corrupted {
                    row.push(u8::from(c[i]).to_string());
                }
                w.write_record(&row)?;
            }
        }
        Ok(())
    })
}

/// `epoch,loss_iq,loss_ia,loss_qa,loss_joint`; a task without data is blank.
pub fn curves_csv(curves: &[CurvePoint]) -> Vec<u8> {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    csv_bytes(|w| {
        w.write_record(["epoch", "loss_iq", "loss_ia", "loss_qa", "loss_joint"])?;
        for c in curves {
            w.write_record([c.epoch.to_string(), cell(c.loss_iq), cell(c.loss_ia), cell(c.loss_qa), c.loss_joint.to_string()])?;
        }
        Ok(())
    })
}

const W: f64 = 480.0;
const H: f64 = 300.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn svg_frame(title: &str, body: &str, x_label: &str, y_range: (f64, f64)) -> Vec<u8> {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
<text x=\"{tx}\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">{title}</text>\n\
<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
<text x=\"{tx}\" y=\"{xl}\" text-anchor=\"middle\">{x_label}</text>\n\
<text x=\"4\" y=\"{PAD}\">{hi:.3}</text>\n<text x=\"4\" y=\"{b}\">{lo:.3}</text>\n{body}</svg>\n",
        tx = W / 2.0,
        b = H - PAD,
        r = W - PAD / 2.0,
        xl = H - 8.0,
        lo = y_range.0,
        hi = y_range.1,
    )
    .into_bytes()
}

/// Line plot of named series over their index.
pub fn line_plot_svg(title: &str, x_label: &str, series: &[(&str, Vec<f64>)]) -> Vec<u8> {
    let values = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, if hi > lo { hi } else { lo + 1.0 }) } else { (0.0, 1.0) };
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let x = |i: usize| PAD + (W - 1.5 * PAD) * i as f64 / (len - 1) as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let mut body = String::new();
    for (k, (name, v)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> =
            v.iter().enumerate().filter(|(_, v)| v.is_finite()).map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
        body.push_str(&format!("<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n", pts.join(" ")));
        body.push_str(&format!("<text x=\"{:.0}\" y=\"{:.0}\" fill=\"{color}\">{name}</text>\n", W - 140.0, PAD + 14.0 * k as f64));
    }
    svg_frame(title, &body, x_label, (lo, hi))
}

/// Histogram of values in [0, 1], optionally split into two stacked groups.
pub fn histogram_svg(title: &str, values: &[f64], group: Option<&[bool]>, bins: usize) -> Vec<u8> {
    let bins = bins.max(1);
    let mut counts = vec![[0usize; 2]; bins];
    for (i, v) in values.iter().enumerate() {
        let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        let g = group.map_or(0, |g| usize::from(g[i]));
        counts[b][g] += 1;
    }
    let top = counts.iter().map(|c| c[0] + c[1]).max().unwrap_or(0).max(1) as f64;
    let bw = (W - 1.5 * PAD) / bins as f64;
    let mut body = String::new();
    for (b, c) in counts.iter().enumerate() {
        let mut base = H - PAD;
        for (g, &n) in c.iter().enumerate() {
            let h = (H - 2.0 * PAD) * n as f64 / top;
            base -= h;
            if n > 0 {
                body.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                    PAD + bw * b as f64,
                    base,
                    bw - 1.0,
                    h,
                    COLORS[g]
                ));
            }
        }
    }
    if group.is_some() {
        body.push_str(&format!("<text x=\"{:.0}\" y=\"{PAD}\" fill=\"{}\">clean</text>\n", W - 140.0, COLORS[0]));
        body.push_str(&format!("<text x=\"{:.0}\" y=\"{:.0}\" fill=\"{}\">corrupted</text>\n", W - 140.0, PAD + 14.0, COLORS[1]));
    }
    svg_frame(title, &body, "a", (0.0, top))
}
