//! Result tables as CSV and log-log SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "eps",
    "dt",
    "err_l2_wave",
    "err_amp",
    "err_gradphase",
    "err_phase_inf",
    "err_rho",
    "err_J",
    "walltime_s",
    "steps",
];

/// One sweep cell; absent errors are empty CSV fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub eps: f64,
    pub dt: f64,
    pub err_l2_wave: Option<f64>,
    pub err_amp: Option<f64>,
    pub err_gradphase: Option<f64>,
    pub err_phase_inf: Option<f64>,
    pub err_rho: Option<f64>,
    #[serde(rename = "err_J")]
    pub err_j: Option<f64>,
    pub walltime_s: f64,
    pub steps: usize,
}

pub type Metric = (&'static str, fn(&ResultRow) -> Option<f64>);

pub const METRICS: [Metric; 6] = [
    ("err_l2_wave", |r| r.err_l2_wave),
    ("err_amp", |r| r.err_amp),
    ("err_gradphase", |r| r.err_gradphase),
    ("err_phase_inf", |r| r.err_phase_inf),
    ("err_rho", |r| r.err_rho),
    ("err_J", |r| r.err_j),
];

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error(path))?;
    w.write_record(CSV_HEADER).map_err(csv_error(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = r.headers().map_err(csv_error(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_error(path))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn decades(values: impl Iterator<Item = f64>) -> (i32, i32) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let l = v.log10();
        (lo.min(l), hi.max(l))
    });
    let (lo, hi) = (lo.floor() as i32, hi.ceil() as i32);
    if lo == hi {
        (lo, hi + 1)
    } else {
        (lo, hi)
    }
}

/// Series of `(dt, error)` per `eps`, sorted by `eps` descending and `dt` ascending.
fn series(rows: &[ResultRow], metric: fn(&ResultRow) -> Option<f64>) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut out: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let Some(e) = metric(row).filter(|e| *e > 0.0 && e.is_finite()) else {
            continue;
        };
        match out.iter_mut().find(|(eps, _)| *eps == row.eps) {
            Some((_, pts)) => pts.push((row.dt, e)),
            None => out.push((row.eps, vec![(row.dt, e)])),
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Log-log plot of one metric against `dt`, one polyline per `eps`.
/// Returns `None` when the metric has no positive values.
pub fn render_svg(rows: &[ResultRow], name: &str, metric: fn(&ResultRow) -> Option<f64>) -> Option<String> {
    let data = series(rows, metric);
    if data.is_empty() {
        return None;
    }
    let (x0, x1) = decades(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y0, y1) = decades(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - x0 as f64) / (x1 - x0) as f64 * plot_w;
    let py = |y: f64| TOP + plot_h - (y.log10() - y0 as f64) / (y1 - y0) as f64 * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{name}</text>"#,
        LEFT + plot_w / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for k in x0..=x1 {
        let x = LEFT + (k - x0) as f64 / (x1 - x0) as f64 * plot_w;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{k}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    for k in y0..=y1 {
        let y = TOP + plot_h - (k - y0) as f64 / (y1 - y0) as f64 * plot_h;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">1e{k}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">dt</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    for (i, (eps, pts)) in data.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">eps = {eps}</text>"#,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

pub fn emit_svg(rows: &[ResultRow], name: &str, metric: fn(&ResultRow) -> Option<f64>, path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    match render_svg(rows, name, metric) {
        Some(svg) => {
            fs::write(path, svg).map_err(|e| Error::io(path, e))?;
            Ok(true)
        }
        None => Ok(false),
    }
}

/// One `<metric>.svg` per metric with data; returns the written paths.
pub fn emit_plots(rows: &[ResultRow], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, metric) in METRICS {
        let path = dir.as_ref().join(format!("{name}.svg"));
        if emit_svg(rows, name, metric, &path)? {
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eps: f64, dt: f64, e: f64) -> ResultRow {
        ResultRow {
            eps,
            dt,
            err_amp: Some(e),
            err_rho: Some(2.0 * e),
            walltime_s: 0.5,
            steps: 10,
            ..Default::default()
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_csv(&[], &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "eps,dt,err_l2_wave,err_amp,err_gradphase,err_phase_inf,err_rho,err_J,walltime_s,steps\n"
        );
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn row_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let r = row(0.1, 0.0125, 3.25e-4);
        emit_csv(std::slice::from_ref(&r), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0.1,0.0125,,0.000325,,,0.00065,,0.5,10");
        assert_eq!(read_csv(&path).unwrap(), vec![r]);
    }

    #[test]
    fn rejects_foreign_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn axes_span_whole_decades() {
        assert_eq!(decades([0.003, 0.04].into_iter()), (-3, -1));
        assert_eq!(decades([0.01].into_iter()), (-2, -1));
        let rows = vec![row(0.1, 0.01, 1e-4), row(0.1, 0.02, 2e-4)];
        let svg = render_svg(&rows, "err_amp", |r| r.err_amp).unwrap();
        assert!(svg.contains(">1e-2<") && svg.contains(">1e-1<"));
        assert!(svg.contains(">1e-4<") && svg.contains(">1e-3<"));
        assert!(render_svg(&rows, "err_J", |r| r.err_j).is_none());
    }
}
