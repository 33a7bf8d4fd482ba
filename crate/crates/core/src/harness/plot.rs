//! Hand-written SVG charts: return curves with ±1 std bands and the
//! success-rate heat map of the robustness grid.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::grid::GridTable;
use super::{read_aggregate, AggregatePoint};
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn write_file(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Line chart of mean normalized return with a shaded ±std band per series.
pub fn curves_svg(series: &[(String, Vec<AggregatePoint>)], title: &str) -> Result<String> {
    if series.is_empty() || series.iter().any(|(_, p)| p.is_empty()) {
        return Err(Error::Parse("no aggregate points to plot".into()));
    }
    let max_step = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.global_step))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let x = |s: u64| LEFT + pw * s as f64 / max_step;
    let y = |v: f64| TOP + ph * (1.0 - v.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y(v) + 4.0,
            y = y(v)
        );
        let s = (max_step * v) as u64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{s}</text>"#,
            x(s),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">environment steps</text>"#,
        LEFT + pw / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">normalized return</text>"#,
        TOP + ph / 2.0
    );

    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", x(p.global_step), y(p.mean + p.std))).collect();
        let lower: Vec<String> = pts
            .iter()
            .rev()
            .map(|p| format!("{:.1},{:.1}", x(p.global_step), y(p.mean - p.std)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", x(p.global_step), y(p.mean))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn heat_color(rate: f64) -> String {
    // white to dark blue
    let t = rate.clamp(0.0, 1.0);
    let r = (247.0 - t * (247.0 - 8.0)) as u8;
    let g = (251.0 - t * (251.0 - 48.0)) as u8;
    let b = (255.0 - t * (255.0 - 107.0)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of success rate, rows = noise σ, columns = horizon, for one method.
pub fn grid_svg(table: &GridTable, method: &str, sigmas: &[f64], cases: &[usize]) -> Result<String> {
    if !table.cells.iter().any(|c| c.method == method) {
        return Err(Error::Parse(format!("no grid cells for method '{method}'")));
    }
    let cw = 64.0;
    let ch = 40.0;
    let left = 80.0;
    let top = 50.0;
    let w = left + cw * cases.len() as f64 + 20.0;
    let h = top + ch * sigmas.len() as f64 + 50.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{} success rate</text>"#,
        w / 2.0,
        escape(method)
    );
    for (r, &sigma) in sigmas.iter().enumerate() {
        let yy = top + ch * r as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">σ {sigma} cm</text>"#,
            left - 8.0,
            yy + ch / 2.0 + 4.0
        );
        for (c, &case) in cases.iter().enumerate() {
            let xx = left + cw * c as f64;
            let (fill, label, ink) = match table.cell(method, sigma, case) {
                Some(cell) => {
                    let ink = if cell.success_rate > 0.55 { "white" } else { "black" };
                    (heat_color(cell.success_rate), format!("{:.2}", cell.success_rate), ink)
                }
                None => ("#eeeeee".to_string(), "n/a".to_string(), "#777"),
            };
            let _ = writeln!(
                svg,
                r#"<rect x="{xx}" y="{yy}" width="{cw}" height="{ch}" fill="{fill}" stroke="white"/><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{label}</text>"#,
                xx + cw / 2.0,
                yy + ch / 2.0 + 4.0
            );
        }
    }
    let base = top + ch * sigmas.len() as f64;
    for (c, &case) in cases.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{case}</text>"#,
            left + cw * c as f64 + cw / 2.0,
            base + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">task horizon (case)</text>"#,
        left + cw * cases.len() as f64 / 2.0,
        base + 36.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads `aggregate.csv` from each run directory and writes one curve chart.
/// The series label is the directory name.
pub fn plot_curves(run_dirs: &[PathBuf], title: &str, out: &Path) -> Result<()> {
    let mut series = Vec::new();
    for dir in run_dirs {
        let label = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        series.push((label, read_aggregate(&dir.join("aggregate.csv"))?));
    }
    let svg = curves_svg(&series, title)?;
    write_file(out, &svg)
}

/// One heat map per method in `grid.csv`, written as `grid-<method>.svg`
/// beside it. Returns the files written.
pub fn plot_grid(grid_csv: &Path) -> Result<Vec<PathBuf>> {
    let table = GridTable::read_csv(grid_csv)?;
    if table.cells.is_empty() {
        return Err(Error::Parse(format!("{}: no grid cells", grid_csv.display())));
    }
    let mut sigmas: Vec<f64> = Vec::new();
    let mut cases: Vec<usize> = Vec::new();
    for c in &table.cells {
        if !sigmas.contains(&c.sigma_cm) {
            sigmas.push(c.sigma_cm);
        }
        if !cases.contains(&c.case) {
            cases.push(c.case);
        }
    }
    sigmas.sort_by(f64::total_cmp);
    cases.sort_unstable();
    let dir = grid_csv.parent().unwrap_or(Path::new("."));
    let mut written = Vec::new();
    for m in table.methods() {
        let path = dir.join(format!("grid-{m}.svg"));
        write_file(&path, &grid_svg(&table, &m, &sigmas, &cases)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Curves for every run directory that has an `aggregate.csv` and heat maps
/// for a `grid.csv`, all written into `out_dir`.
pub fn emit_plots(run_dirs: &[PathBuf], grid_csv: Option<&Path>, out_dir: &Path, title: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if !run_dirs.is_empty() {
        let path = out_dir.join("returns.svg");
        plot_curves(run_dirs, title, &path)?;
        written.push(path);
    }
    if let Some(g) = grid_csv {
        for p in plot_grid(g)? {
            let target = out_dir.join(p.file_name().expect("grid svg has a name"));
            if target != p {
                fs::rename(&p, &target).map_err(|e| Error::io(&target, e))?;
            }
            written.push(target);
        }
    }
    if written.is_empty() {
        return Err(Error::Config("nothing to plot".into()));
    }
    Ok(written)
}
