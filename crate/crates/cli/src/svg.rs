//! Self-contained SVG plots: paths, rectangles and text only.

use std::fmt::Write as _;

use cwwr::eos::{Branch, IsothermCurve};
use cwwr::phase::{critical_mu, spinodal_eta};

use crate::commands::{Cell, OrderRow};
use crate::Failure;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

fn fmt_err(_: std::fmt::Error) -> Failure {
    Failure::Numerical("failed to format svg".into())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round tick values: steps of 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0 && span.is_finite()) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    out: String,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64, title: &str, manifest: &str) -> Result<Self, Failure> {
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .map_err(fmt_err)?;
        writeln!(out, "<metadata>{}</metadata>", escape(manifest.trim_end())).map_err(fmt_err)?;
        writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).map_err(fmt_err)?;
        writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        )
        .map_err(fmt_err)?;
        writeln!(
            out,
            r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        )
        .map_err(fmt_err)?;
        Ok(Frame { x0, x1, y0, y1, out })
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64, dash: Option<&str>) -> Result<(), Failure> {
        let finite: Vec<_> = pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if finite.len() < 2 {
            return Ok(());
        }
        let mut d = String::new();
        for (i, (x, y)) in finite.iter().enumerate() {
            write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, self.px(*x), self.py(*y)).map_err(fmt_err)?;
        }
        let dash = dash.map(|s| format!(r#" stroke-dasharray="{s}""#)).unwrap_or_default();
        writeln!(
            self.out,
            r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash} clip-path="url(#plot)"/>"#
        )
        .map_err(fmt_err)
    }

    fn legend(&mut self, entries: &[(&str, &str)]) -> Result<(), Failure> {
        let chars = entries.iter().map(|(_, l)| l.chars().count()).max().unwrap_or(0);
        let (x, y) = (LEFT + 10.0, TOP + 10.0);
        writeln!(
            self.out,
            r##"<rect x="{x}" y="{y}" width="{:.1}" height="{:.1}" fill="white" fill-opacity="0.9" stroke="#999999"/>"##,
            34.0 + 7.0 * chars as f64,
            8.0 + 16.0 * entries.len() as f64
        )
        .map_err(fmt_err)?;
        for (row, (color, label)) in entries.iter().enumerate() {
            let base = y + 18.0 + 16.0 * row as f64;
            writeln!(
                self.out,
                r##"<rect x="{}" y="{:.1}" width="16" height="8" fill="{color}" stroke="#666666" stroke-width="0.5"/><text x="{}" y="{:.1}">{}</text>"##,
                x + 8.0,
                base - 8.0,
                x + 30.0,
                base,
                escape(label)
            )
            .map_err(fmt_err)?;
        }
        Ok(())
    }

    fn finish(mut self, xlabel: &str, ylabel: &str) -> Result<String, Failure> {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        writeln!(
            self.out,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        )
        .map_err(fmt_err)?;
        for x in ticks(self.x0, self.x1) {
            let p = self.px(x);
            writeln!(
                self.out,
                r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/><text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#,
                b + 5.0,
                b + 19.0,
                tick_label(x)
            )
            .map_err(fmt_err)?;
        }
        for y in ticks(self.y0, self.y1) {
            let p = self.py(y);
            writeln!(
                self.out,
                r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                l - 5.0,
                l - 8.0,
                p + 4.0,
                tick_label(y)
            )
            .map_err(fmt_err)?;
        }
        writeln!(
            self.out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 14.0,
            escape(xlabel)
        )
        .map_err(fmt_err)?;
        writeln!(
            self.out,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        )
        .map_err(fmt_err)?;
        self.out.push_str("</svg>\n");
        Ok(self.out)
    }
}

fn cell_edges(grid: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 { grid[0] } else { 0.5 * (grid[i - 1] + grid[i]) };
    let hi = if i + 1 == grid.len() { grid[i] } else { 0.5 * (grid[i] + grid[i + 1]) };
    (lo, hi)
}

/// Spinodal branches `eta = +/- eta_s(xi)` as one path through the apex.
fn spinodal_path(a: f64, reach: f64) -> Vec<(f64, f64)> {
    let n = 400;
    let s_max = (reach - 1.0).max(0.0).sqrt();
    let branch: Vec<(f64, f64)> = (0..=n)
        .filter_map(|k| {
            let s = s_max * k as f64 / n as f64;
            let xi = 1.0 + s * s;
            let eta = spinodal_eta(xi).ok()?;
            let mean = xi - a.ln();
            Some((mean - eta, mean + eta))
        })
        .collect();
    let mut path: Vec<(f64, f64)> = branch.iter().rev().map(|&(m0, m1)| (m1, m0)).collect();
    path.extend(branch.iter().skip(1));
    path
}

pub fn phase_diagram(a: f64, g0: &[f64], g1: &[f64], cells: &[Cell], manifest: &str) -> Result<String, Failure> {
    let (x0, x1) = (g0[0], g0[g0.len() - 1]);
    let (y0, y1) = (g1[0], g1[g1.len() - 1]);
    let mut f = Frame::new(x0, x1, y0, y1, &format!("Phase diagram at a = {}", tick_label(a)), manifest)?;
    for (j, _) in g1.iter().enumerate() {
        let (ylo, yhi) = cell_edges(g1, j);
        for (i, _) in g0.iter().enumerate() {
            let c = &cells[j * g0.len() + i];
            let fill = match c.root_count {
                3 => "#c8c8c8",
                2 => "#808080",
                _ => continue,
            };
            let (xlo, xhi) = cell_edges(g0, i);
            let (px0, px1) = (f.px(xlo), f.px(xhi));
            let (py0, py1) = (f.py(yhi), f.py(ylo));
            writeln!(
                f.out,
                r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{fill}" shape-rendering="crispEdges"/>"#,
                px1 - px0 + 0.5,
                py1 - py0 + 0.5
            )
            .map_err(fmt_err)?;
        }
    }
    // Far enough along the diagonal to leave the window.
    let reach = (x1.max(y1) - x0.min(y0)) * 2.0 + x1.max(y1) + a.ln() + 2.0;
    f.polyline(&spinodal_path(a, reach), "#1f4e9c", 1.5, None)?;
    let mc = critical_mu(a);
    let end = x1.max(y1) + (x1 - x0) + (y1 - y0);
    f.polyline(&[(mc, mc), (end, end)], "#c0392b", 2.0, None)?;
    if (x0..=x1).contains(&mc) && (y0..=y1).contains(&mc) {
        writeln!(
            f.out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#c0392b"/>"##,
            f.px(mc),
            f.py(mc)
        )
        .map_err(fmt_err)?;
    }
    f.legend(&[
        ("#c8c8c8", "three stationary points"),
        ("#1f4e9c", "spinodal"),
        ("#c0392b", "coexistence line and critical point"),
    ])?;
    f.finish("μ0", "μ1")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

pub fn isotherm(curve: &IsothermCurve, manifest: &str) -> Result<String, Failure> {
    let s = &curve.samples;
    let (x0, x1) = (s[0].rho, s[s.len() - 1].rho);
    let (y0, y1) = bounds(s.iter().map(|p| p.p_hat));
    let mut f = Frame::new(
        x0,
        x1,
        y0,
        y1,
        &format!("Isotherm at a = {}, θ = {}", tick_label(curve.a), tick_label(curve.theta)),
        manifest,
    )?;
    for (branch, color) in [(Branch::Low, "#1f4e9c"), (Branch::Plateau, "#c0392b"), (Branch::High, "#1f4e9c")] {
        let pts: Vec<(f64, f64)> = s.iter().filter(|p| p.branch == branch).map(|p| (p.rho, p.p_hat)).collect();
        f.polyline(&pts, color, 1.8, None)?;
    }
    if curve.plateau.is_some() {
        f.legend(&[("#1f4e9c", "stable branches"), ("#c0392b", "plateau")])?;
    } else {
        f.legend(&[("#1f4e9c", "isotherm")])?;
    }
    f.finish("ρ", "p̂")
}

pub fn order_parameter(a: f64, rows: &[OrderRow], manifest: &str) -> Result<String, Failure> {
    let (x0, x1) = (rows[0].mu, rows[rows.len() - 1].mu);
    let (y0, y1) = bounds(rows.iter().flat_map(|r| [r.z_plus, r.z_minus, r.ybar]));
    let mut f = Frame::new(x0, x1, y0.min(0.0), y1, &format!("Order parameter at a = {}", tick_label(a)), manifest)?;
    let series = |g: fn(&OrderRow) -> f64| rows.iter().map(|r| (r.mu, g(r))).collect::<Vec<_>>();
    f.polyline(&series(|r| r.z_plus), "#1f4e9c", 1.8, None)?;
    f.polyline(&series(|r| r.z_minus), "#1f4e9c", 1.8, Some("6 4"))?;
    f.polyline(&series(|r| r.ybar), "#c0392b", 1.8, None)?;
    f.legend(&[("#1f4e9c", "z+ (solid), z- (dashed)"), ("#c0392b", "ybar")])?;
    f.finish("μ", "")
}
