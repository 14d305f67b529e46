//! Simplex plots of posterior sets and diagram cells over a 2-simplex.

use std::fmt::Write as _;

use peerpred_core::geometry::PowerDiagram;
use peerpred_core::model::{posterior_sets, Grouping};
use peerpred_core::{cell_boundaries_2simplex, Instance};

use crate::CliError;

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 400.0;
const PAD: f64 = 40.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const BUCKET_TOL: f64 = 1e-9;

/// Barycentric `(p0, p1, p2)` to canvas coordinates: `e0` bottom left,
/// `e1` bottom right, `e2` on top.
fn to_canvas(p: &[f64]) -> (f64, f64) {
    let side = WIDTH - 2.0 * PAD;
    let height = side * 3f64.sqrt() / 2.0;
    let (ax, ay) = (PAD, HEIGHT - PAD);
    let (bx, by) = (PAD + side, HEIGHT - PAD);
    let (cx, cy) = (PAD + side / 2.0, HEIGHT - PAD - height);
    (p[0] * ax + p[1] * bx + p[2] * cx, p[0] * ay + p[1] * by + p[2] * cy)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws agent `agent`'s posteriors in the bucket of `marginal`, coloured by
/// truthful report, with the dashed cell boundaries of `diagram`.
pub fn render_simplex_svg(
    instance: &Instance,
    agent: usize,
    marginal: &[f64],
    diagram: &PowerDiagram<f64>,
) -> Result<String, CliError> {
    if agent >= instance.agent_count() {
        return Err(CliError::Validation(format!("agent {agent} does not exist")));
    }
    let peer = instance.peer_report_count(agent);
    if peer != 3 || marginal.len() != 3 || diagram.dimension() != 3 {
        return Err(CliError::Dimension(format!("plots need three peer reports, agent {agent} has {peer}")));
    }
    let segments = cell_boundaries_2simplex(diagram).map_err(|e| CliError::Dimension(e.to_string()))?;
    let peer_labels: Vec<String> = (0..3).map(|k| peer_label(instance, agent, k)).collect();

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        "<title>agent {agent}, marginal ({:.4}, {:.4}, {:.4})</title>",
        marginal[0], marginal[1], marginal[2]
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let corners: Vec<(f64, f64)> =
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().map(|p| to_canvas(p)).collect();
    let _ = writeln!(
        out,
        r#"<polygon points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        corners[0].0, corners[0].1, corners[1].0, corners[1].1, corners[2].0, corners[2].1
    );
    let offsets = [(-14.0, 18.0), (6.0, 18.0), (-4.0, -10.0)];
    for (k, ((x, y), (dx, dy))) in corners.iter().zip(offsets).enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="13">{}</text>"#,
            x + dx,
            y + dy,
            escape(&peer_labels[k])
        );
    }

    for seg in &segments {
        let (x1, y1) = to_canvas(&seg.start);
        let (x2, y2) = to_canvas(&seg.end);
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="dimgray" stroke-width="1.2" stroke-dasharray="6,4"/>"#
        );
    }

    let sets = posterior_sets(instance, agent, Grouping::ByMarginal);
    let mut reports_shown = Vec::new();
    for set in &sets {
        let Some(key) = &set.marginal_key else { continue };
        if key.iter().zip(marginal).any(|(a, b)| (a - b).abs() > BUCKET_TOL) {
            continue;
        }
        let colour = PALETTE[set.report % PALETTE.len()];
        for q in &set.members {
            let (x, y) = to_canvas(q);
            let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3.5" fill="{colour}" fill-opacity="0.8"/>"#);
        }
        if !set.members.is_empty() && !reports_shown.contains(&set.report) {
            reports_shown.push(set.report);
        }
    }

    let (mx, my) = to_canvas(marginal);
    let _ = writeln!(
        out,
        r#"<path d="M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}" stroke="black" stroke-width="2"/>"#,
        mx - 5.0,
        my - 5.0,
        mx + 5.0,
        my + 5.0,
        mx - 5.0,
        my + 5.0,
        mx + 5.0,
        my - 5.0
    );

    reports_shown.sort_unstable();
    for (row, r) in reports_shown.iter().enumerate() {
        let y = 20.0 + 16.0 * row as f64;
        let colour = PALETTE[r % PALETTE.len()];
        let label = escape(&instance.reports(agent)[*r].label());
        let _ = writeln!(out, r#"<circle cx="16" cy="{:.3}" r="4" fill="{colour}"/>"#, y - 4.0);
        let _ = writeln!(out, r#"<text x="26" y="{y:.3}" font-family="sans-serif" font-size="12">{label}</text>"#);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn peer_label(instance: &Instance, agent: usize, k: usize) -> String {
    let radix = instance.peer_radix(agent);
    let digits = radix.decode(k);
    let peers: Vec<usize> = (0..instance.agent_count()).filter(|j| *j != agent).collect();
    peers.iter().zip(digits).map(|(j, r)| instance.reports(*j)[r].label()).collect::<Vec<_>>().join(",")
}
