//! Level-set plots of planar polyellipses by marching squares.

use crate::error::{CliError, Result};
use polyellipse::Instance;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const VIEWBOX: f64 = 1000.0;
const MARGIN: f64 = 20.0;

/// Polylines approximating `{z : Σ_u ω_u ‖z − u − x‖ = r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Each line is a vertex list; closed lines repeat their first vertex.
    pub lines: Vec<Vec<[f64; 2]>>,
    /// Side length of the square grid cells.
    pub cell: f64,
    /// Lower-left corner of the sampled grid.
    pub origin: [f64; 2],
    /// Cells along each axis.
    pub cells: [usize; 2],
}

/// Traces the level `r` of the polyellipse with foci translated by `x` on a
/// square grid with `resolution` cells along the longer side. The grid
/// covers a region guaranteed to contain the whole level set.
pub fn level_set(inst: &Instance, x: &[f64], r: f64, resolution: usize) -> Result<Contour> {
    if inst.dim() != 2 {
        return Err(CliError::Solver(polyellipse::Error::Unsupported(format!(
            "plots need d = 2, got d = {}",
            inst.dim()
        ))));
    }
    if x.len() != 2 {
        return Err(CliError::Input(format!("translation has {} coordinates, expected 2", x.len())));
    }
    if resolution < 2 {
        return Err(CliError::Input("resolution must be at least 2".into()));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(CliError::Input(format!("radius must be finite and nonnegative, got {r}")));
    }
    // Every z on the level satisfies ‖z − ū − x‖ ≤ r + Σ ω ‖u − ū‖.
    let mean = inst.foci_mean();
    let center = [mean[0] + x[0], mean[1] + x[1]];
    let spread: f64 = inst
        .foci()
        .rows()
        .zip(inst.weights())
        .map(|(u, w)| w * inst.norm().eval(&[u[0] - mean[0], u[1] - mean[1]]))
        .sum();
    let reach = 1.05 * inst.norm().euclid_ratio(2) * (r + spread) + 1e-9;
    let lo = [center[0] - reach, center[1] - reach];
    let cell = 2.0 * reach / resolution as f64;
    let (nx, ny) = (resolution, resolution);
    let f = |z: [f64; 2]| inst.phi_at(&z, x);
    let node = |i: usize, j: usize| [lo[0] + i as f64 * cell, lo[1] + j as f64 * cell];
    let values: Vec<f64> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| f(node(i, j)))
        .collect();
    let value = |i: usize, j: usize| values[j * (nx + 1) + i];
    let inside = |i: usize, j: usize| value(i, j) <= r;

    // Edge ids: horizontal edges first, then vertical ones.
    let h_edges = nx * (ny + 1);
    let h = |i: usize, j: usize| j * nx + i;
    let v = |i: usize, j: usize| h_edges + j * (nx + 1) + i;
    let crossing = |id: usize| -> [f64; 2] {
        let (a, b) = if id < h_edges {
            let (i, j) = (id % nx, id / nx);
            ((i, j), (i + 1, j))
        } else {
            let k = id - h_edges;
            let (i, j) = (k % (nx + 1), k / (nx + 1));
            ((i, j), (i, j + 1))
        };
        let (fa, fb) = (value(a.0, a.1), value(b.0, b.1));
        let t = ((r - fa) / (fb - fa)).clamp(0.0, 1.0);
        let (pa, pb) = (node(a.0, a.1), node(b.0, b.1));
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    let mut links: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            let corners = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            if corners.iter().all(|&c| c == corners[0]) {
                continue;
            }
            let (bottom, right, top, left) = (h(i, j), v(i + 1, j), h(i, j + 1), v(i, j));
            let crossed: Vec<usize> = [(bottom, 0, 1), (right, 1, 2), (top, 2, 3), (left, 3, 0)]
                .into_iter()
                .filter(|&(_, p, q)| corners[p] != corners[q])
                .map(|(e, _, _)| e)
                .collect();
            let pairs = if crossed.len() == 2 {
                vec![(crossed[0], crossed[1])]
            } else {
                // Saddle: the cell centre decides which diagonal is connected.
                let mid = 0.25 * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1)) <= r;
                if mid == corners[0] {
                    vec![(bottom, right), (top, left)]
                } else {
                    vec![(left, bottom), (right, top)]
                }
            };
            for (e0, e1) in pairs {
                links.entry(e0).or_default().push(e1);
                links.entry(e1).or_default().push(e0);
            }
        }
    }
    Ok(Contour {
        lines: chain(&links).into_iter().map(|ids| ids.into_iter().map(crossing).collect()).collect(),
        cell,
        origin: lo,
        cells: [nx, ny],
    })
}

/// Joins edge links into vertex chains: open chains from their endpoints
/// first, then closed loops, each in ascending id order.
fn chain(links: &BTreeMap<usize, Vec<usize>>) -> Vec<Vec<usize>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let walk = |start: usize, seen: &mut std::collections::BTreeSet<usize>| {
        let mut line = vec![start];
        seen.insert(start);
        let mut cur = start;
        loop {
            let next = links[&cur].iter().copied().find(|n| !seen.contains(n));
            match next {
                Some(n) => {
                    seen.insert(n);
                    line.push(n);
                    cur = n;
                }
                None => {
                    if line.len() > 2 && links[&cur].contains(&start) {
                        line.push(start);
                    }
                    return line;
                }
            }
        }
    };
    for (&id, nbrs) in links {
        if nbrs.len() == 1 && !seen.contains(&id) {
            out.push(walk(id, &mut seen));
        }
    }
    for &id in links.keys() {
        if !seen.contains(&id) {
            out.push(walk(id, &mut seen));
        }
    }
    out
}

/// SVG with demand points, translated foci and the contour, on a fixed
/// 1000×1000 view box.
pub fn render_svg(inst: &Instance, x: &[f64], r: f64, contour: &Contour) -> String {
    let foci: Vec<[f64; 2]> = inst.foci().rows().map(|u| [u[0] + x[0], u[1] + x[1]]).collect();
    let demand: Vec<[f64; 2]> = inst.demand().rows().map(|a| [a[0], a[1]]).collect();
    let all = demand
        .iter()
        .chain(&foci)
        .chain(contour.lines.iter().flatten())
        .copied();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for j in 0..2 {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (VIEWBOX - 2.0 * MARGIN) / span;
    let map = |p: &[f64; 2]| {
        (
            MARGIN + (p[0] - lo[0]) * scale,
            VIEWBOX - MARGIN - (p[1] - lo[1]) * scale,
        )
    };
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEWBOX} {VIEWBOX}" width="{VIEWBOX}" height="{VIEWBOX}">"#
    );
    let _ = writeln!(svg, "<title>polyellipse r = {r}</title>");
    let _ = writeln!(svg, r#"<rect width="{VIEWBOX}" height="{VIEWBOX}" fill="white"/>"#);
    let _ = writeln!(svg, r##"<g fill="none" stroke="#1f77b4" stroke-width="2">"##);
    for line in &contour.lines {
        let pts: Vec<String> = line
            .iter()
            .map(|p| {
                let (a, b) = map(p);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}"/>"#, pts.join(" "));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g fill="black">"#);
    for p in &demand {
        let (a, b) = map(p);
        let _ = writeln!(svg, r#"<circle cx="{a:.2}" cy="{b:.2}" r="3"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g fill="#d62728">"##);
    for p in &foci {
        let (a, b) = map(p);
        let _ = writeln!(svg, r#"<rect x="{:.2}" y="{:.2}" width="8" height="8"/>"#, a - 4.0, b - 4.0);
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

pub fn plot_levelset(inst: &Instance, x: &[f64], r: f64, out: &Path, resolution: usize) -> Result<Contour> {
    let contour = level_set(inst, x, r, resolution)?;
    std::fs::write(out, render_svg(inst, x, r, &contour)).map_err(|e| CliError::io(out, e))?;
    Ok(contour)
}
