//! Level-set extraction on rectangular grids.
//!
//! Marching squares with linear interpolation along cell edges. Saddle cells
//! are resolved with the mean of the four corners. Area estimates integrate
//! the piecewise-linear interpolant on two triangles per cell. Cells with a
//! non-finite corner are skipped.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Scalar field sampled at `(xs[i], ys[j])`, stored with `x` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> CliResult<Self> {
        if xs.len() < 2 || ys.len() < 2 || values.len() != xs.len() * ys.len() {
            return Err(CliError::Config(format!(
                "grid shape mismatch: {} x {} axes with {} values",
                xs.len(),
                ys.len(),
                values.len()
            )));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(CliError::Config("grid axes must be strictly increasing".into()));
        }
        Ok(Self { xs, ys, values })
    }

    pub fn from_fn(xs: Vec<f64>, ys: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> CliResult<Self> {
        let values = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(xs, ys, values)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    /// Position in index units, `(i + t, j + s)`.
    pub fn index_coords(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (fractional_index(&self.xs, x), fractional_index(&self.ys, y))
    }
}

fn fractional_index(axis: &[f64], v: f64) -> f64 {
    let n = axis.len();
    let k = match axis.iter().position(|&a| a > v) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => n - 2,
    }
    .min(n - 2);
    k as f64 + (v - axis[k]) / (axis[k + 1] - axis[k])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourResult {
    pub level: f64,
    pub polylines: Vec<Vec<(f64, f64)>>,
    /// Area of `{field > level}` in axis units.
    pub area: f64,
}

impl ContourResult {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.polylines.iter().flatten().copied()
    }
}

/// Horizontal edge `(i, j)–(i+1, j)` or vertical edge `(i, j)–(i, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(grid: &Grid, edge: Edge, level: f64) -> (f64, f64) {
    let (i0, j0, i1, j1) = match edge {
        Edge::H(i, j) => (i, j, i + 1, j),
        Edge::V(i, j) => (i, j, i, j + 1),
    };
    let (a, b) = (grid.at(i0, j0), grid.at(i1, j1));
    let t = (level - a) / (b - a);
    let x = grid.xs[i0] + t * (grid.xs[i1] - grid.xs[i0]);
    let y = grid.ys[j0] + t * (grid.ys[j1] - grid.ys[j0]);
    (x, y)
}

fn cell_segments(grid: &Grid, i: usize, j: usize, level: f64, out: &mut Vec<(Edge, Edge)>) {
    // corners counter-clockwise from bottom-left
    let v = [
        grid.at(i, j),
        grid.at(i + 1, j),
        grid.at(i + 1, j + 1),
        grid.at(i, j + 1),
    ];
    if v.iter().any(|x| !x.is_finite()) {
        return;
    }
    let inside = v.map(|x| x > level);
    // edge k joins corner k and corner k+1
    let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
    let cut: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
    match cut.len() {
        2 => out.push((edges[cut[0]], edges[cut[1]])),
        4 => {
            let center = 0.25 * v.iter().sum::<f64>() > level;
            // isolate the corners whose class differs from the centre
            for k in 0..4 {
                if inside[k] != center {
                    out.push((edges[(k + 3) % 4], edges[k]));
                }
            }
        }
        _ => {}
    }
}

/// Marching-squares level set with polylines stitched across cells.
pub fn extract_contour(grid: &Grid, level: f64) -> ContourResult {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let mut segments = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            cell_segments(grid, i, j, level, &mut segments);
        }
    }
    let mut incident: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(k);
        incident.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // open chains first (an end with a single segment), then closed loops
    let open_start = |k: usize| {
        let (a, b) = segments[k];
        if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        }
    };
    for pass in 0..2 {
        for k in 0..segments.len() {
            if used[k] {
                continue;
            }
            let start = match (pass, open_start(k)) {
                (0, Some(e)) => e,
                (0, None) => continue,
                _ => segments[k].0,
            };
            let mut chain = vec![start];
            let mut at = start;
            let mut seg = k;
            loop {
                used[seg] = true;
                let (a, b) = segments[seg];
                let next = if a == at { b } else { a };
                chain.push(next);
                at = next;
                match incident[&at].iter().find(|&&s| !used[s]) {
                    Some(&s) => seg = s,
                    None => break,
                }
            }
            polylines.push(chain.into_iter().map(|e| crossing(grid, e, level)).collect());
        }
    }
    ContourResult {
        level,
        polylines,
        area: region_area(grid, level),
    }
}

/// Area of `{field > level}` under the cell-wise linear interpolant.
pub fn region_area(grid: &Grid, level: f64) -> f64 {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let mut area = 0.0;
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let c = |di: usize, dj: usize| (grid.xs[i + di], grid.ys[j + dj], grid.at(i + di, j + dj));
            let (p00, p10, p11, p01) = (c(0, 0), c(1, 0), c(1, 1), c(0, 1));
            if [p00, p10, p11, p01].iter().any(|p| !p.2.is_finite()) {
                continue;
            }
            area += clipped_triangle_area([p00, p10, p11], level) + clipped_triangle_area([p00, p11, p01], level);
        }
    }
    area
}

fn clipped_triangle_area(tri: [(f64, f64, f64); 3], level: f64) -> f64 {
    let mut poly: Vec<(f64, f64)> = Vec::with_capacity(4);
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let (ia, ib) = (a.2 > level, b.2 > level);
        if ia {
            poly.push((a.0, a.1));
        }
        if ia != ib {
            let t = (level - a.2) / (b.2 - a.2);
            poly.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum();
    0.5 * twice.abs()
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Largest distance, in grid cells, from a point of `from` to the nearest
/// segment of `to`. `None` when either contour is empty.
pub fn directed_displacement(grid: &Grid, from: &ContourResult, to: &ContourResult) -> Option<f64> {
    if from.is_empty() || to.is_empty() {
        return None;
    }
    let segs: Vec<((f64, f64), (f64, f64))> = to
        .polylines
        .iter()
        .flat_map(|pl| {
            let mapped: Vec<_> = pl.iter().map(|&p| grid.index_coords(p)).collect();
            let single = if mapped.len() == 1 {
                vec![(mapped[0], mapped[0])]
            } else {
                Vec::new()
            };
            mapped
                .windows(2)
                .map(|w| (w[0], w[1]))
                .chain(single)
                .collect::<Vec<_>>()
        })
        .collect();
    let worst = from
        .points()
        .map(|p| {
            let q = grid.index_coords(p);
            segs.iter()
                .map(|&(a, b)| point_segment_distance(q, a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Some(worst)
}

/// Max of both directed displacements.
pub fn hausdorff_displacement(grid: &Grid, a: &ContourResult, b: &ContourResult) -> Option<f64> {
    Some(directed_displacement(grid, a, b)?.max(directed_displacement(grid, b, a)?))
}

fn segment_intersection(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> Option<(f64, f64)> {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let q = (c.0 - a.0, c.1 - a.1);
    let t = (q.0 * s.1 - q.1 * s.0) / denom;
    let u = (q.0 * r.1 - q.1 * r.0) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((a.0 + t * r.0, a.1 + t * r.1))
}

/// Points where polylines of `a` cross polylines of `b`, in axis units.
/// Sorted by `x`; duplicates at shared vertices are merged.
pub fn intersections(a: &ContourResult, b: &ContourResult) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for pa in &a.polylines {
        for sa in pa.windows(2) {
            for pb in &b.polylines {
                for sb in pb.windows(2) {
                    if let Some(p) = segment_intersection(sa[0], sa[1], sb[0], sb[1]) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    out.dedup_by(|p, q| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
    out
}

/// Linear interpolation of the field along a cell edge containing `p`.
pub fn interpolate_on_edge(grid: &Grid, p: (f64, f64)) -> f64 {
    let (u, v) = grid.index_coords(p);
    let (i, j) = (u.floor() as usize, v.floor() as usize);
    let (i, j) = (i.min(grid.xs.len() - 2), j.min(grid.ys.len() - 2));
    let (t, s) = (u - i as f64, v - j as f64);
    let lerp = |a: f64, b: f64, w: f64| a + w * (b - a);
    let f00 = grid.at(i, j);
    let f10 = grid.at(i + 1, j);
    let f01 = grid.at(i, j + 1);
    let f11 = grid.at(i + 1, j + 1);
    // a point on an edge has one coordinate at an integer
    let on_vertical = t.abs() < 1e-9 || (1.0 - t).abs() < 1e-9;
    if on_vertical {
        let (a, b) = if t < 0.5 { (f00, f01) } else { (f10, f11) };
        lerp(a, b, s)
    } else {
        let (a, b) = if s < 0.5 { (f00, f10) } else { (f01, f11) };
        lerp(a, b, t)
    }
}
