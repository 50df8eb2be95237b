//! Marching-squares isolines on a rectilinear grid.
//!
//! A corner is "above" when its value is `>= level`. Each crossing is placed
//! on its cell edge by linear interpolation. Saddle cells (diagonal corners
//! above) are resolved by the mean of the four corners: when the mean is
//! above the level the two above corners stay connected through the cell
//! centre and the segments cut off the two below corners, otherwise they cut
//! off the two above corners.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// One isoline: a sequence of `[x, y]` vertices. Closed loops repeat their
/// first vertex at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Cell edge; `H(i, j)` joins nodes (i, j)–(i+1, j), `V(i, j)` joins (i, j)–(i, j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Isolines of `field` (row-major, `field[j][i]` at `(x[i], y[j])`) for each
/// level. Levels outside the field range produce no polylines, and cells
/// with a non-finite corner are skipped.
pub fn extract_contours(field: &[Vec<f64>], x: &[f64], y: &[f64], levels: &[f64]) -> Vec<Polyline> {
    levels
        .iter()
        .flat_map(|&level| contour_level(field, x, y, level))
        .collect()
}

fn contour_level(field: &[Vec<f64>], x: &[f64], y: &[f64], level: f64) -> Vec<Polyline> {
    let ny = field.len();
    let nx = if ny > 0 { field[0].len() } else { 0 };
    if nx < 2 || ny < 2 || !level.is_finite() {
        return Vec::new();
    }
    let above = |i: usize, j: usize| field[j][i] >= level;

    let crossing = |e: Edge| -> [f64; 2] {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (a, b) = (field[j0][i0], field[j1][i1]);
        let t = (level - a) / (b - a);
        [x[i0] + t * (x[i1] - x[i0]), y[j0] + t * (y[j1] - y[j0])]
    };

    // Adjacency of crossing edges; each edge touches at most two segments.
    let mut links: BTreeMap<Edge, Vec<Edge>> = BTreeMap::new();
    let mut link = |a: Edge, b: Edge| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [field[j][i], field[j][i + 1], field[j + 1][i + 1], field[j + 1][i]];
            if corners.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let (bl, br, tr, tl) = (above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1));
            let bottom = Edge::H(i, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            let right = Edge::V(i + 1, j);
            let case = (bl as u8) | (br as u8) << 1 | (tr as u8) << 2 | (tl as u8) << 3;
            match case {
                0 | 15 => {}
                1 | 14 => link(left, bottom),
                2 | 13 => link(bottom, right),
                3 | 12 => link(left, right),
                4 | 11 => link(right, top),
                6 | 9 => link(bottom, top),
                7 | 8 => link(left, top),
                5 | 10 => {
                    let mean = 0.25
                        * (field[j][i] + field[j][i + 1] + field[j + 1][i + 1] + field[j + 1][i]);
                    // case 5: bl and tr above; case 10: br and tl above.
                    let center_above = mean >= level;
                    let corners_above_are_bl_tr = case == 5;
                    if center_above == corners_above_are_bl_tr {
                        // Cut off br and tl.
                        link(bottom, right);
                        link(left, top);
                    } else {
                        // Cut off bl and tr.
                        link(left, bottom);
                        link(right, top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut used: BTreeSet<(Edge, Edge)> = BTreeSet::new();
    let key = |a: Edge, b: Edge| if a <= b { (a, b) } else { (b, a) };
    let mut out = Vec::new();

    let walk = |start: Edge, used: &mut BTreeSet<(Edge, Edge)>| -> Option<(Vec<Edge>, bool)> {
        let mut path = vec![start];
        let mut current = start;
        loop {
            let next = links[&current]
                .iter()
                .copied()
                .find(|&n| !used.contains(&key(current, n)));
            match next {
                Some(n) => {
                    used.insert(key(current, n));
                    path.push(n);
                    if n == start {
                        return Some((path, true));
                    }
                    current = n;
                }
                None => return if path.len() > 1 { Some((path, false)) } else { None },
            }
        }
    };

    // Open lines start at boundary edges (a single link), then closed loops.
    let ends: Vec<Edge> = links.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    for e in ends {
        if let Some((path, closed)) = walk(e, &mut used) {
            out.push((path, closed));
        }
    }
    let all: Vec<Edge> = links.keys().copied().collect();
    for e in all {
        if let Some((path, closed)) = walk(e, &mut used) {
            out.push((path, closed));
        }
    }

    out.into_iter()
        .map(|(path, closed)| Polyline {
            level,
            points: path.into_iter().map(&crossing).collect(),
            closed,
        })
        .collect()
}
