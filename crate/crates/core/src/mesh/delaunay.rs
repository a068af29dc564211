//! Planar Delaunay triangulation: a sweep triangulation repaired by edge flips.

use std::collections::HashMap;

use crate::{Error, Result};

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `abc`. Also returns a magnitude for tolerances.
pub(crate) fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> (f64, f64) {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let (al, bl, cl) = (adx * adx + ady * ady, bdx * bdx + bdy * bdy, cdx * cdx + cdy * cdy);
    let t1 = al * (bdx * cdy - bdy * cdx);
    let t2 = bl * (cdx * ady - cdy * adx);
    let t3 = cl * (adx * bdy - ady * bdx);
    (t1 + t2 + t3, t1.abs() + t2.abs() + t3.abs())
}

const TIE_EPS: f64 = 1e-10;

fn diag(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Delaunay triangulation of `points`, returned as counterclockwise index
/// triples (smallest index first, sorted). Among co-circular configurations
/// the diagonal with the lexicographically smaller index pair is kept.
pub fn delaunay_triangulate(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("triangulation needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::invalid("non-finite point"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(points[a][1].total_cmp(&points[b][1])));
    if let Some(w) = order.windows(2).find(|w| points[w[0]] == points[w[1]]) {
        return Err(Error::invalid(format!("duplicate points {} and {}", w[0], w[1])));
    }
    let p = |i: usize| points[i];
    let k = (2..order.len())
        .find(|&k| orient(p(order[0]), p(order[1]), p(order[k])) != 0.0)
        .ok_or_else(|| Error::Degenerate("all points are collinear".into()))?;

    // Fan over the leading collinear run.
    let apex = order[k];
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let ccw = orient(p(order[0]), p(order[1]), p(apex)) > 0.0;
    for w in order[..k].windows(2) {
        tris.push(if ccw { [w[0], w[1], apex] } else { [w[1], w[0], apex] });
    }
    // Counterclockwise hull.
    let mut hull: Vec<usize> = if ccw {
        let mut h: Vec<usize> = order[..k].to_vec();
        h.push(apex);
        h
    } else {
        let mut h = vec![apex];
        h.extend(order[..k].iter().rev());
        h.rotate_left(1);
        h
    };
    for &q in &order[k + 1..] {
        let m = hull.len();
        let visible: Vec<bool> = (0..m).map(|i| orient(p(hull[i]), p(hull[(i + 1) % m]), p(q)) < 0.0).collect();
        // Visible edges form one contiguous run; find its start.
        let start = (0..m)
            .find(|&i| visible[i] && !visible[(i + m - 1) % m])
            .ok_or_else(|| Error::Degenerate("sweep point sees no hull edge".into()))?;
        let mut end = start;
        while visible[end % m] {
            let (a, b) = (hull[end % m], hull[(end + 1) % m]);
            tris.push([b, a, q]);
            end += 1;
        }
        // Hull vertices strictly between start and end are no longer on the hull.
        let mut next = Vec::with_capacity(m + 1);
        for j in 0..m {
            let rel = (j + m - start) % m;
            if rel == 0 {
                next.push(hull[j]);
                next.push(q);
            } else if rel >= end - start {
                next.push(hull[j]);
            }
        }
        hull = next;
    }
    legalize(points, &mut tris)?;
    for t in tris.iter_mut() {
        let r = (0..3).min_by_key(|&i| t[i]).unwrap();
        t.rotate_left(r);
    }
    tris.sort_unstable();
    Ok(tris)
}

fn legalize(points: &[[f64; 2]], tris: &mut [[usize; 3]]) -> Result<()> {
    let limit = 50 * tris.len() * tris.len() + 100;
    let mut flips = 0usize;
    loop {
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (ti, t) in tris.iter().enumerate() {
            for e in 0..3 {
                edges.insert((t[e], t[(e + 1) % 3]), (ti, (e + 2) % 3));
            }
        }
        let mut changed = false;
        let mut keys: Vec<(usize, usize)> = edges.keys().copied().filter(|&(a, b)| a < b).collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let (Some(&(t1, c1)), Some(&(t2, c2))) = (edges.get(&(a, b)), edges.get(&(b, a))) else { continue };
            // The map goes stale once a neighbouring triangle flipped.
            if tris[t1][(c1 + 1) % 3] != a || tris[t1][(c1 + 2) % 3] != b || tris[t2][(c2 + 1) % 3] != b || tris[t2][(c2 + 2) % 3] != a {
                continue;
            }
            let (c, d) = (tris[t1][c1], tris[t2][c2]);
            let (pa, pb, pc, pd) = (points[a], points[b], points[c], points[d]);
            // triangle (a, b, c) is ccw; d is across ab
            let (det, mag) = incircle(pa, pb, pc, pd);
            let convex = orient(pc, pd, pa) * orient(pc, pd, pb) < 0.0;
            let flip = if det > TIE_EPS * mag {
                true
            } else if det.abs() <= TIE_EPS * mag {
                convex && diag(c, d) < diag(a, b)
            } else {
                false
            };
            if flip && convex {
                tris[t1] = [a, d, c];
                tris[t2] = [d, b, c];
                changed = true;
                flips += 1;
                if flips > limit {
                    return Err(Error::Degenerate("edge flipping did not converge".into()));
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}
