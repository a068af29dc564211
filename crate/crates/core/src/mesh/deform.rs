//! Exact-interpolation deformation field: a radial kernel `φ(r) = r` over
//! the control sources plus an affine term, fitted to control displacements.

use nalgebra::{DMatrix, Vector3};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DeformField {
    sources: Vec<[f64; 3]>,
    /// One row per source: kernel weight per axis.
    weights: Vec<[f64; 3]>,
    /// Rows: constant, x, y, z.
    affine: [[f64; 3]; 4],
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (Vector3::from(a) - Vector3::from(b)).norm()
}

impl DeformField {
    /// Solves the `(n + 4)`-square interpolation system for `n` controls.
    pub fn fit(sources: &[[f64; 3]], targets: &[[f64; 3]]) -> Result<Self> {
        let n = sources.len();
        if n != targets.len() {
            return Err(Error::invalid(format!("{n} control sources but {} targets", targets.len())));
        }
        if n < 4 {
            return Err(Error::invalid("deformation needs at least 4 controls"));
        }
        let extent = sources.iter().flat_map(|a| sources.iter().map(move |b| dist(*a, *b))).fold(0.0f64, f64::max);
        for i in 0..n {
            for j in i + 1..n {
                if dist(sources[i], sources[j]) <= 1e-12 * extent.max(1e-300) {
                    return Err(Error::IllConditioned(format!("control sources {i} and {j} coincide")));
                }
            }
        }
        let m = n + 4;
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DMatrix::<f64>::zeros(m, 3);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = dist(sources[i], sources[j]);
            }
            let row = [1.0, sources[i][0], sources[i][1], sources[i][2]];
            for k in 0..4 {
                a[(i, n + k)] = row[k];
                a[(n + k, i)] = row[k];
            }
            for c in 0..3 {
                rhs[(i, c)] = targets[i][c] - sources[i][c];
            }
        }
        let lu = a.clone().full_piv_lu();
        let mut sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::IllConditioned("singular interpolation system (coplanar or repeated controls)".into()))?;
        // one refinement step
        let resid = &rhs - &a * &sol;
        if let Some(corr) = lu.solve(&resid) {
            sol += corr;
        }
        let scale = a.abs().max().max(1.0);
        if (&a * &sol - &rhs).abs().max() > 1e-9 * scale * rhs.abs().max().max(1.0) {
            return Err(Error::IllConditioned("interpolation system is numerically singular".into()));
        }
        Ok(DeformField {
            sources: sources.to_vec(),
            weights: (0..n).map(|i| [sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]]).collect(),
            affine: std::array::from_fn(|k| [sol[(n + k, 0)], sol[(n + k, 1)], sol[(n + k, 2)]]),
        })
    }

    pub fn displacement(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (s, w) in self.sources.iter().zip(&self.weights) {
            let r = dist(p, *s);
            for c in 0..3 {
                out[c] += w[c] * r;
            }
        }
        for c in 0..3 {
            out[c] += self.affine[0][c] + self.affine[1][c] * p[0] + self.affine[2][c] * p[1] + self.affine[3][c] * p[2];
        }
        out
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let d = self.displacement(p);
        [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
    }
}

/// Moves every vertex by the field interpolating `controls` (vertex index,
/// target position).
pub fn deform_vertices(vertices: &[[f64; 3]], controls: &[(usize, [f64; 3])]) -> Result<Vec<[f64; 3]>> {
    if let Some(&(v, _)) = controls.iter().find(|(v, _)| *v >= vertices.len()) {
        return Err(Error::invalid(format!("control vertex {v} out of range")));
    }
    let sources: Vec<[f64; 3]> = controls.iter().map(|&(v, _)| vertices[v]).collect();
    let targets: Vec<[f64; 3]> = controls.iter().map(|&(_, t)| t).collect();
    let field = DeformField::fit(&sources, &targets)?;
    Ok(vertices.iter().map(|&p| field.apply(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
        (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
    }

    /// Dense Gaussian elimination with partial pivoting on plain vectors.
    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn controls_are_interpolated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = cloud(&mut rng, 60);
        let dst: Vec<[f64; 3]> = src.iter().map(|p| [p[0] + rng.random_range(-0.2..0.2), p[1] * 1.1, p[2] - 0.3]).collect();
        let f = DeformField::fit(&src, &dst).unwrap();
        for (s, t) in src.iter().zip(&dst) {
            let g = f.apply(*s);
            for c in 0..3 {
                assert!((g[c] - t[c]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_and_constant_displacements() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let verts = cloud(&mut rng, 140);
        let same: Vec<(usize, [f64; 3])> = (0..60).map(|i| (i, verts[i])).collect();
        let out = deform_vertices(&verts, &same).unwrap();
        let shifted: Vec<(usize, [f64; 3])> = (0..60).map(|i| (i, [verts[i][0] + 5.0, verts[i][1], verts[i][2]])).collect();
        let moved = deform_vertices(&verts, &shifted).unwrap();
        for i in 0..140 {
            for c in 0..3 {
                assert!((out[i][c] - verts[i][c]).abs() < 1e-8);
                let want = verts[i][c] + if c == 0 { 5.0 } else { 0.0 };
                assert!((moved[i][c] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn single_displacement_matches_independent_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let verts = cloud(&mut rng, 140);
        let n = 60;
        let mut controls: Vec<(usize, [f64; 3])> = (0..n).map(|i| (i, verts[i])).collect();
        controls[17].1[1] += 0.25;
        let out = deform_vertices(&verts, &controls).unwrap();

        let m = n + 4;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..3).map(|c| (verts[i][c] - verts[j][c]).powi(2)).sum();
                a[i][j] = d.sqrt();
            }
            let row = [1.0, verts[i][0], verts[i][1], verts[i][2]];
            for k in 0..4 {
                a[i][n + k] = row[k];
                a[n + k][i] = row[k];
            }
        }
        let mut b = vec![0.0; m];
        b[17] = 0.25;
        let x = gauss_solve(a, b);
        for v in n..140 {
            let mut dy = x[n] + x[n + 1] * verts[v][0] + x[n + 2] * verts[v][1] + x[n + 3] * verts[v][2];
            for i in 0..n {
                let d: f64 = (0..3).map(|c| (verts[v][c] - verts[i][c]).powi(2)).sum();
                dy += x[i] * d.sqrt();
            }
            assert!((out[v][1] - verts[v][1] - dy).abs() < 1e-9, "vertex {v}");
            assert!((out[v][0] - verts[v][0]).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_or_flat_controls_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut src = cloud(&mut rng, 10);
        src[3] = src[7];
        assert!(matches!(DeformField::fit(&src, &src), Err(Error::IllConditioned(_))));
        let flat: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, (i * i) as f64, 0.0]).collect();
        assert!(matches!(DeformField::fit(&flat, &flat), Err(Error::IllConditioned(_))));
        assert!(deform_vertices(&src, &[(99, [0.0; 3])]).is_err());
    }
}
