//! Wavefront OBJ text for triangle meshes.

use std::fmt::Write as _;

use crate::{Error, Result};

/// `v x y z` lines with six decimals, then 1-based `f i j k` lines.
pub fn export_obj(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> String {
    let mut s = String::with_capacity(vertices.len() * 36 + faces.len() * 16);
    for v in vertices {
        // adding 0.0 turns -0.0 into 0.0
        let _ = writeln!(s, "v {:.6} {:.6} {:.6}", v[0] + 0.0, v[1] + 0.0, v[2] + 0.0);
    }
    for f in faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// Reads `v` and triangular `f` records; other record types are ignored.
/// Face entries may carry `/vt/vn` suffixes.
pub fn parse_obj(text: &str) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let bad = |what: &str| Error::Format(format!("OBJ line {}: {what}", lineno + 1));
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.take(3).map(|t| t.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad coordinate"))?;
                if c.len() != 3 {
                    return Err(bad("vertex needs 3 coordinates"));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad face index"))?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(bad("only 1-based triangles are supported"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= vertices.len())) {
        return Err(Error::Format(format!("face {f:?} references a missing vertex")));
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_text() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let text = export_obj(&v, &[[0, 1, 2]]);
        assert_eq!(text, "v 0.000000 0.000000 0.000000\nv 1.000000 0.000000 0.000000\nv 0.000000 1.000000 0.000000\nf 1 2 3\n");
        assert_eq!(parse_obj(&text).unwrap(), (v.to_vec(), vec![[0, 1, 2]]));
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(export_obj(&[[-0.0, -1e-9, 2.5]], &[]), "v 0.000000 -0.000000 2.500000\n");
    }

    #[test]
    fn malformed_input() {
        assert!(parse_obj("v 1 2\n").is_err());
        assert!(parse_obj("v 1 2 3\nf 1 2 4\n").is_err());
        assert!(parse_obj("v 1 2 3\nf 0 1 1\n").is_err());
        let (v, f) = parse_obj("# c\nvn 0 0 1\nv 1 2 3\nv 1 2 4\nv 0 0 0\nf 1/1/1 2//1 3\n").unwrap();
        assert_eq!((v.len(), f), (3, vec![[0, 1, 2]]));
    }
}
