//! Minimum-cost perfect matching on a square cost matrix.

use crate::{Error, Result};

/// Hungarian method with row and column potentials, `O(n³)`. Returns, for
/// each row, the column it is matched to.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = cost.len();
    if cost.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("cost matrix must be square"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("cost matrix must be finite"));
    }
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    Ok(out)
}

/// Per-point Euclidean errors after optimally matching `estimate` to `truth`.
pub fn matched_errors(estimate: &[[f64; 3]], truth: &[[f64; 3]]) -> Result<Vec<f64>> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid(format!("cannot match {} points to {}", estimate.len(), truth.len())));
    }
    let dist = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let cost: Vec<Vec<f64>> = estimate.iter().map(|&e| truth.iter().map(|&t| dist(e, t)).collect()).collect();
    let m = hungarian(&cost)?;
    Ok(m.iter().enumerate().map(|(i, &j)| cost[i][j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn small_example() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(hungarian(&c).unwrap(), vec![1, 0, 2]);
        assert_eq!(hungarian(&[]).unwrap(), Vec::<usize>::new());
        assert!(hungarian(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.random_range(1..=7);
            let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..20) as f64).collect()).collect();
            let m = hungarian(&c).unwrap();
            let mut seen = m.clone();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let total: f64 = m.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
            assert_eq!(total, brute(&c));
        }
    }

    #[test]
    fn matched_errors_undo_a_permutation() {
        let pts: Vec<[f64; 3]> = (0..12).map(|i| [i as f64, (i * i) as f64, 0.5]).collect();
        let mut shuffled = pts.clone();
        shuffled.reverse();
        assert!(matched_errors(&shuffled, &pts).unwrap().iter().all(|&e| e == 0.0));
    }
}
