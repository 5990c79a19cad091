//! Independent LP-feasibility oracle: is `u` reachable as `B·s` with `s ∈ [0, 1]^n`?

#![allow(dead_code)]

use nalgebra::DMatrix;

const PIVOT_EPS: f64 = 1e-12;
const FEASIBLE_TOL: f64 = 1e-9;

/// Phase-1 simplex with Bland's rule on `B·s = u`, `s + t = 1`, `s, t ≥ 0`.
pub fn lp_feasible(b: &DMatrix<f64>, u: &[f64; 4]) -> bool {
    let n = b.ncols();
    let m = 4 + n;
    let cols = 2 * n + 4;
    let mut tab = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];

    for i in 0..4 {
        let scale = (0..n).map(|j| b[(i, j)].abs()).fold(0.0, f64::max).max(1.0);
        let sign = if u[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[i][j] = sign * b[(i, j)] / scale;
        }
        tab[i][2 * n + i] = 1.0;
        tab[i][cols] = sign * u[i] / scale;
        basis[i] = 2 * n + i;
    }
    for j in 0..n {
        let r = 4 + j;
        tab[r][j] = 1.0;
        tab[r][n + j] = 1.0;
        tab[r][cols] = 1.0;
        basis[r] = n + j;
    }

    // reduced costs of min Σ artificials
    let mut cost = vec![0.0; cols];
    for j in 0..2 * n {
        cost[j] = -(0..4).map(|i| tab[i][j]).sum::<f64>();
    }

    for _ in 0..10_000 {
        let Some(enter) = (0..cols).find(|&j| cost[j] < -PIVOT_EPS) else {
            let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= 2 * n).map(|i| tab[i][cols]).sum();
            return infeasibility <= FEASIBLE_TOL;
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if tab[i][enter] > PIVOT_EPS {
                let ratio = tab[i][cols] / tab[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = tab[l][cols] / tab[l][enter];
                        if ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(r) = leave else {
            // bounded feasible region: an unbounded ray cannot occur
            unreachable!("phase-1 objective is bounded below");
        };
        let piv = tab[r][enter];
        tab[r].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && row[enter] != 0.0 {
                let f = row[enter];
                row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
        let f = cost[enter];
        cost.iter_mut().zip(&pivot_row).for_each(|(c, p)| *c -= f * p);
        basis[r] = enter;
    }
    panic!("simplex iteration limit reached");
}
