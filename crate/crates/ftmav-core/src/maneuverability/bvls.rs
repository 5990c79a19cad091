//! Bounded-variable least squares, active-set form.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvlsSolution {
    pub x: DVector<f64>,
    /// b − A·x
    pub residual: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves min ‖A·x − b‖² subject to lo ≤ x ≤ hi.
///
/// Variables enter the free set in order of largest gradient violation, ties
/// broken by lowest index. Free subproblems use a minimum-norm SVD solve.
pub fn bvls(a: &DMatrix<f64>, b: &DVector<f64>, lo: &[f64], hi: &[f64]) -> BvlsSolution {
    let n = a.ncols();
    assert_eq!(lo.len(), n);
    assert_eq!(hi.len(), n);
    let scale = a.norm().max(f64::MIN_POSITIVE) * b.norm().max(1.0);
    let grad_tol = 1e-13 * scale;

    let mut x = DVector::from_iterator(n, lo.iter().copied());
    let mut state = alloc::vec![State::Lower; n];
    let mut blocked = alloc::vec![false; n];
    let max_iter = 30 * n + 100;
    let mut it = 0;
    let mut converged = false;

    while it < max_iter {
        it += 1;
        let w = a.transpose() * (b - a * &x);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if blocked[i] || lo[i] == hi[i] {
                continue;
            }
            let score = match state[i] {
                State::Lower => w[i],
                State::Upper => -w[i],
                State::Free => continue,
            };
            if score > grad_tol && best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let Some((t, _)) = best else {
            converged = true;
            break;
        };
        let came_from = state[t];
        state[t] = State::Free;

        let mut first = true;
        loop {
            it += 1;
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == State::Free).collect();
            let z = solve_free(a, b, &x, &free);
            if first {
                first = false;
                let zt = z[free.iter().position(|&i| i == t).unwrap()];
                let back = match came_from {
                    State::Lower => zt <= lo[t],
                    State::Upper => zt >= hi[t],
                    State::Free => false,
                };
                if back {
                    state[t] = came_from;
                    blocked[t] = true;
                    break;
                }
            }
            let inside = free
                .iter()
                .zip(z.iter())
                .all(|(&i, &zi)| zi > lo[i] && zi < hi[i]);
            if inside {
                for (&i, &zi) in free.iter().zip(z.iter()) {
                    x[i] = zi;
                }
                blocked.iter_mut().for_each(|v| *v = false);
                break;
            }
            let mut alpha = 1.0_f64;
            for (&i, &zi) in free.iter().zip(z.iter()) {
                let step = zi - x[i];
                if zi <= lo[i] && step < 0.0 {
                    alpha = alpha.min((lo[i] - x[i]) / step);
                } else if zi >= hi[i] && step > 0.0 {
                    alpha = alpha.min((hi[i] - x[i]) / step);
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (&i, &zi) in free.iter().zip(z.iter()) {
                x[i] += alpha * (zi - x[i]);
                let span = (hi[i] - lo[i]).max(f64::MIN_POSITIVE);
                if x[i] <= lo[i] + 1e-14 * span {
                    x[i] = lo[i];
                    state[i] = State::Lower;
                } else if x[i] >= hi[i] - 1e-14 * span {
                    x[i] = hi[i];
                    state[i] = State::Upper;
                }
            }
            blocked.iter_mut().for_each(|v| *v = false);
            if free.iter().all(|&i| state[i] != State::Free) {
                break;
            }
            if it >= max_iter {
                break;
            }
        }
    }
    let residual = b - a * &x;
    BvlsSolution {
        x,
        residual,
        iterations: it,
        converged,
    }
}

fn solve_free(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>, free: &[usize]) -> DVector<f64> {
    let mut rhs = b.clone();
    for j in 0..a.ncols() {
        if !free.contains(&j) {
            rhs.axpy(-x[j], &a.column(j), 1.0);
        }
    }
    let sub = a.select_columns(free);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-12 * smax.max(f64::MIN_POSITIVE);
    svd.solve(&rhs, tol).unwrap_or_else(|_| DVector::zeros(free.len()))
}

/// Scaled first-order optimality violation of a box-constrained least-squares point.
///
/// Each projected gradient component is multiplied by its box width and the
/// result divided by max(‖b‖², 1), so it measures the objective decrease
/// available from moving one variable across its range.
pub fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, lo: &[f64], hi: &[f64], x: &DVector<f64>) -> f64 {
    let g = a.transpose() * (a * x - b);
    let denom = b.norm_squared().max(1.0);
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let span = hi[i] - lo[i];
        let v = if x[i] <= lo[i] {
            (-g[i]).max(0.0)
        } else if x[i] >= hi[i] {
            g[i].max(0.0)
        } else {
            g[i].abs()
        };
        worst = worst.max(v * span / denom);
    }
    worst
}
