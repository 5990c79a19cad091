//! Convex QP `min ½zᵀHz + fᵀz  s.t.  Gz ≤ h` with banded `H` and sparse rows of `G`,
//! solved by a Mehrotra predictor-corrector interior-point method.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use thiserror::Error;

/// Relative pivot size below which a Cholesky pivot is treated as lost to cancellation.
const PIVOT_FLOOR: f64 = 1e-13;
/// Residual and complementarity level accepted when the target tolerance cannot be reached.
pub const ACCEPTABLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("constraint set is empty")]
    Infeasible,
    #[error("no convergence after {iterations} iterations (primal {primal:.3e}, dual {dual:.3e}, gap {gap:.3e})")]
    Stalled { iterations: usize, primal: f64, dual: f64, gap: f64 },
    #[error("normal matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("entry ({0}, {1}) lies outside the declared band")]
    OutsideBand(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Relative primal and dual residual tolerance.
    pub tolerance: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { max_iterations: 120, tolerance: 1e-9 }
    }
}

/// Inequality `Σ vals[k]·z[cols[k]] ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: f64,
}

impl SparseRow {
    /// Merges duplicate columns and drops zeros.
    pub fn new(mut terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut cols = Vec::with_capacity(terms.len());
        let mut vals: Vec<f64> = Vec::with_capacity(terms.len());
        for (c, v) in terms {
            if cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != 0.0).collect();
        let cols = cols.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
        let vals = vals.iter().zip(&keep).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
        SparseRow { cols, vals, rhs }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.cols.iter().zip(&self.vals).map(|(c, v)| v * z[*c]).sum()
    }

    fn norm(&self) -> f64 {
        sqrt(self.vals.iter().map(|v| v * v).sum())
    }
}

/// Symmetric band matrix storing the lower triangle; entry (i, i−j) at `i·(bw+1)+j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Adds `v` to entry (i, j) and, by symmetry, (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), QpError> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            return Err(QpError::OutsideBand(i, j));
        }
        self.data[i * (self.bw + 1) + (i - j)] += v;
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    fn widened(&self, bw: usize) -> Self {
        let mut out = BandMatrix::zeros(self.n, bw.max(self.bw));
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                out.data[i * (out.bw + 1) + (i - j)] = self.data[i * (self.bw + 1) + (i - j)];
            }
        }
        out
    }

    /// In-place Cholesky factor `L` with `A = L·Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky, QpError> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let diag: Vec<f64> = (0..n).map(|i| self.data[i * w].abs()).collect();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = self.data[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                if i == j {
                    if !sum.is_finite() || sum < -PIVOT_FLOOR * diag[i] {
                        return Err(QpError::NotPositiveDefinite);
                    }
                    // Pivots lost to cancellation decouple that direction instead of failing.
                    self.data[i * w] = if sum <= PIVOT_FLOOR * diag[i] { 1e64 } else { sqrt(sum) };
                } else {
                    self.data[i * w + (i - j)] = sum / self.data[j * w];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.l.n, self.l.bw, self.l.bw + 1);
        let d = &self.l.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= d[i * w + (i - k)] * y[k];
            }
            y[i] = s / d[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= d[k * w + (k - i)] * y[k];
            }
            y[i] = s / d[i * w];
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    /// Multipliers in the caller's row scaling.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedQp {
    pub hessian: BandMatrix,
    pub linear: Vec<f64>,
    pub rows: Vec<SparseRow>,
}

impl BandedQp {
    pub fn new(n: usize, bw: usize) -> Self {
        BandedQp { hessian: BandMatrix::zeros(n, bw), linear: vec![0.0; n], rows: Vec::new() }
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let hz = self.hessian.mul_vec(z);
        z.iter().zip(&hz).map(|(a, b)| 0.5 * a * b).sum::<f64>() + z.iter().zip(&self.linear).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn solve(&self, opts: &QpOptions) -> Result<QpSolution, QpError> {
        let n = self.hessian.dim();
        let mut rows: Vec<SparseRow> = Vec::with_capacity(self.rows.len());
        let mut scales = Vec::with_capacity(self.rows.len());
        let mut origin = Vec::with_capacity(self.rows.len());
        for (k, r) in self.rows.iter().enumerate() {
            let nr = r.norm();
            if nr == 0.0 {
                if r.rhs < -opts.tolerance {
                    return Err(QpError::Infeasible);
                }
                continue;
            }
            rows.push(SparseRow { cols: r.cols.clone(), vals: r.vals.iter().map(|v| v / nr).collect(), rhs: r.rhs / nr });
            scales.push(nr);
            origin.push(k);
        }
        let bw = rows
            .iter()
            .filter_map(|r| Some(r.cols.last()? - r.cols.first()?))
            .max()
            .unwrap_or(0)
            .max(self.hessian.bandwidth());
        let base = self.hessian.widened(bw);
        let reg = 1e-12 * (0..n).map(|i| base.get(i, i).abs()).fold(1.0, f64::max);
        let f = &self.linear;
        let m = rows.len();

        let factor = |w: Option<&[f64]>| -> Result<BandCholesky, QpError> {
            let mut k = base.clone();
            for i in 0..n {
                k.add(i, i, reg)?;
            }
            if let Some(w) = w {
                for (r, wi) in rows.iter().zip(w) {
                    for (a, (ca, va)) in r.cols.iter().zip(&r.vals).enumerate() {
                        for (cb, vb) in r.cols[..=a].iter().zip(&r.vals[..=a]) {
                            k.add(*ca, *cb, wi * va * vb)?;
                        }
                    }
                }
            }
            k.cholesky()
        };

        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let mut z = factor(None)?.solve(&neg_f);
        if m == 0 {
            let objective = self.objective(&z);
            return Ok(QpSolution { z, objective, multipliers: Vec::new(), iterations: 0, primal_residual: 0.0, dual_residual: 0.0 });
        }

        let gz = |z: &[f64]| -> Vec<f64> { rows.iter().map(|r| r.eval(z)).collect() };
        let gt = |y: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (r, yi) in rows.iter().zip(y) {
                for (c, v) in r.cols.iter().zip(&r.vals) {
                    out[*c] += v * yi;
                }
            }
            out
        };

        let slack0: Vec<f64> = rows.iter().zip(gz(&z)).map(|(r, g)| r.rhs - g).collect();
        let mut s: Vec<f64> = slack0.iter().map(|v| v.max(1.0)).collect();
        let mut lam = vec![1.0; m];
        let h_inf = rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let f_inf = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = opts.tolerance;
        let (mut rp_inf, mut rd_inf, mut mu) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut acceptable: Option<QpSolution> = None;
        let pack = |z: &[f64], lam: &[f64], it: usize, rp: f64, rd: f64| {
            let mut full = vec![0.0; self.rows.len()];
            for ((k, l), sc) in origin.iter().zip(lam).zip(&scales) {
                full[*k] = l / sc;
            }
            QpSolution { objective: self.objective(z), z: z.to_vec(), multipliers: full, iterations: it, primal_residual: rp, dual_residual: rd }
        };

        for it in 0..opts.max_iterations {
            let hz = base.mul_vec(&z);
            let gtl = gt(&lam);
            let rd: Vec<f64> = (0..n).map(|i| hz[i] + f[i] + gtl[i] + reg * z[i]).collect();
            let gzv = gz(&z);
            let rp: Vec<f64> = (0..m).map(|i| gzv[i] + s[i] - rows[i].rhs).collect();
            mu = s.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>() / m as f64;
            rp_inf = rp.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let hz_inf = hz.iter().map(|v| v.abs()).fold(0.0, f64::max);
            rd_inf = rd.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let met = |t: f64| rp_inf <= t * (1.0 + h_inf) && rd_inf <= t * (1.0 + f_inf + hz_inf) && mu <= t;
            if met(tol) {
                return Ok(pack(&z, &lam, it, rp_inf, rd_inf));
            }
            if met(ACCEPTABLE_TOL) {
                acceptable = Some(pack(&z, &lam, it, rp_inf, rd_inf));
            }
            let htl: f64 = rows.iter().zip(&lam).map(|(r, l)| r.rhs * l).sum();
            if htl < 0.0 {
                let gtl_inf = gtl.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if gtl_inf <= 1e-8 * -htl {
                    return Err(QpError::Infeasible);
                }
            }

            let w: Vec<f64> = lam.iter().zip(&s).map(|(l, si)| l / si).collect();
            let chol = match factor(Some(&w)) {
                Ok(c) => c,
                Err(e) => return acceptable.ok_or(e),
            };
            let normal_mul = |x: &[f64]| -> Vec<f64> {
                let gx: Vec<f64> = gz(x).iter().zip(&w).map(|(a, b)| a * b).collect();
                let hx = base.mul_vec(x);
                let gtx = gt(&gx);
                (0..n).map(|i| hx[i] + reg * x[i] + gtx[i]).collect()
            };
            let direction = |rc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
                let t: Vec<f64> = (0..m).map(|i| w[i] * rp[i] - rc[i] / s[i]).collect();
                let gtt = gt(&t);
                let rhs: Vec<f64> = (0..n).map(|i| -rd[i] - gtt[i]).collect();
                let mut dz = chol.solve(&rhs);
                let kdz = normal_mul(&dz);
                let res: Vec<f64> = (0..n).map(|i| rhs[i] - kdz[i]).collect();
                for (d, c) in dz.iter_mut().zip(chol.solve(&res)) {
                    *d += c;
                }
                let gdz = gz(&dz);
                let dl: Vec<f64> = (0..m).map(|i| w[i] * (gdz[i] + rp[i]) - rc[i] / s[i]).collect();
                let ds: Vec<f64> = (0..m).map(|i| -(rc[i] + s[i] * dl[i]) / lam[i]).collect();
                (dz, dl, ds)
            };
            let max_step = |ds: &[f64], dl: &[f64]| -> f64 {
                let mut a: f64 = 1.0;
                for i in 0..m {
                    if ds[i] < 0.0 {
                        a = a.min(-s[i] / ds[i]);
                    }
                    if dl[i] < 0.0 {
                        a = a.min(-lam[i] / dl[i]);
                    }
                }
                a
            };

            let rc_aff: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
            let (_, dl_a, ds_a) = direction(&rc_aff);
            let a_aff = max_step(&ds_a, &dl_a);
            let mu_aff = (0..m).map(|i| (s[i] + a_aff * ds_a[i]) * (lam[i] + a_aff * dl_a[i])).sum::<f64>() / m as f64;
            let sigma = {
                let r = mu_aff / mu;
                r * r * r
            };
            let rc: Vec<f64> = (0..m).map(|i| rc_aff[i] + ds_a[i] * dl_a[i] - sigma * mu).collect();
            let (dz, dl, ds) = direction(&rc);
            let alpha = (0.99 * max_step(&ds, &dl)).min(1.0);
            for i in 0..n {
                z[i] += alpha * dz[i];
            }
            for i in 0..m {
                s[i] = (s[i] + alpha * ds[i]).max(1e-300);
                lam[i] = (lam[i] + alpha * dl[i]).max(1e-300);
            }
        }
        if let Some(sol) = acceptable {
            return Ok(sol);
        }
        Err(QpError::Stalled { iterations: opts.max_iterations, primal: rp_inf, dual: rd_inf, gap: mu })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> BandedQp {
        let mut qp = BandedQp::new(n, 1);
        for i in 0..n {
            qp.hessian.add(i, i, 2.0).unwrap();
            if i > 0 {
                qp.hessian.add(i, i - 1, -1.0).unwrap();
            }
        }
        qp
    }

    #[test]
    fn band_cholesky_solves_tridiagonal() {
        let qp = tridiag(6);
        let b = [1.0, 0.0, 2.0, -1.0, 0.5, 3.0];
        let x = qp.hessian.clone().cholesky().unwrap().solve(&b);
        let back = qp.hessian.mul_vec(&x);
        for (a, e) in back.iter().zip(&b) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_minimum() {
        let mut qp = BandedQp::new(2, 0);
        qp.hessian.add(0, 0, 2.0).unwrap();
        qp.hessian.add(1, 1, 4.0).unwrap();
        qp.linear = vec![-2.0, -4.0];
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-9 && (sol.z[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn active_bound_and_multiplier() {
        // min (z0-2)² + (z1-1)², z0 + z1 ≤ 1 → z = (1, 0), λ = 2
        let mut qp = BandedQp::new(2, 1);
        qp.hessian.add(0, 0, 2.0).unwrap();
        qp.hessian.add(1, 1, 2.0).unwrap();
        qp.linear = vec![-4.0, -2.0];
        qp.rows.push(SparseRow::new(vec![(0, 1.0), (1, 1.0)], 1.0));
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-7, "{:?}", sol.z);
        assert!(sol.z[1].abs() < 1e-7);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasible() {
        let mut qp = tridiag(3);
        qp.rows.push(SparseRow::new(vec![(1, 1.0)], -1.0));
        qp.rows.push(SparseRow::new(vec![(1, -1.0)], -1.0));
        assert_eq!(qp.solve(&QpOptions::default()), Err(QpError::Infeasible));
    }

    #[test]
    fn row_merging() {
        let r = SparseRow::new(vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 1.0)], 0.0);
        assert_eq!(r.cols, vec![1]);
        assert_eq!(r.vals, vec![3.0]);
    }
}
