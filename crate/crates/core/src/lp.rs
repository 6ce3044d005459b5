//! Dense two-phase simplex for small standard-form programs
//!
//! ```text
//!   minimize  cᵀλ   subject to  Aλ = b,  λ ≥ 0
//! ```
//!
//! Pricing is Dantzig's rule (most negative reduced cost) with ties broken by
//! the lowest column index; after a run of degenerate pivots the solver drops
//! to Bland's rule, which cannot cycle. Sizes here are a handful of rows and
//! at most a few thousand columns.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub primal: Vec<f64>,
    /// Multipliers `y` of the equality rows (`Aᵀy ≤ c`, `bᵀy = value`).
    pub dual: DVector<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial, rhs stored separately
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let p = self.a[pr * cols + pc];
        for c in 0..cols {
            self.a[pr * cols + c] /= p;
        }
        self.rhs[pr] /= p;
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * cols + pc];
            if f == 0.0 {
                continue;
            }
            for c in 0..cols {
                self.a[r * cols + c] -= f * self.a[pr * cols + c];
            }
            self.rhs[r] -= f * self.rhs[pr];
            self.a[r * cols + pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut red: Vec<f64> = cost[..allowed].to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (c, rc) in red.iter_mut().enumerate() {
                *rc -= cb * self.at(r, c);
            }
        }
        red
    }

    /// Runs simplex iterations on `cost`, with entering columns restricted to
    /// `0..allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_iter: usize) -> Result<()> {
        let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let red = self.reduced_costs(cost, allowed);
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = -PIVOT_TOL * scale;
            for (c, &rc) in red.iter().enumerate() {
                if self.basis.contains(&c) {
                    continue;
                }
                if bland {
                    if rc < -PIVOT_TOL * scale {
                        entering = Some(c);
                        break;
                    }
                } else if rc < best {
                    best = rc;
                    entering = Some(c);
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = self.at(r, pc);
                if v > PIVOT_TOL {
                    let ratio = self.rhs[r].max(0.0) / v;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-14 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie
                                || tie && self.basis[r] < self.basis[lr]
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(Error::Lp("is unbounded"));
            };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
        Err(Error::NonConvergence { what: "simplex", iterations: max_iter })
    }
}

/// Solves `min cᵀλ, Aλ = b, λ ≥ 0`.
pub fn solve_standard(a: &DMatrix<f64>, b: &DVector<f64>, c: &[f64]) -> Result<LpSolution> {
    let (m, n) = a.shape();
    Error::check_dim(m, b.len())?;
    Error::check_dim(n, c.len())?;
    let cols = n + m;
    let mut tab = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * cols],
        rhs: vec![0.0; m],
        basis: (n..n + m).collect(),
    };
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for col in 0..n {
            tab.a[r * cols + col] = sign * a[(r, col)];
        }
        tab.a[r * cols + n + r] = 1.0;
        tab.rhs[r] = sign * b[r];
    }
    let max_iter = 50 * (n + m) + 1000;

    // phase 1: drive the artificials to zero
    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase1, cols, max_iter)?;
    let infeas: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&bv, _)| bv >= n)
        .map(|(_, &v)| v)
        .sum();
    let bscale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if infeas > 1e-9 * bscale {
        return Err(Error::Lp("is infeasible"));
    }
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(col) = (0..n).find(|&col| tab.at(r, col).abs() > 1e-9) {
                tab.pivot(r, col);
            }
        }
    }

    // phase 2
    let mut cost = c.to_vec();
    cost.resize(cols, 0.0);
    tab.optimize(&cost, n, max_iter)?;

    let mut primal = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            primal[bv] = tab.rhs[r].max(0.0);
        }
    }
    let value = primal.iter().zip(c).map(|(x, c)| x * c).sum();

    // duals from Bᵀy = c_B on the original rows
    let mut basis_mat = DMatrix::<f64>::zeros(m, m);
    let mut cb = DVector::<f64>::zeros(m);
    for (k, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            basis_mat.set_column(k, &a.column(bv));
            cb[k] = c[bv];
        } else {
            basis_mat[(bv - n, k)] = 1.0;
        }
    }
    let dual = basis_mat
        .transpose()
        .lu()
        .solve(&cb)
        .ok_or(Error::Lp("has a singular final basis"))?;
    Ok(LpSolution { value, primal, dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_textbook_program() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![4.0, 6.0]);
        let sol = solve_standard(&a, &b, &[-1.0, -1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(sol.value, -2.8, epsilon = 1e-12);
        assert_relative_eq!(sol.primal[0], 1.6, epsilon = 1e-12);
        assert_relative_eq!(sol.primal[1], 1.2, epsilon = 1e-12);
        // strong duality
        assert_relative_eq!(b.dot(&sol.dual), sol.value, epsilon = 1e-12);
    }

    #[test]
    fn negative_rhs_and_duals() {
        // min x1 + x2 s.t. x1 - x2 = -3
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![-3.0]);
        let sol = solve_standard(&a, &b, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(sol.value, 3.0, epsilon = 1e-12);
        assert_relative_eq!(sol.dual[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![-1.0]);
        assert_eq!(solve_standard(&a, &b, &[1.0, 1.0]).unwrap_err(), Error::Lp("is infeasible"));
    }

    #[test]
    fn unbounded_is_reported() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0]);
        assert_eq!(solve_standard(&a, &b, &[0.0, -1.0]).unwrap_err(), Error::Lp("is unbounded"));
    }
}
