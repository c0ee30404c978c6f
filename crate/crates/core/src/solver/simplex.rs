//! Bundled reference solver: a dense two-phase primal simplex.
//!
//! Exact vertex solutions with duals read off the terminal basis, intended
//! for test-size instances (up to a few thousand variables). Full-year
//! problems belong on the interior-point backend.

use crate::lp::{LinearProgram, RowLabel};
use crate::scalar::Scalar;

use super::{LpBackend, LpSolution, SolveError};

/// Dense two-phase primal simplex with a Bland anti-cycling fallback.
#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Hard cap on tableau columns; larger instances are refused.
    pub max_variables: usize,
}

impl DenseSimplex {
    /// Above this size `BackendChoice::Auto` prefers the interior-point
    /// backend instead.
    pub const COMFORTABLE_LIMIT: usize = 5_000;
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex {
            max_variables: 20_000,
        }
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn solve(&self, lp: &LinearProgram<f64>) -> Result<LpSolution<f64>, SolveError> {
        solve_dense(lp, self.max_variables)
    }
}

struct Tableau<S> {
    /// Row-major `m x (width)` with the rhs in the last column.
    cells: Vec<S>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    #[inline]
    fn at(&self, row: usize, col: usize) -> S {
        self.cells[row * self.width + col]
    }

    #[inline]
    fn rhs(&self, row: usize) -> S {
        self.cells[row * self.width + self.width - 1]
    }

    fn pivot(&mut self, pivot_row: usize, pivot_col: usize) {
        let width = self.width;
        let pivot = self.at(pivot_row, pivot_col);
        let start = pivot_row * width;
        let inv = pivot.recip();
        for k in 0..width {
            self.cells[start + k] = self.cells[start + k] * inv;
        }
        for row in 0..self.m {
            if row == pivot_row {
                continue;
            }
            let factor = self.at(row, pivot_col);
            if factor.is_zero() {
                continue;
            }
            let row_start = row * width;
            for k in 0..width {
                let delta = factor * self.cells[start + k];
                self.cells[row_start + k] = self.cells[row_start + k] - delta;
            }
            // keep the pivot column numerically exact
            self.cells[row_start + pivot_col] = S::zero();
        }
        self.basis[pivot_row] = pivot_col;
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

fn run_phase<S: Scalar>(
    tableau: &mut Tableau<S>,
    costs: &[S],
    allowed: &[bool],
    reduced_tol: S,
    pivot_tol: S,
) -> PhaseOutcome {
    let n_cols = tableau.width - 1;
    let bland_after = 20 * (tableau.m + n_cols) + 1_000;
    let hard_limit = 200 * (tableau.m + n_cols) + 20_000;
    let mut iterations = 0usize;
    loop {
        let cb: Vec<S> = tableau.basis.iter().map(|b| costs[*b]).collect();
        // entering column
        let bland = iterations > bland_after;
        let mut entering: Option<(usize, S)> = None;
        for j in 0..n_cols {
            if !allowed[j] {
                continue;
            }
            let mut z = S::zero();
            for i in 0..tableau.m {
                let t = tableau.at(i, j);
                if !t.is_zero() {
                    z = z + cb[i] * t;
                }
            }
            let reduced = costs[j] - z;
            if reduced < -reduced_tol {
                if bland {
                    entering = Some((j, reduced));
                    break;
                }
                match entering {
                    Some((_, best)) if reduced >= best => {}
                    _ => entering = Some((j, reduced)),
                }
            }
        }
        let Some((enter, _)) = entering else {
            return PhaseOutcome::Optimal;
        };

        // ratio test; ties resolved toward the smallest basis index
        let mut leave: Option<(usize, S)> = None;
        for i in 0..tableau.m {
            let t = tableau.at(i, enter);
            if t > pivot_tol {
                let ratio = tableau.rhs(i) / t;
                match leave {
                    Some((best_row, best_ratio)) => {
                        let tie =
                            (ratio - best_ratio).abs() <= pivot_tol * (S::one() + best_ratio.abs());
                        if ratio < best_ratio - pivot_tol
                            || (tie && tableau.basis[i] < tableau.basis[best_row])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                    None => leave = Some((i, ratio)),
                }
            }
        }
        let Some((leave_row, _)) = leave else {
            return PhaseOutcome::Unbounded;
        };
        tableau.pivot(leave_row, enter);
        iterations += 1;
        if iterations > hard_limit {
            return PhaseOutcome::IterationLimit;
        }
    }
}

fn solve_dense<S: Scalar>(
    lp: &LinearProgram<S>,
    max_variables: usize,
) -> Result<LpSolution<S>, SolveError> {
    lp.validate_structure().map_err(SolveError::Numerical)?;
    let n = lp.n_vars;
    let n_eq = lp.eq_rows.len();
    let n_ub = lp.ub_rows.len();
    let m = n_eq + n_ub;

    // columns: structural | slacks (one per ub row) | artificials
    let n_slack = n_ub;
    // artificials: every eq row, plus ub rows whose rhs is negative
    let needs_artificial: Vec<bool> = lp
        .eq_rows
        .iter()
        .map(|_| true)
        .chain(lp.ub_rows.iter().map(|r| r.rhs < S::zero()))
        .collect();
    let n_art = needs_artificial.iter().filter(|f| **f).count();
    let n_cols = n + n_slack + n_art;
    if n_cols > max_variables {
        return Err(SolveError::TooLarge {
            backend: "simplex",
            variables: n_cols,
            limit: max_variables,
        });
    }

    let width = n_cols + 1;
    let mut cells = vec![S::zero(); m * width];
    let mut flip = vec![false; m];
    let mut labels: Vec<RowLabel> = Vec::with_capacity(m);
    let mut basis = vec![usize::MAX; m];
    let mut unit_col = vec![usize::MAX; m];
    let mut next_art = n + n_slack;

    for (i, row) in lp.eq_rows.iter().chain(&lp.ub_rows).enumerate() {
        labels.push(row.label);
        let is_ub = i >= n_eq;
        let do_flip = row.rhs < S::zero();
        flip[i] = do_flip;
        let sign = if do_flip { -S::one() } else { S::one() };
        let start = i * width;
        for (j, coeff) in &row.coeffs {
            cells[start + *j] = cells[start + *j] + sign * *coeff;
        }
        if is_ub {
            let slack_col = n + (i - n_eq);
            cells[start + slack_col] = sign;
            if !do_flip {
                basis[i] = slack_col;
                unit_col[i] = slack_col;
            }
        }
        if needs_artificial[i] {
            cells[start + next_art] = S::one();
            basis[i] = next_art;
            unit_col[i] = next_art;
            next_art += 1;
        }
        cells[start + n_cols] = sign * row.rhs;
    }

    let mut tableau = Tableau {
        cells,
        width,
        m,
        basis,
    };

    let scale_b = lp
        .eq_rows
        .iter()
        .chain(&lp.ub_rows)
        .map(|r| r.rhs.abs())
        .fold(S::one(), S::max);
    let pivot_tol = crate::scalar::real::<S>(1e-9);
    let feas_tol = crate::scalar::real::<S>(1e-7) * scale_b;

    // phase 1: drive artificials to zero
    if n_art > 0 {
        let mut costs = vec![S::zero(); n_cols];
        for c in costs.iter_mut().skip(n + n_slack) {
            *c = S::one();
        }
        let allowed = vec![true; n_cols];
        match run_phase(&mut tableau, &costs, &allowed, pivot_tol, pivot_tol) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => {
                return Err(SolveError::Numerical(
                    "phase-1 objective reported unbounded".into(),
                ))
            }
            PhaseOutcome::IterationLimit => {
                return Err(SolveError::Numerical("phase-1 iteration limit".into()))
            }
        }
        // infeasible if any artificial stays meaningfully positive
        let mut worst: Option<(usize, S)> = None;
        for i in 0..m {
            if tableau.basis[i] >= n + n_slack {
                let level = tableau.rhs(i);
                if level > feas_tol {
                    match worst {
                        Some((_, w)) if level <= w => {}
                        _ => worst = Some((i, level)),
                    }
                }
            }
        }
        if let Some((row, _)) = worst {
            return Err(SolveError::Infeasible {
                row_class: format!("{} ({})", labels[row].class(), labels[row]),
            });
        }
        // pivot remaining zero-level artificials out where possible
        for i in 0..m {
            if tableau.basis[i] >= n + n_slack {
                if let Some(col) =
                    (0..n + n_slack).find(|j| tableau.at(i, *j).abs() > crate::scalar::real(1e-7))
                {
                    tableau.pivot(i, col);
                }
            }
        }
    }

    // phase 2: original costs, artificials banned from entering
    let mut costs = vec![S::zero(); n_cols];
    costs[..n].copy_from_slice(&lp.objective);
    let mut allowed = vec![true; n_cols];
    for a in allowed.iter_mut().skip(n + n_slack) {
        *a = false;
    }
    let cost_scale = lp.objective.iter().map(|c| c.abs()).fold(S::one(), S::max);
    let reduced_tol = crate::scalar::real::<S>(1e-9) * cost_scale;
    match run_phase(&mut tableau, &costs, &allowed, reduced_tol, pivot_tol) {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => return Err(SolveError::Unbounded),
        PhaseOutcome::IterationLimit => {
            return Err(SolveError::Numerical("phase-2 iteration limit".into()))
        }
    }

    // primal values
    let mut x = vec![S::zero(); n];
    for i in 0..m {
        let b = tableau.basis[i];
        if b < n {
            x[b] = tableau.rhs(i);
        }
    }
    for v in x.iter_mut() {
        if *v < S::zero() && *v > -feas_tol {
            *v = S::zero();
        }
    }

    // duals: y_i = c_B . (B^-1 e_i); the initial unit column of each row
    // still holds B^-1 e_i in the final tableau
    let cb: Vec<S> = tableau.basis.iter().map(|b| costs[*b]).collect();
    let mut duals = vec![S::zero(); m];
    for i in 0..m {
        let col = unit_col[i];
        let mut y = S::zero();
        for k in 0..m {
            let t = tableau.at(k, col);
            if !t.is_zero() {
                y = y + cb[k] * t;
            }
        }
        duals[i] = if flip[i] { -y } else { y };
    }

    let objective = lp.objective_value(&x);
    Ok(LpSolution {
        x,
        eq_duals: duals[..n_eq].to_vec(),
        ub_duals: duals[n_eq..].to_vec(),
        objective,
    })
}
