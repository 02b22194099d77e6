//! Test-only dense two-phase simplex used to cross-check the MCKP LP
//! relaxation. Deliberately independent of the production solver: it builds
//! the full tableau for
//!
//!   max sum(qoe * x)   s.t.  sum_m x[n][m] = 1 for each mesh n,
//!                            sum(faces * x) <= B,  x >= 0
//!
//! (upper bounds x <= 1 are implied by the equalities) and pivots with
//! Bland's rule.

#![cfg(test)]

use crate::allocator::AllocationInstance;

const EPS: f64 = 1e-9;

struct Tableau {
    /// rows x (n_vars + 1); last column is the RHS.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_vars: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in &mut self.a[row] {
            *v /= p;
        }
        for r in 0..self.a.len() {
            if r != row && self.a[r][col].abs() > 0.0 {
                let f = self.a[r][col];
                for c in 0..self.a[r].len() {
                    let delta = f * self.a[row][c];
                    self.a[r][c] -= delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `costs . x` from the current basic feasible point.
    /// Returns false if unbounded.
    fn run(&mut self, costs: &[f64], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            // Reduced costs from scratch each iteration; slow but simple.
            let mut entering = None;
            for j in 0..self.n_vars {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut reduced = costs[j];
                for (r, &b) in self.basis.iter().enumerate() {
                    reduced -= costs[b] * self.a[r][j];
                }
                if reduced < -EPS {
                    entering = Some(j); // Bland: first improving index
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let rhs = self.n_vars;
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                if self.a[r][col] > EPS {
                    let ratio = self.a[r][rhs] / self.a[r][col];
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - EPS
                                || (ratio < lratio + EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, col);
        }
    }

    fn objective(&self, costs: &[f64]) -> f64 {
        let rhs = self.n_vars;
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &b)| costs[b] * self.a[r][rhs])
            .sum()
    }
}

/// Optimal LP value, or `None` if the program is infeasible.
pub fn simplex_lp_value(instance: &AllocationInstance) -> Option<f64> {
    let n = instance.meshes.len();
    let n_x: usize = instance.meshes.iter().map(|m| m.options.len()).sum();
    let n_vars = n_x + 1 + n; // x, budget slack, artificials
    let n_rows = n + 1;

    let mut a = vec![vec![0.0; n_vars + 1]; n_rows];
    let mut col = 0;
    let mut qoe_cost = vec![0.0; n_vars];
    for (mesh_idx, mesh) in instance.meshes.iter().enumerate() {
        for opt in &mesh.options {
            a[mesh_idx][col] = 1.0;
            a[n][col] = opt.faces as f64;
            qoe_cost[col] = -opt.qoe; // minimize negative QoE
            col += 1;
        }
    }
    a[n][n_x] = 1.0; // budget slack
    a[n][n_vars] = instance.budget as f64;
    for mesh_idx in 0..n {
        a[mesh_idx][n_x + 1 + mesh_idx] = 1.0; // artificial
        a[mesh_idx][n_vars] = 1.0;
    }

    let mut tab = Tableau {
        a,
        basis: (0..n + 1)
            .map(|r| if r < n { n_x + 1 + r } else { n_x })
            .collect(),
        n_vars,
    };

    // Phase 1: drive the artificials to zero.
    let mut phase1 = vec![0.0; n_vars];
    for c in phase1.iter_mut().skip(n_x + 1) {
        *c = 1.0;
    }
    assert!(tab.run(&phase1, &|_| true), "phase 1 unbounded");
    if tab.objective(&phase1) > 1e-7 {
        return None;
    }

    // Artificials lingering in the basis at value 0 must be pivoted out
    // before phase 2; otherwise a phase-2 pivot can drag one positive and
    // silently relax its equality row.
    for r in 0..tab.basis.len() {
        if tab.basis[r] > n_x {
            let col = (0..=n_x)
                .max_by(|&i, &j| tab.a[r][i].abs().total_cmp(&tab.a[r][j].abs()))
                .unwrap();
            assert!(
                tab.a[r][col].abs() > EPS,
                "dependent constraint row in simplex oracle"
            );
            tab.pivot(r, col);
        }
    }

    // Phase 2: artificials are out of the basis and must not re-enter.
    assert!(tab.run(&qoe_cost, &|j| j <= n_x), "phase 2 unbounded");
    Some(-tab.objective(&qoe_cost))
}
