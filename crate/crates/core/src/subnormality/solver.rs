//! Search for a family satisfying the consistency condition on a fixed grid
//! of locations, posed as a linear feasibility problem `A p = b, p >= 0` and
//! solved by a phase-one simplex with Bland's rule (deterministic pivots).

use serde::Serialize;

use crate::calculus::compute_h;
use crate::error::{Result, WcoError};
use crate::space::SystemInstance;
use crate::subnormality::cc::verify_cc_at;
use crate::subnormality::family::{PointMeasure, ProbabilityFamily};
use crate::tolerance::Tolerances;

const PIVOT_EPS: f64 = 1e-12;
/// Phase-one objective above which the system is declared infeasible.
const INFEASIBLE_AT: f64 = 1e-9;
/// Solver masses below this are treated as round-off.
const MASS_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum Phase1 {
    Feasible(Vec<f64>),
    /// Minimal sum of artificial variables (on row-scaled constraints).
    Infeasible(f64),
}

/// Finds `x >= 0` with `a x = b`. Rows are scaled to unit max-norm first.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Phase1 {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let scale = row.iter().fold(rhs.abs(), |s, v| s.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; width];
        for (j, v) in row.iter().enumerate() {
            r[j] = sign * v / scale;
        }
        r[n + i] = 1.0;
        r[width - 1] = sign * rhs / scale;
        tab.push(r);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs of minimizing the artificial sum; last entry is -objective.
    let mut cost = vec![0.0; width];
    for r in &tab {
        for j in 0..n {
            cost[j] -= r[j];
        }
        cost[width - 1] -= r[width - 1];
    }

    let max_iter = 50 * (n + m).max(1);
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            let aij = tab[i][enter];
            if aij > PIVOT_EPS {
                let ratio = tab[i][width - 1] / aij;
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = tab[l][width - 1] / tab[l][enter];
                        if ratio < best - PIVOT_EPS
                            || (ratio <= best + PIVOT_EPS && basis[i] < basis[l])
                        {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        // Phase one is bounded below by zero, so an entering column always
        // has a positive entry unless round-off ate it.
        let Some(l) = leave else { break };
        pivot(&mut tab, &mut cost, l, enter);
        basis[l] = enter;
    }

    let objective = -cost[width - 1];
    if objective > INFEASIBLE_AT {
        return Phase1::Infeasible(objective);
    }
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = tab[i][width - 1].max(0.0);
        }
    }
    Phase1::Feasible(x)
}

fn pivot(tab: &mut [Vec<f64>], cost: &mut [f64], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    let f = cost[col];
    for (v, pv) in cost.iter_mut().zip(&pivot_row) {
        *v -= f * pv;
    }
}

/// Which constraints the solver imposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// The consistency condition plus `P(x, .) = delta_0` on
    /// `{h = 0} ∩ {w != 0}`: exactly the families that certify.
    #[default]
    Certifying,
    /// The consistency condition alone.
    PlainCc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Feasible {
        family: ProbabilityFamily,
        /// Largest CC deviation of the returned family.
        residual: f64,
    },
    Infeasible {
        /// Phase-one objective, or the CC deviation when the cleaned-up
        /// solution failed to re-verify.
        residual: f64,
        reason: String,
    },
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible { .. })
    }

    pub fn family(&self) -> Option<&ProbabilityFamily> {
        match self {
            Self::Feasible { family, .. } => Some(family),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Sorted grid with locations closer than the merge tolerance collapsed.
pub fn normalize_grid(grid: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(WcoError::InvalidGrid("grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(WcoError::InvalidGrid(format!(
            "location {t} is not a finite nonnegative number"
        )));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(sorted.len());
    for t in sorted {
        if out.last().is_none_or(|&last| !tol.same_location(last, t)) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Solves for masses `p(x, t) >= 0` on `grid` with `sum_t p(x, t) = 1` and,
/// for every `y` with `h(y) > 0` and every `t`,
/// `sum_{phi(z) = y} |w(z)|^2 mu(z) p(z, t) / mu(y) = t p(y, t)`.
/// These are the CC singleton equations multiplied through by `h(y)`.
pub fn solve_cc(inst: &SystemInstance, grid: &[f64], mode: SolveMode, tol: &Tolerances) -> Result<SolveOutcome> {
    let grid = normalize_grid(grid, tol)?;
    let h = compute_h(inst).values;
    let n_atoms = inst.len();
    let zero_index = grid.iter().position(|&t| t == 0.0);

    // Variable index for each (x, t) that may carry mass.
    let mut var = vec![vec![None; grid.len()]; n_atoms];
    let mut count = 0;
    for x in inst.space().atoms() {
        let pinned = mode == SolveMode::Certifying && inst.w_nonzero(x) && h[x] == 0.0;
        for (k, _) in grid.iter().enumerate() {
            if !pinned || Some(k) == zero_index {
                var[x][k] = Some(count);
                count += 1;
            }
        }
    }

    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for x in inst.space().atoms() {
        let mut row = vec![0.0; count];
        for v in var[x].iter().flatten() {
            row[*v] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    let fibers = inst.fibers();
    for y in inst.space().atoms().filter(|&y| h[y] > 0.0) {
        for (k, &t) in grid.iter().enumerate() {
            let mut row = vec![0.0; count];
            for &z in &fibers[y] {
                if let Some(v) = var[z][k] {
                    row[v] += inst.weighted_mass(z) / inst.space().mass(y);
                }
            }
            if let Some(v) = var[y][k] {
                row[v] -= t;
            }
            if row.iter().any(|&c| c != 0.0) {
                a.push(row);
                b.push(0.0);
            }
        }
    }

    let solution = match phase_one(&a, &b) {
        Phase1::Infeasible(residual) => {
            return Ok(SolveOutcome::Infeasible {
                residual,
                reason: "no nonnegative solution of the consistency equations on this grid".into(),
            })
        }
        Phase1::Feasible(x) => x,
    };

    let mut measures = Vec::with_capacity(n_atoms);
    for x in inst.space().atoms() {
        let raw: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .filter_map(|(k, &t)| var[x][k].map(|v| (t, solution[v])))
            .filter(|&(_, p)| p > MASS_FLOOR)
            .collect();
        let total: f64 = raw.iter().map(|a| a.1).sum();
        measures.push(PointMeasure::new(raw.into_iter().map(|(t, p)| (t, p / total)), tol)?);
    }
    let family = ProbabilityFamily::new(inst.space(), measures)?;
    let report = verify_cc_at(inst, &family, tol, tol.solver)?;
    if report.satisfied {
        Ok(SolveOutcome::Feasible {
            family,
            residual: report.max_residual,
        })
    } else {
        Ok(SolveOutcome::Infeasible {
            residual: report.max_residual,
            reason: "the phase-one solution did not re-verify within the solver tolerance".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{atom_name, MeasureSpace};
    use crate::subnormality::cc::verify_cc;
    use crate::C64;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn inst(mass: &[f64], phi: &[usize], w: &[C64]) -> SystemInstance {
        let space = MeasureSpace::new(mass.iter().enumerate().map(|(k, &m)| (atom_name(k), m)))
            .unwrap();
        SystemInstance::new(space, phi.to_vec(), w.to_vec()).unwrap()
    }

    #[test]
    fn phase_one_small_systems() {
        // x + y = 1, x - y = 0.
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        match phase_one(&a, &[1.0, 0.0]) {
            Phase1::Feasible(x) => {
                assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        // x + y = 1, x + y = 2.
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(phase_one(&a, &[1.0, 2.0]), Phase1::Infeasible(r) if r > 0.1));
        // x = -1 has no nonnegative solution.
        assert!(matches!(phase_one(&[vec![1.0]], &[-1.0]), Phase1::Infeasible(_)));
    }

    #[test]
    fn multiplication_recovers_point_masses() {
        let tol = Tolerances::default();
        let m = inst(&[1.0, 2.0, 3.0], &[0, 1, 2], &[c(2.0), C64::new(0.0, 3.0), c(1.0)]);
        let out = solve_cc(&m, &[4.0, 9.0, 1.0], SolveMode::Certifying, &tol).unwrap();
        let fam = out.family().unwrap();
        assert_eq!(fam.get(0).atoms(), &[(4.0, 1.0)]);
        assert_eq!(fam.get(1).atoms(), &[(9.0, 1.0)]);
        assert_eq!(fam.get(2).atoms(), &[(1.0, 1.0)]);
    }

    #[test]
    fn quasinormal_cycle_is_feasible() {
        let tol = Tolerances::default();
        let q = inst(&[1.0, 4.0, 2.0], &[1, 0, 0], &[c(4.0), C64::new(0.0, 1.0), c(0.0)]);
        let out = solve_cc(&q, &[0.0, 1.0, 4.0, 7.5], SolveMode::Certifying, &tol).unwrap();
        let fam = out.family().expect("feasible");
        assert!(verify_cc(&q, fam, &tol).unwrap().satisfied);
    }

    #[test]
    fn collapse_is_infeasible_when_certifying() {
        let tol = Tolerances::default();
        let col = inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)]);
        for grid in [vec![0.0], vec![9.0], vec![0.0, 9.0], vec![0.0, 1.0, 2.0, 3.0, 4.5, 9.0, 10.0, 81.0]] {
            let out = solve_cc(&col, &grid, SolveMode::Certifying, &tol).unwrap();
            assert!(!out.is_feasible(), "grid {grid:?}");
        }
        // The consistency condition alone admits delta_9 at both atoms.
        let plain = solve_cc(&col, &[0.0, 9.0], SolveMode::PlainCc, &tol).unwrap();
        let fam = plain.family().expect("delta_9 is feasible");
        assert_eq!(fam.get(0).atoms(), &[(9.0, 1.0)]);
        assert_eq!(fam.get(1).atoms(), &[(9.0, 1.0)]);
    }

    #[test]
    fn bad_grids() {
        let tol = Tolerances::default();
        let col = inst(&[1.0, 2.0], &[0, 0], &[c(1.0), c(2.0)]);
        assert!(matches!(
            solve_cc(&col, &[1.0, -2.0], SolveMode::Certifying, &tol),
            Err(WcoError::InvalidGrid(_))
        ));
        assert!(matches!(
            solve_cc(&col, &[], SolveMode::Certifying, &tol),
            Err(WcoError::InvalidGrid(_))
        ));
    }
}
