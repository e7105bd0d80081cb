//! Dense two-phase tableau simplex over nonnegative variables.
//!
//! Entering columns follow Dantzig's rule (largest reduced cost, lowest index on
//! ties); after a run of degenerate pivots the solver switches permanently to
//! Bland's rule, which cannot cycle. The ratio test breaks ties by the lowest
//! basic-variable index. Given identical input the pivot sequence is identical.

use super::hrep::{Row, Sense};
use super::{LpStatus, PolytopeError};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;
const MAX_PIVOTS: usize = 200_000;

/// `maximize objective · x  s.t.  rows, x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
    /// Row duals in the original row orientation; `∂value/∂bound_k`.
    pub duals: Vec<f64>,
}

struct Tableau {
    m: usize,
    ncols: usize,
    width: usize,
    t: Vec<f64>,
    reduced: Vec<f64>,
    value: f64,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.ncols]
    }

    fn pivot(&mut self, p: usize, e: usize) {
        let w = self.width;
        let piv = self.t[p * w + e];
        {
            let row = &mut self.t[p * w..(p + 1) * w];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[e] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(p * w);
        let (prow, after) = rest.split_at_mut(w);
        for chunk in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = chunk[e];
            if f != 0.0 {
                for (v, &pv) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                chunk[e] = 0.0;
            }
        }
        let f = self.reduced[e];
        if f != 0.0 {
            for (r, &pv) in self.reduced.iter_mut().zip(prow.iter()) {
                *r -= f * pv;
            }
            self.reduced[e] = 0.0;
            self.value += f * prow[self.ncols];
        }
        self.basis[p] = e;
    }

    fn entering(&self, allowed: &[bool], bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..self.ncols {
            if !allowed[j] || self.reduced[j] <= COST_EPS {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some(b) if self.reduced[j] <= self.reduced[b] => {}
                _ => best = Some(j),
            }
        }
        best
    }

    fn leaving(&self, e: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, e);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    /// Runs simplex iterations until optimality or unboundedness.
    fn optimize(&mut self, allowed: &[bool]) -> Result<bool, PolytopeError> {
        let mut streak = 0usize;
        let mut bland = false;
        for _ in 0..MAX_PIVOTS {
            let Some(e) = self.entering(allowed, bland) else {
                return Ok(true);
            };
            let Some((p, ratio)) = self.leaving(e) else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(p, e);
            if !self.value.is_finite() {
                return Err(PolytopeError::Numerical("non-finite objective during pivoting".into()));
            }
        }
        Err(PolytopeError::Numerical(format!("pivot limit {MAX_PIVOTS} exceeded")))
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Self {
        assert_eq!(objective.len(), num_vars);
        Self { num_vars, objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, row: Row) {
        assert_eq!(row.normal.len(), self.num_vars);
        self.rows.push(row);
    }

    pub fn solve(&self) -> Result<SimplexSolution, PolytopeError> {
        let n = self.num_vars;
        let m = self.rows.len();

        // Orient every row to a nonnegative right-hand side.
        let mut sign = vec![1.0; m];
        let mut senses = Vec::with_capacity(m);
        for (i, row) in self.rows.iter().enumerate() {
            if !row.bound.is_finite() || row.normal.iter().any(|v| !v.is_finite()) {
                return Err(PolytopeError::Numerical(format!("non-finite data in row {i}")));
            }
            let mut s = row.sense;
            if row.bound < 0.0 {
                sign[i] = -1.0;
                s = match s {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            senses.push(s);
        }

        let mut ncols = n;
        let mut aux_col = vec![usize::MAX; m];
        let mut init_col = vec![0usize; m];
        let mut art_cols = Vec::new();
        for i in 0..m {
            match senses[i] {
                Sense::Le => {
                    init_col[i] = ncols;
                    ncols += 1;
                }
                Sense::Ge => {
                    aux_col[i] = ncols;
                    init_col[i] = ncols + 1;
                    art_cols.push(ncols + 1);
                    ncols += 2;
                }
                Sense::Eq => {
                    init_col[i] = ncols;
                    art_cols.push(ncols);
                    ncols += 1;
                }
            }
        }
        let mut is_art = vec![false; ncols];
        for &c in &art_cols {
            is_art[c] = true;
        }

        let width = ncols + 1;
        let mut t = vec![0.0; m * width];
        for (i, row) in self.rows.iter().enumerate() {
            let base = i * width;
            for (j, &a) in row.normal.iter().enumerate() {
                t[base + j] = sign[i] * a;
            }
            t[base + init_col[i]] = 1.0;
            if aux_col[i] != usize::MAX {
                t[base + aux_col[i]] = -1.0;
            }
            t[base + ncols] = sign[i] * row.bound;
        }

        let mut tab = Tableau {
            m,
            ncols,
            width,
            t,
            reduced: vec![0.0; ncols],
            value: 0.0,
            basis: init_col.clone(),
        };

        let scale = 1.0 + self.rows.iter().map(|r| r.bound.abs()).fold(0.0, f64::max);

        if !art_cols.is_empty() {
            // Phase one: maximize −Σ artificials.
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    for j in 0..ncols {
                        tab.reduced[j] += tab.at(i, j);
                    }
                    tab.value -= tab.rhs(i);
                }
            }
            for &c in &art_cols {
                tab.reduced[c] = 0.0;
            }
            let allowed = vec![true; ncols];
            tab.optimize(&allowed)?;
            if tab.value < -PHASE_ONE_TOL * scale {
                return Ok(SimplexSolution {
                    status: LpStatus::Infeasible,
                    x: vec![0.0; n],
                    value: f64::NAN,
                    duals: vec![0.0; m],
                });
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    if let Some(j) = (0..ncols).find(|&j| !is_art[j] && tab.at(i, j).abs() > PIVOT_EPS) {
                        tab.pivot(i, j);
                    }
                }
            }
        }

        // Phase two.
        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&self.objective);
        tab.value = 0.0;
        tab.reduced.copy_from_slice(&cost);
        for i in 0..m {
            let cb = cost[tab.basis[i]];
            if cb != 0.0 {
                for j in 0..ncols {
                    tab.reduced[j] -= cb * tab.at(i, j);
                }
                tab.value += cb * tab.rhs(i);
            }
        }
        for i in 0..m {
            tab.reduced[tab.basis[i]] = 0.0;
        }
        let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
        let bounded = tab.optimize(&allowed)?;
        if !bounded {
            return Ok(SimplexSolution {
                status: LpStatus::Unbounded,
                x: vec![0.0; n],
                value: f64::INFINITY,
                duals: vec![0.0; m],
            });
        }

        let mut x = vec![0.0; n];
        for i in 0..m {
            let b = tab.basis[i];
            if b < n {
                x[b] = tab.rhs(i).max(0.0);
            }
        }
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = (0..m).map(|i| -tab.reduced[init_col[i]] * sign[i]).collect();
        Ok(SimplexSolution { status: LpStatus::Optimal, x, value, duals })
    }
}
