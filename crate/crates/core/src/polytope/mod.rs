//! Halfspace-representation utilities: a small dense LP, support functions,
//! brute-force vertex enumeration and containment checks. Every other module
//! validates against these.

mod hrep;
mod simplex;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hrep::{HRep, Row, Sense};
pub use simplex::{LinearProgram, SimplexSolution};

pub(crate) use hrep::{dot, unit};

/// Row feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Vertex deduplication tolerance.
pub const DEDUP_TOL: f64 = 1e-7;
/// Relative objective tolerance.
pub const OBJ_REL_TOL: f64 = 1e-9;
/// Largest dimension accepted by [`vertices`].
pub const MAX_VERTEX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row with zero normal and unsatisfiable bound")]
    ContradictoryRow,
    #[error("vertex enumeration limited to dimension {MAX_VERTEX_DIM}, got {0}")]
    DimensionTooLarge(usize),
    #[error("polytope is unbounded along the requested direction")]
    Unbounded,
    #[error("polytope is empty")]
    Infeasible,
    #[error("numerical failure in LP: {0}")]
    Numerical(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptSense {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Vec<f64>,
    pub value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

enum VarMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

/// Optimizes `objective · x` over `poly`.
///
/// Variables of the HRep are free. A variable with a single-coordinate lower
/// bound row is shifted onto that bound; all others are split into a difference
/// of nonnegative parts.
pub fn lp_solve(poly: &HRep, objective: &[f64], sense: OptSense) -> Result<LpSolution, PolytopeError> {
    let dim = poly.dim();
    if objective.len() != dim {
        return Err(PolytopeError::DimensionMismatch { expected: dim, found: objective.len() });
    }

    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut bound_row = vec![false; poly.len()];
    for (k, row) in poly.rows().iter().enumerate() {
        let mut nz = row.normal.iter().enumerate().filter(|(_, v)| **v != 0.0);
        let (Some((j, &a)), None) = (nz.next(), nz.next()) else { continue };
        let lb = match (row.sense, a > 0.0) {
            (Sense::Ge, true) | (Sense::Le, false) => row.bound / a,
            (Sense::Eq, _) => row.bound / a,
            _ => continue,
        };
        if lb > lower[j] {
            lower[j] = lb;
        }
        bound_row[k] = row.sense != Sense::Eq;
    }

    let mut maps = Vec::with_capacity(dim);
    let mut ncols = 0;
    for &lb in &lower {
        if lb.is_finite() {
            maps.push(VarMap::Shifted { col: ncols, lower: lb });
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    let dir = match sense {
        OptSense::Max => 1.0,
        OptSense::Min => -1.0,
    };
    let mut c = vec![0.0; ncols];
    for (j, m) in maps.iter().enumerate() {
        match *m {
            VarMap::Shifted { col, .. } => c[col] = dir * objective[j],
            VarMap::Split { pos, neg } => {
                c[pos] = dir * objective[j];
                c[neg] = -dir * objective[j];
            }
        }
    }
    let mut lp = LinearProgram::new(ncols, c);
    for (k, row) in poly.rows().iter().enumerate() {
        if bound_row[k] {
            continue;
        }
        let mut normal = vec![0.0; ncols];
        let mut rhs = row.bound;
        for (j, m) in maps.iter().enumerate() {
            let a = row.normal[j];
            if a == 0.0 {
                continue;
            }
            match *m {
                VarMap::Shifted { col, lower } => {
                    normal[col] = a;
                    rhs -= a * lower;
                }
                VarMap::Split { pos, neg } => {
                    normal[pos] = a;
                    normal[neg] = -a;
                }
            }
        }
        lp.add_row(Row::new(normal, row.sense, rhs));
    }

    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        status => {
            return Ok(LpSolution {
                status,
                point: Vec::new(),
                value: if status == LpStatus::Unbounded { dir * f64::INFINITY } else { f64::NAN },
            })
        }
    }
    let point: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shifted { col, lower } => lower + sol.x[col],
            VarMap::Split { pos, neg } => sol.x[pos] - sol.x[neg],
        })
        .collect();

    let scale = 1.0 + point.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for row in poly.rows() {
        let mag = 1.0 + row.bound.abs() + row.normal.iter().map(|a| a.abs()).sum::<f64>() * scale;
        if row.violation(&point) > FEAS_TOL * mag {
            return Err(PolytopeError::Numerical(format!(
                "optimizer violates a row by {:e}",
                row.violation(&point)
            )));
        }
    }
    let value = dot(objective, &point);
    Ok(LpSolution { status: LpStatus::Optimal, point, value })
}

/// `max { direction · x : x ∈ poly }`.
pub fn support(poly: &HRep, direction: &[f64]) -> Result<f64, PolytopeError> {
    if direction.iter().all(|&d| d == 0.0) {
        if direction.len() != poly.dim() {
            return Err(PolytopeError::DimensionMismatch { expected: poly.dim(), found: direction.len() });
        }
        return Ok(0.0);
    }
    let sol = lp_solve(poly, direction, OptSense::Max)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        LpStatus::Unbounded => Err(PolytopeError::Unbounded),
        LpStatus::Infeasible => Err(PolytopeError::Infeasible),
    }
}

/// True when the polytope has at least one point.
pub fn is_feasible(poly: &HRep) -> Result<bool, PolytopeError> {
    let sol = lp_solve(poly, &vec![0.0; poly.dim()], OptSense::Max)?;
    Ok(sol.status != LpStatus::Infeasible)
}

/// Checks that every coordinate has finite LP minimum and maximum.
pub fn is_bounded(poly: &HRep) -> Result<bool, PolytopeError> {
    for j in 0..poly.dim() {
        for sense in [OptSense::Min, OptSense::Max] {
            let s = lp_solve(poly, &unit(poly.dim(), j), sense)?;
            if s.status == LpStatus::Unbounded {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All basic feasible solutions, lexicographically sorted.
pub fn vertices(poly: &HRep) -> Result<Vec<Vec<f64>>, PolytopeError> {
    let dim = poly.dim();
    if dim > MAX_VERTEX_DIM {
        return Err(PolytopeError::DimensionTooLarge(dim));
    }
    if dim == 0 {
        return Ok(vec![Vec::new()]);
    }
    let rows = poly.rows();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for subset in (0..rows.len()).combinations(dim) {
        let a = DMatrix::from_fn(dim, dim, |i, j| rows[subset[i]].normal[j]);
        let b = DVector::from_fn(dim, |i, _| rows[subset[i]].bound);
        let lu = a.clone().lu();
        let Some(x) = lu.solve(&b) else { continue };
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if (&a * &x - &b).amax() > 1e-9 * (1.0 + b.amax()) {
            continue;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        if poly.max_violation(&x) > FEAS_TOL {
            continue;
        }
        if !found.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= DEDUP_TOL)) {
            found.push(x);
        }
    }
    found.sort_by(|p, q| {
        p.iter()
            .zip(q)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

pub fn contains_point(poly: &HRep, point: &[f64], tol: f64) -> bool {
    point.len() == poly.dim() && poly.rows().iter().all(|r| r.violation(point) <= tol)
}

/// `inner ⊆ outer`, decided by comparing support functions of `inner` against
/// the rows of `outer`.
pub fn poly_contains_poly(inner: &HRep, outer: &HRep) -> Result<bool, PolytopeError> {
    Ok(containment_slack(inner, outer)? >= -FEAS_TOL)
}

/// Smallest slack `bound − support` over the rows of `outer` (negative means
/// `inner` leaks out of `outer`).
pub fn containment_slack(inner: &HRep, outer: &HRep) -> Result<f64, PolytopeError> {
    if inner.dim() != outer.dim() {
        return Err(PolytopeError::DimensionMismatch { expected: outer.dim(), found: inner.dim() });
    }
    let mut worst = f64::INFINITY;
    for row in outer.rows() {
        let up = || support(inner, &row.normal);
        let down = || support(inner, &row.normal.iter().map(|v| -v).collect::<Vec<_>>()).map(|s| -s);
        let slack = match row.sense {
            Sense::Le => row.bound - up()?,
            Sense::Ge => down()? - row.bound,
            Sense::Eq => (row.bound - up()?).min(down()? - row.bound),
        };
        worst = worst.min(slack);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize) -> HRep {
        HRep::cube(&vec![0.0; dim], &vec![1.0; dim])
    }

    #[test]
    fn box_corner_is_optimal() {
        let s = lp_solve(&unit_box(2), &[1.0, 1.0], OptSense::Max).unwrap();
        assert!(s.is_optimal());
        assert_eq!(s.value, 2.0);
        assert_eq!(s.point, vec![1.0, 1.0]);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let h = HRep::from_rows(1, vec![Row::ge(vec![1.0], 1.0), Row::le(vec![1.0], 0.0)]).unwrap();
        let s = lp_solve(&h, &[1.0], OptSense::Min).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert_eq!(support(&h, &[1.0]), Err(PolytopeError::Infeasible));
    }

    #[test]
    fn free_variables_and_unboundedness() {
        // x − y ≤ 1, x + y ≤ 3 : max x unbounded? no, x ≤ 2. max y unbounded below? min y unbounded.
        let h = HRep::from_rows(2, vec![Row::le(vec![1.0, -1.0], 1.0), Row::le(vec![1.0, 1.0], 3.0)]).unwrap();
        let s = lp_solve(&h, &[1.0, 0.0], OptSense::Max).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(lp_solve(&h, &[0.0, 1.0], OptSense::Min).unwrap().status, LpStatus::Unbounded);
        assert_eq!(support(&h, &[0.0, -1.0]), Err(PolytopeError::Unbounded));
        assert!(!is_bounded(&h).unwrap());
        assert!(is_bounded(&unit_box(3)).unwrap());
    }

    #[test]
    fn zero_direction_support() {
        assert_eq!(support(&unit_box(3), &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn box_vertices_and_segment() {
        assert_eq!(vertices(&unit_box(2)).unwrap().len(), 4);
        let mut h = unit_box(2);
        h.push(Row::eq(vec![1.0, 1.0], 1.0)).unwrap();
        let v = vertices(&h).unwrap();
        assert_eq!(v, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(vertices(&unit_box(9)), Err(PolytopeError::DimensionTooLarge(9))));
    }

    #[test]
    fn containment_and_dimension_checks() {
        let small = HRep::cube(&[0.25, 0.25], &[0.5, 0.5]);
        let big = unit_box(2);
        assert!(poly_contains_poly(&small, &big).unwrap());
        assert!(!poly_contains_poly(&big, &small).unwrap());
        assert!(poly_contains_poly(&big, &big).unwrap());
        assert!(matches!(
            poly_contains_poly(&unit_box(3), &big),
            Err(PolytopeError::DimensionMismatch { .. })
        ));
        assert!(HRep::from_rows(1, vec![Row::le(vec![0.0], -1.0)]).is_err());
        assert!(HRep::from_rows(2, vec![Row::le(vec![1.0], 1.0)]).is_err());
    }

    #[test]
    fn equality_rows_are_native() {
        let mut h = unit_box(3);
        h.push(Row::eq(vec![0.7, 1.0, 0.0], 1.3)).unwrap();
        let s = lp_solve(&h, &[1.0, 1.0, 0.0], OptSense::Min).unwrap();
        assert!((s.value - 10.0 / 7.0).abs() < 1e-9);
        assert!(contains_point(&h, &s.point, FEAS_TOL));
    }

    #[test]
    fn hrep_json_dump() {
        let json = unit_box(1).to_json();
        assert!(json.contains("\">=\""));
        let back: HRep = serde_json::from_str(&json).unwrap();
        assert_eq!(back, unit_box(1));
    }
}
