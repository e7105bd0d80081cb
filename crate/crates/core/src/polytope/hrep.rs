//! Halfspace representations.

use serde::{Deserialize, Serialize};

use super::PolytopeError;

/// Relation between `normal · x` and the row bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub normal: Vec<f64>,
    pub sense: Sense,
    pub bound: f64,
}

impl Row {
    pub fn new(normal: Vec<f64>, sense: Sense, bound: f64) -> Self {
        Self { normal, sense, bound }
    }

    pub fn le(normal: Vec<f64>, bound: f64) -> Self {
        Self::new(normal, Sense::Le, bound)
    }

    pub fn ge(normal: Vec<f64>, bound: f64) -> Self {
        Self::new(normal, Sense::Ge, bound)
    }

    pub fn eq(normal: Vec<f64>, bound: f64) -> Self {
        Self::new(normal, Sense::Eq, bound)
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x)
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.bound).max(0.0),
            Sense::Ge => (self.bound - lhs).max(0.0),
            Sense::Eq => (lhs - self.bound).abs(),
        }
    }
}

/// A polyhedron `{x : normal_k · x (sense_k) bound_k}` in `dim` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRep {
    dim: usize,
    rows: Vec<Row>,
}

impl HRep {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn from_rows(dim: usize, rows: Vec<Row>) -> Result<Self, PolytopeError> {
        let mut h = Self::new(dim);
        for row in rows {
            h.push(row)?;
        }
        Ok(h)
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`, lower rows first.
    pub fn cube(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        let mut rows = Vec::with_capacity(2 * dim);
        for (j, &l) in lo.iter().enumerate() {
            rows.push(Row::ge(unit(dim, j), l));
        }
        for (j, &h) in hi.iter().enumerate() {
            rows.push(Row::le(unit(dim, j), h));
        }
        Self { dim, rows }
    }

    pub fn push(&mut self, row: Row) -> Result<(), PolytopeError> {
        if row.normal.len() != self.dim {
            return Err(PolytopeError::DimensionMismatch {
                expected: self.dim,
                found: row.normal.len(),
            });
        }
        if row.normal.iter().all(|&v| v == 0.0) {
            let ok = match row.sense {
                Sense::Le => 0.0 <= row.bound,
                Sense::Ge => 0.0 >= row.bound,
                Sense::Eq => row.bound == 0.0,
            };
            if !ok {
                return Err(PolytopeError::ContradictoryRow);
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("HRep serializes")
    }
}

pub(crate) fn unit(dim: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[j] = 1.0;
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
