//! Homothet baseline: each flexibility set is inner-approximated by a scaled
//! and translated copy `s·P + t` of a common prototype `P`, and homothets are
//! aggregated by summing scales and translations.
//!
//! The prototype is a lossless unit battery: `u ∈ [0,1]^T` with prefix sums in
//! `[0, T]`. The fit maximizes `s` only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gpoly::ChainPolytope;
use crate::model::TransformedDevice;
use crate::polytope::{lp_solve, HRep, LpStatus, OptSense, PolytopeError, Row, Sense, FEAS_TOL};

/// Label used for this baseline in every output.
pub const METHOD_LABEL: &str = "homothet (reconstructed)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomothetError {
    #[error("no homothets to aggregate")]
    Empty,
    #[error("prototype mismatch: expected horizon {expected}, found {found}")]
    PrototypeMismatch { expected: usize, found: usize },
    #[error("flexibility set is empty")]
    EmptyFlexibility,
    #[error("fitted homothet is not contained in the flexibility set (slack {0:e})")]
    NotContained(f64),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// The unit lossless battery over `T` periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prototype {
    pub horizon: usize,
}

impl Prototype {
    pub fn new(horizon: usize) -> Self {
        Self { horizon }
    }

    pub fn chain(&self) -> ChainPolytope {
        let n = self.horizon;
        ChainPolytope::new(0.0, 1.0, vec![0.0; n], vec![n as f64; n])
    }

    /// Box rows, then lower and upper prefix rows.
    pub fn hrep(&self) -> HRep {
        let n = self.horizon;
        let mut rows = Vec::with_capacity(4 * n);
        for s in 0..n {
            rows.push(Row::ge(crate::polytope::unit(n, s), 0.0));
        }
        for s in 0..n {
            rows.push(Row::le(crate::polytope::unit(n, s), 1.0));
        }
        for t in 1..=n {
            let prefix: Vec<f64> = (0..n).map(|s| if s < t { 1.0 } else { 0.0 }).collect();
            rows.push(Row::ge(prefix.clone(), 0.0));
            rows.push(Row::le(prefix, n as f64));
        }
        HRep::from_rows(n, rows).expect("well-formed rows")
    }

    pub fn support(&self, c: &[f64]) -> f64 {
        self.chain().support(c).expect("prototype is nonempty")
    }

    pub fn maximize(&self, c: &[f64]) -> Vec<f64> {
        self.chain().maximize(c).expect("prototype is nonempty").0
    }
}

/// `s·P + t`. `device_id` is `None` for aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homothet {
    pub device_id: Option<usize>,
    #[serde(rename = "s")]
    pub scale: f64,
    #[serde(rename = "t")]
    pub translation: Vec<f64>,
}

impl Homothet {
    pub fn horizon(&self) -> usize {
        self.translation.len()
    }

    pub fn prototype(&self) -> Prototype {
        Prototype::new(self.horizon())
    }

    /// HRep of `s·P + t`: each prototype row `α·u ⋚ f` becomes `α·x ⋚ s·f + α·t`.
    pub fn hrep(&self) -> HRep {
        let rows = self
            .prototype()
            .hrep()
            .rows()
            .iter()
            .map(|r| {
                let shift: f64 = r.normal.iter().zip(&self.translation).map(|(a, b)| a * b).sum();
                Row::new(r.normal.clone(), r.sense, self.scale * r.bound + shift)
            })
            .collect();
        HRep::from_rows(self.horizon(), rows).expect("well-formed rows")
    }

    pub fn support(&self, c: &[f64]) -> f64 {
        let shift: f64 = c.iter().zip(&self.translation).map(|(a, b)| a * b).sum();
        self.scale * self.prototype().support(c) + shift
    }

    /// A maximizer of `c·x` over the homothet.
    pub fn maximize(&self, c: &[f64]) -> Vec<f64> {
        self.map_point(&self.prototype().maximize(c))
    }

    /// Image of a prototype point.
    pub fn map_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.translation).map(|(v, t)| self.scale * v + t).collect()
    }

    /// `min c·x` over the homothet.
    pub fn minimum(&self, c: &[f64]) -> f64 {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        -self.support(&neg)
    }
}

/// Containment rows in the variables `(s, t)` for the scale-maximization LP.
fn fit_rows(dev: &TransformedDevice, proto: &Prototype) -> Vec<Row> {
    let n = dev.horizon;
    let mut rows = Vec::new();
    for r in dev.flexibility_halfspaces().rows() {
        let neg: Vec<f64> = r.normal.iter().map(|v| -v).collect();
        let (hi, lo) = (proto.support(&r.normal), -proto.support(&neg));
        let mut push = |coef: f64, sense: Sense| {
            let mut normal = Vec::with_capacity(n + 1);
            normal.push(coef);
            normal.extend_from_slice(&r.normal);
            rows.push(Row::new(normal, sense, r.bound));
        };
        match r.sense {
            Sense::Le => push(hi, Sense::Le),
            Sense::Ge => push(lo, Sense::Ge),
            Sense::Eq => {
                push(hi, Sense::Le);
                push(lo, Sense::Ge);
            }
        }
    }
    let mut s_nonneg = vec![0.0; n + 1];
    s_nonneg[0] = 1.0;
    rows.push(Row::ge(s_nonneg, 0.0));
    rows
}

/// Largest homothet of the prototype inside the device's flexibility set.
pub fn fit_homothet(dev: &TransformedDevice) -> Result<Homothet, HomothetError> {
    let proto = Prototype::new(dev.horizon);
    let lp = HRep::from_rows(dev.horizon + 1, fit_rows(dev, &proto))?;
    let mut objective = vec![0.0; dev.horizon + 1];
    objective[0] = 1.0;
    let sol = lp_solve(&lp, &objective, OptSense::Max)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(HomothetError::EmptyFlexibility),
        LpStatus::Unbounded => return Err(PolytopeError::Unbounded.into()),
    }
    let h = Homothet { device_id: None, scale: sol.point[0].max(0.0), translation: sol.point[1..].to_vec() };
    let slack = containment_slack(&h, &dev.flexibility_halfspaces());
    if slack < -FEAS_TOL * (1.0 + h.scale) {
        return Err(HomothetError::NotContained(slack));
    }
    Ok(h)
}

/// Smallest `bound − support` over the rows of `outer`, with supports of the
/// homothet taken in closed form.
pub fn containment_slack(h: &Homothet, outer: &HRep) -> f64 {
    let mut worst = f64::INFINITY;
    for r in outer.rows() {
        let up = || r.bound - h.support(&r.normal);
        let down = || h.minimum(&r.normal) - r.bound;
        let slack = match r.sense {
            Sense::Le => up(),
            Sense::Ge => down(),
            Sense::Eq => up().min(down()),
        };
        worst = worst.min(slack);
    }
    worst
}

/// Whether some translation places `scale·P + t` inside the flexibility set.
pub fn feasible_at_scale(dev: &TransformedDevice, scale: f64) -> Result<bool, HomothetError> {
    let proto = Prototype::new(dev.horizon);
    let mut lp = HRep::from_rows(dev.horizon + 1, fit_rows(dev, &proto))?;
    let mut pin = vec![0.0; dev.horizon + 1];
    pin[0] = 1.0;
    lp.push(Row::eq(pin, scale))?;
    Ok(crate::polytope::is_feasible(&lp)?)
}

/// Fits every device; ids follow list order.
pub fn fit_all(devices: &[TransformedDevice]) -> Result<Vec<Homothet>, HomothetError> {
    devices
        .par_iter()
        .enumerate()
        .map(|(i, d)| fit_homothet(d).map(|h| Homothet { device_id: Some(i), ..h }))
        .collect()
}

/// `(Σ s_i, Σ t_i)`, summed in list order.
pub fn aggregate_homothets(fits: &[Homothet]) -> Result<Homothet, HomothetError> {
    let first = fits.first().ok_or(HomothetError::Empty)?;
    let n = first.horizon();
    let mut scale = 0.0;
    let mut translation = vec![0.0; n];
    for h in fits {
        if h.horizon() != n {
            return Err(HomothetError::PrototypeMismatch { expected: n, found: h.horizon() });
        }
        scale += h.scale;
        for (acc, v) in translation.iter_mut().zip(&h.translation) {
            *acc += v;
        }
    }
    Ok(Homothet { device_id: None, scale, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::support;

    fn worked() -> TransformedDevice {
        TransformedDevice::from_bounds(0.7, 0.0, 1.0, vec![0.3, 0.3], vec![1.3, 1.3])
    }

    #[test]
    fn prototype_supports() {
        let p = Prototype::new(2);
        assert_eq!(p.support(&[1.0, 1.0]), 2.0);
        assert_eq!(p.support(&[1.0, -1.0]), 1.0);
        assert!((support(&p.hrep(), &[1.0, -1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn worked_instance_scale() {
        let h = fit_homothet(&worked()).unwrap();
        assert!((h.scale - 10.0 / 17.0).abs() < 1e-9, "{}", h.scale);
        assert!(!feasible_at_scale(&worked(), h.scale + 1e-4).unwrap());
        assert!(feasible_at_scale(&worked(), h.scale - 1e-4).unwrap());
        let f = worked().flexibility_halfspaces();
        assert!(crate::polytope::poly_contains_poly(&h.hrep(), &f).unwrap());
        assert!((containment_slack(&h, &f) - crate::polytope::containment_slack(&h.hrep(), &f).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn identity_fit() {
        // a lossless device whose bounds are exactly the prototype
        let dev = TransformedDevice::from_bounds(1.0, 0.0, 1.0, vec![0.0; 3], vec![3.0; 3]);
        let h = fit_homothet(&dev).unwrap();
        assert!((h.scale - 1.0).abs() < 1e-9);
        assert!(h.translation.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn aggregation_sums() {
        let h = fit_homothet(&worked()).unwrap();
        let agg = aggregate_homothets(&[h.clone(), h.clone()]).unwrap();
        assert!((agg.scale - 2.0 * h.scale).abs() < 1e-15);
        let c = [0.3, -0.8];
        assert!((agg.support(&c) - 2.0 * h.support(&c)).abs() < 1e-12);
        let other = Homothet { device_id: None, scale: 1.0, translation: vec![0.0; 3] };
        assert!(matches!(aggregate_homothets(&[h, other]), Err(HomothetError::PrototypeMismatch { .. })));
        assert!(matches!(aggregate_homothets(&[]), Err(HomothetError::Empty)));
    }

    #[test]
    fn json_shape() {
        let h = Homothet { device_id: Some(3), scale: 0.5, translation: vec![0.1, 0.2] };
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"device_id":3,"s":0.5,"t":[0.1,0.2]}"#);
    }
}
