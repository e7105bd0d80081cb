//! Exact linear optimization over prefix-sum polytopes
//! `{u : l ≤ u(t) ≤ h, y_lb(t) ≤ Σ_{s≤t} u(s) ≤ y_ub(t)}`.
//!
//! The problem is a shortest-path-like recursion in the prefix sum `Y(t)`: the
//! value-to-go is concave and piecewise linear in `Y`, so it is carried as a
//! breakpoint list and pushed backwards one period at a time. A forward pass
//! then recovers a maximizer. Cost is `O(T²)` per direction.

#[derive(Clone, Debug, PartialEq)]
pub struct ChainPolytope {
    pub u_min: f64,
    pub u_max: f64,
    pub y_lb: Vec<f64>,
    pub y_ub: Vec<f64>,
}

/// Concave piecewise-linear function on `[xs[0], xs[last]]`.
#[derive(Clone, Debug)]
struct Pwl {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl Pwl {
    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if n == 1 || x <= self.xs[0] {
            return self.vs[0];
        }
        if x >= self.xs[n - 1] {
            return self.vs[n - 1];
        }
        let k = self.xs.partition_point(|&p| p <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (v0, v1) = (self.vs[k - 1], self.vs[k]);
        if x1 - x0 <= 0.0 {
            return v0.max(v1);
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    fn argmax(&self) -> f64 {
        let mut best = 0;
        for k in 1..self.vs.len() {
            if self.vs[k] > self.vs[best] {
                best = k;
            }
        }
        self.xs[best]
    }
}

impl ChainPolytope {
    pub fn new(u_min: f64, u_max: f64, y_lb: Vec<f64>, y_ub: Vec<f64>) -> Self {
        assert_eq!(y_lb.len(), y_ub.len());
        Self { u_min, u_max, y_lb, y_ub }
    }

    pub fn horizon(&self) -> usize {
        self.y_lb.len()
    }

    /// Intervals of prefix sums `Y(t)` that lie on some feasible trajectory,
    /// or `None` when the polytope is empty.
    pub fn prefix_intervals(&self) -> Option<Vec<(f64, f64)>> {
        let n = self.horizon();
        let (l, h) = (self.u_min, self.u_max);
        let mut fwd = Vec::with_capacity(n);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for t in 0..n {
            lo = (lo + l).max(self.y_lb[t]);
            hi = (hi + h).min(self.y_ub[t]);
            fwd.push((lo, hi));
        }
        let mut out = vec![(0.0, 0.0); n];
        let (mut blo, mut bhi) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in (0..n).rev() {
            if t + 1 < n {
                blo -= h;
                bhi -= l;
            }
            blo = blo.max(self.y_lb[t]);
            bhi = bhi.min(self.y_ub[t]);
            let k_lo = blo.max(fwd[t].0);
            let k_hi = bhi.min(fwd[t].1);
            let tol = 1e-12 * (1.0 + k_lo.abs().max(k_hi.abs()));
            if k_lo > k_hi + tol {
                return None;
            }
            out[t] = if k_lo > k_hi { ((k_lo + k_hi) / 2.0, (k_lo + k_hi) / 2.0) } else { (k_lo, k_hi) };
        }
        // the empty prefix must reach period one
        let (k1_lo, k1_hi) = out[0];
        if n > 0 && (k1_lo - h > 1e-12 * (1.0 + k1_lo.abs()) || l - k1_hi > 1e-12 * (1.0 + k1_hi.abs())) {
            return None;
        }
        Some(out)
    }

    /// A maximizer of `c · u` and its value.
    pub fn maximize(&self, c: &[f64]) -> Option<(Vec<f64>, f64)> {
        let n = self.horizon();
        assert_eq!(c.len(), n);
        let k = self.prefix_intervals()?;
        let (l, h) = (self.u_min, self.u_max);
        let mut peak = vec![0.0; n];

        let (lo, hi) = k[n - 1];
        let mut v = if hi > lo { Pwl { xs: vec![lo, hi], vs: vec![0.0, 0.0] } } else { Pwl { xs: vec![lo], vs: vec![0.0] } };
        for t in (0..n).rev() {
            for (x, val) in v.xs.iter().zip(v.vs.iter_mut()) {
                *val += c[t] * x;
            }
            let w = v;
            let z = w.argmax();
            peak[t] = z;
            let (plo, phi) = if t == 0 { (0.0, 0.0) } else { k[t - 1] };
            let mut cand = vec![plo, phi, z - h, z - l];
            for &x in &w.xs {
                if x <= z {
                    cand.push(x - h);
                }
                if x >= z {
                    cand.push(x - l);
                }
            }
            cand.retain(|&y| y >= plo && y <= phi);
            cand.sort_by(f64::total_cmp);
            cand.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
            let (klo, khi) = k[t];
            let vs = cand
                .iter()
                .map(|&y| {
                    let wlo = (y + l).max(klo);
                    let whi = (y + h).min(khi);
                    let zz = if wlo <= whi { z.clamp(wlo, whi) } else { wlo.min(whi) };
                    w.eval(zz) - c[t] * y
                })
                .collect();
            v = Pwl { xs: cand, vs };
        }

        let mut u = vec![0.0; n];
        let mut y = 0.0;
        for t in 0..n {
            let (klo, khi) = k[t];
            let wlo = (y + l).max(klo);
            let whi = (y + h).min(khi);
            let z = if wlo <= whi { peak[t].clamp(wlo, whi) } else { wlo.min(whi) };
            u[t] = z - y;
            y = z;
        }
        let value = c.iter().zip(&u).map(|(a, b)| a * b).sum();
        Some((u, value))
    }

    pub fn support(&self, c: &[f64]) -> Option<f64> {
        self.maximize(c).map(|(_, v)| v)
    }
}
