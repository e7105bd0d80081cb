//! Set functions generating g-polymatroids: single-device evaluators, the
//! aggregate (sum) evaluator and coordinate reflections.

use std::collections::HashMap;
use std::fmt;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::chain::ChainPolytope;
use super::{GPolyError, InnerApprox};
use crate::polytope::support;

/// Largest horizon for which evaluations are memoized.
pub const MEMO_MAX_HORIZON: usize = 24;
/// Largest horizon representable by [`Subset`].
pub const MAX_HORIZON: usize = 64;

/// A subset of the periods `{1..T}`, stored as a bitmask over 0-based indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(horizon: usize) -> Self {
        assert!(horizon <= MAX_HORIZON);
        if horizon == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << horizon) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// From 0-based period indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(idx: I) -> Self {
        let mut s = Subset(0);
        for i in idx {
            s = s.with(i);
        }
        s
    }

    /// From 1-based period labels.
    pub fn from_periods(periods: &[usize]) -> Self {
        Self::from_indices(periods.iter().map(|&t| {
            assert!(t >= 1, "periods are 1-based");
            t - 1
        }))
    }

    pub fn with(self, i: usize) -> Self {
        assert!(i < MAX_HORIZON);
        Subset(self.0 | (1u64 << i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_HORIZON && self.0 & (1u64 << i) != 0
    }

    pub fn union(self, o: Subset) -> Self {
        Subset(self.0 | o.0)
    }

    pub fn intersection(self, o: Subset) -> Self {
        Subset(self.0 & o.0)
    }

    pub fn difference(self, o: Subset) -> Self {
        Subset(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..MAX_HORIZON).filter(move |&i| self.contains(i))
    }

    pub fn indicator(self, horizon: usize) -> Vec<f64> {
        (0..horizon).map(|i| if self.contains(i) { 1.0 } else { 0.0 }).collect()
    }

    /// All subsets of `{1..T}` in bitmask order.
    pub fn all(horizon: usize) -> impl Iterator<Item = Subset> {
        assert!(horizon < 32, "exhaustive enumeration only for small horizons");
        (0..(1u64 << horizon)).map(Subset)
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices().map(|i| i + 1)).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SingleDevice,
    Aggregate,
}

/// A paramodular pair `(p, b)` on the subsets of `{1..T}`.
pub trait SetFunctionPair: Send + Sync {
    fn horizon(&self) -> usize;
    fn eval_b(&self, set: Subset) -> f64;
    fn eval_p(&self, set: Subset) -> f64;
    fn provenance(&self) -> Provenance;
}

#[derive(Default)]
struct Memo {
    b: RwLock<HashMap<u64, f64>>,
    p: RwLock<HashMap<u64, f64>>,
}

impl Memo {
    fn get_or(&self, upper: bool, set: Subset, enabled: bool, f: impl FnOnce() -> f64) -> f64 {
        if !enabled {
            return f();
        }
        let table = if upper { &self.b } else { &self.p };
        if let Some(&v) = table.read().get(&set.bits()) {
            return v;
        }
        let v = f();
        *table.write().entry(set.bits()).or_insert(v)
    }

    fn len(&self) -> usize {
        self.b.read().len() + self.p.read().len()
    }
}

/// How single-device support values are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportMethod {
    /// Prefix-sum recursion (exact, `O(T²)`).
    Chain,
    /// Dense LP over the base polytope's HRep.
    Lp,
}

/// `b(A) = max{u(A) : u ∈ B}`, `p(A) = min{u(A) : u ∈ B}` for one device.
pub struct DeviceFunctions {
    approx: InnerApprox,
    chain: ChainPolytope,
    method: SupportMethod,
    memo: Memo,
    memoize: bool,
}

impl DeviceFunctions {
    pub fn new(approx: &InnerApprox) -> Self {
        Self::with_method(approx, SupportMethod::Chain)
    }

    pub fn with_method(approx: &InnerApprox, method: SupportMethod) -> Self {
        Self {
            chain: approx.chain(),
            approx: approx.clone(),
            method,
            memo: Memo::default(),
            memoize: approx.horizon() <= MEMO_MAX_HORIZON,
        }
    }

    pub fn approx(&self) -> &InnerApprox {
        &self.approx
    }

    fn support_along(&self, dir: &[f64]) -> f64 {
        match self.method {
            SupportMethod::Chain => self.chain.support(dir).expect("base polytope is nonempty"),
            SupportMethod::Lp => support(&self.approx.base_hrep(), dir).expect("base polytope is nonempty"),
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }
}

impl SetFunctionPair for DeviceFunctions {
    fn horizon(&self) -> usize {
        self.approx.horizon()
    }

    fn eval_b(&self, set: Subset) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        self.memo.get_or(true, set, self.memoize, || self.support_along(&set.indicator(self.horizon())))
    }

    fn eval_p(&self, set: Subset) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        self.memo.get_or(false, set, self.memoize, || {
            let neg: Vec<f64> = set.indicator(self.horizon()).iter().map(|v| -v).collect();
            -self.support_along(&neg)
        })
    }

    fn provenance(&self) -> Provenance {
        Provenance::SingleDevice
    }
}

/// The Minkowski sum of member base polytopes, represented by the summed
/// generating functions `p_N = Σ p_i`, `b_N = Σ b_i`. Members are summed in
/// ascending index order.
pub struct AggregateGPoly {
    members: Vec<DeviceFunctions>,
    horizon: usize,
    memo: Memo,
    memoize: bool,
}

impl AggregateGPoly {
    pub fn members(&self) -> impl Iterator<Item = &InnerApprox> {
        self.members.iter().map(|m| m.approx())
    }

    pub fn member_functions(&self) -> &[DeviceFunctions] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }
}

/// Aggregates by function addition; no geometry is computed.
pub fn aggregate(members: &[InnerApprox]) -> Result<AggregateGPoly, GPolyError> {
    let horizon = members.first().map(|m| m.horizon()).ok_or(GPolyError::EmptyAggregate)?;
    if let Some(bad) = members.iter().find(|m| m.horizon() != horizon) {
        return Err(GPolyError::HorizonMismatch { expected: horizon, found: bad.horizon() });
    }
    let members = members
        .iter()
        .map(|m| {
            let mut f = DeviceFunctions::new(m);
            // member tables would duplicate the aggregate table
            f.memoize = false;
            f
        })
        .collect();
    Ok(AggregateGPoly { members, horizon, memo: Memo::default(), memoize: horizon <= MEMO_MAX_HORIZON })
}

impl SetFunctionPair for AggregateGPoly {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn eval_b(&self, set: Subset) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        self.memo.get_or(true, set, self.memoize, || self.members.iter().map(|m| m.eval_b(set)).sum())
    }

    fn eval_p(&self, set: Subset) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        self.memo.get_or(false, set, self.memoize, || self.members.iter().map(|m| m.eval_p(set)).sum())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Aggregate
    }
}

/// `(p, b)` of the image under `u(t) ↦ −u(t)` for `t ∈ flip`:
/// `b'(A) = b(A∖F) − p(A∩F)`, `p'(A) = p(A∖F) − b(A∩F)`.
pub struct Reflected<'a, F: SetFunctionPair + ?Sized> {
    inner: &'a F,
    flip: Subset,
}

pub fn reflect<F: SetFunctionPair + ?Sized>(f: &F, flip: Subset) -> Reflected<'_, F> {
    Reflected { inner: f, flip: flip.intersection(Subset::full(f.horizon())) }
}

impl<'a, F: SetFunctionPair + ?Sized> Reflected<'a, F> {
    /// Reflects the already reflected set again. Flips compose by symmetric
    /// difference, so reflecting twice in `F` restores the original pair. The
    /// pair formulas cannot be stacked instead: a reflected g-polymatroid is in
    /// general not a g-polymatroid, and its `(p′, b′)` do not determine it.
    pub fn reflect(&self, flip: Subset) -> Reflected<'a, F> {
        let flip = flip.intersection(Subset::full(self.inner.horizon()));
        Reflected { inner: self.inner, flip: self.flip.union(flip).difference(self.flip.intersection(flip)) }
    }

    pub fn flip(&self) -> Subset {
        self.flip
    }
}

impl<F: SetFunctionPair + ?Sized> SetFunctionPair for Reflected<'_, F> {
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn eval_b(&self, set: Subset) -> f64 {
        self.inner.eval_b(set.difference(self.flip)) - self.inner.eval_p(set.intersection(self.flip))
    }

    fn eval_p(&self, set: Subset) -> f64 {
        self.inner.eval_p(set.difference(self.flip)) - self.inner.eval_b(set.intersection(self.flip))
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// Exhaustive check of the g-polymatroid axioms for small horizons; returns
/// the largest violation found.
pub fn paramodularity_violation<F: SetFunctionPair + ?Sized>(f: &F) -> f64 {
    let n = f.horizon();
    let subsets: Vec<Subset> = Subset::all(n).collect();
    let b: Vec<f64> = subsets.iter().map(|&s| f.eval_b(s)).collect();
    let p: Vec<f64> = subsets.iter().map(|&s| f.eval_p(s)).collect();
    let at = |v: &Vec<f64>, s: Subset| v[s.bits() as usize];
    let mut worst = b[0].abs().max(p[0].abs());
    for &x in &subsets {
        worst = worst.max(at(&p, x) - at(&b, x));
        for &y in &subsets {
            let (u, i) = (x.union(y), x.intersection(y));
            // submodular b, supermodular p
            worst = worst.max(at(&b, u) + at(&b, i) - at(&b, x) - at(&b, y));
            worst = worst.max(at(&p, x) + at(&p, y) - at(&p, u) - at(&p, i));
            // cross inequality
            let lhs = at(&b, x) - at(&p, y);
            let rhs = at(&b, x.difference(y)) - at(&p, y.difference(x));
            worst = worst.max(rhs - lhs);
        }
    }
    worst
}
