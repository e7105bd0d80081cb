//! Greedy linear maximization over g-polymatroids.

use super::setfn::{reflect, SetFunctionPair, Subset};

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyVertex {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Chain order (descending `|c|`, ascending index on ties) and the set of
/// coordinates with negative cost.
pub fn greedy_order(c: &[f64]) -> (Vec<usize>, Subset) {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].abs().total_cmp(&c[i].abs()).then(i.cmp(&j)));
    let flip = Subset::from_indices((0..c.len()).filter(|&i| c[i] < 0.0));
    (order, flip)
}

/// The b-chain vertex of the reflected pair for a fixed order.
pub fn greedy_vertex<F: SetFunctionPair + ?Sized>(f: &F, order: &[usize], flip: Subset) -> Vec<f64> {
    let g = reflect(f, flip);
    let mut point = vec![0.0; f.horizon()];
    let mut chain = Subset::EMPTY;
    let mut prev = 0.0;
    for &i in order {
        chain = chain.with(i);
        let cur = g.eval_b(chain);
        let step = cur - prev;
        point[i] = if flip.contains(i) { -step } else { step };
        prev = cur;
    }
    point
}

/// `max c·u` over the g-polymatroid generated by `f`.
///
/// Nonnegative costs use the b-chain of the descending order directly;
/// negative coordinates are reflected first and the vertex mapped back.
pub fn greedy_linmax<F: SetFunctionPair + ?Sized>(f: &F, c: &[f64]) -> GreedyVertex {
    assert_eq!(c.len(), f.horizon());
    let (order, flip) = greedy_order(c);
    let point = greedy_vertex(f, &order, flip);
    let value = c.iter().zip(&point).map(|(a, b)| a * b).sum();
    GreedyVertex { point, value }
}

/// `min c·u`, via `−max(−c)·u`.
pub fn greedy_linmin<F: SetFunctionPair + ?Sized>(f: &F, c: &[f64]) -> GreedyVertex {
    let neg: Vec<f64> = c.iter().map(|v| -v).collect();
    let mut v = greedy_linmax(f, &neg);
    v.value = -v.value;
    v
}
