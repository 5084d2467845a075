//! Fixtures shared by the benchmarks.

use freefock::algebra::{centered_projection, BooleanModel};
use freefock::{MatrixModel, NCPoly, StateOracle};

/// A Bernoulli base with its centered projection.
pub fn bernoulli(alpha: f64) -> (StateOracle, NCPoly) {
    let o = MatrixModel::bernoulli(alpha).expect("alpha in (0, 1)").into();
    (o, centered_projection(alpha))
}

/// The two-projection Boolean model with both centered projections.
pub fn boolean_pair() -> (StateOracle, Vec<NCPoly>) {
    let bm = BooleanModel::new(&[0.3, 0.5]).expect("valid alphas");
    (bm.oracle(), vec![bm.centered(1), bm.centered(2)])
}

/// Alternating word `f_0 f_1 f_0 …` of length `n` over `gens`.
pub fn alternating(gens: &[NCPoly], n: usize) -> Vec<NCPoly> {
    (0..n).map(|i| gens[i % gens.len()].clone()).collect()
}
