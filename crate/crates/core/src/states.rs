//! The states `Φ_t` and `Ψ_t` on tensors of centered elements, by partition sums.
//!
//! `Φ_t[f₁ ⊗ … ⊗ fₙ] = Σ_{π ∈ NC_ns(n)} (1+t)^{|Outer(π)|} t^{|Inner(π)|} Π_V φ[W(V)]` and
//! `Ψ_t[f₁ ⊗ … ⊗ fₙ] = Σ_{π ∈ NC_ns(n)} t^{|π|} Π_V φ[W(V)]`.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{MatrixModel, NCPoly, StateOracle, C64};
use crate::cumulants::{Handle, MomentFunctional};
use crate::error::{Error, Result};
use crate::partitions::{check_size, enumerate, PartitionClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoState {
    Phi,
    Psi,
}

fn vector_state(omega: &DVector<C64>, a: &DMatrix<C64>) -> C64 {
    omega.dotc(&(a * omega))
}

/// `φ[W(V)]` from the matrices of the block's elements, in block order.
pub fn block_value_of_matrices(m: &MatrixModel, mats: &[&DMatrix<C64>]) -> Result<C64> {
    let Some((first, rest)) = mats.split_first() else {
        return Err(Error::Argument("block word of an empty block".into()));
    };
    let omega = m.omega();
    let Some((last, middle)) = rest.split_last() else {
        return Ok(vector_state(omega, first));
    };
    let mut inner = (*last).clone();
    for a in middle.iter().rev() {
        let mut prod = *a * &inner;
        let shift = vector_state(omega, &prod);
        for i in 0..m.dim() {
            prod[(i, i)] -= shift;
        }
        inner = prod;
    }
    Ok(vector_state(omega, &(*first * inner)))
}

/// `φ[W(V)]` for the block `V` of `fs`, evaluated by matrices when the oracle is a
/// matrix model and through polynomials otherwise.
pub fn block_value(o: &StateOracle, fs: &[NCPoly], block: &[usize]) -> Result<C64> {
    if let Some(&bad) = block.iter().find(|&&i| i >= fs.len()) {
        return Err(Error::Argument(format!("block index {bad} out of range")));
    }
    let Some(m) = o.as_matrix() else {
        return o.phi(&o.block_word(fs, block)?);
    };
    let mats = block.iter().map(|&i| m.poly_matrix(&fs[i])).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<C64>> = mats.iter().collect();
    block_value_of_matrices(m, &refs)
}

/// The partition sum of `Φ_t` or `Ψ_t` on `n` factors, given block values.
pub fn two_state_sum(
    n: usize,
    t: f64,
    which: TwoState,
    mut block: impl FnMut(&[usize]) -> Result<C64>,
) -> Result<C64> {
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if n == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    check_size("tensor length", n)?;
    let mut memo: HashMap<Vec<usize>, C64> = HashMap::new();
    let mut total = C64::new(0.0, 0.0);
    for p in enumerate(n, PartitionClass::NoSingletonNC)? {
        let weight = match which {
            TwoState::Phi => {
                let (inner, outer) = p.inner_outer_counts()?;
                (1.0 + t).powi(outer as i32) * t.powi(inner as i32)
            }
            TwoState::Psi => t.powi(p.len() as i32),
        };
        if weight == 0.0 {
            continue;
        }
        let mut term = C64::new(weight, 0.0);
        for b in p.blocks() {
            let v = match memo.get(b) {
                Some(v) => *v,
                None => {
                    let v = block(b)?;
                    memo.insert(b.clone(), v);
                    v
                }
            };
            term *= v;
        }
        total += term;
    }
    Ok(total)
}

/// Evaluates `Φ_t` or `Ψ_t` on `f₁ ⊗ … ⊗ fₙ`. No centering check is made here.
pub fn two_state_moment(o: &StateOracle, fs: &[NCPoly], t: f64, which: TwoState) -> Result<C64> {
    two_state_sum(fs.len(), t, which, |b| block_value(o, fs, b))
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be finite and nonnegative")));
    }
    Ok(())
}

/// `Φ_t[f₁ ⊗ … ⊗ fₙ]` for centered `fᵢ`.
pub fn phi_t(o: &StateOracle, fs: &[NCPoly], t: f64) -> Result<C64> {
    check_t(t)?;
    for (i, f) in fs.iter().enumerate() {
        o.require_centered(f, &format!("tensor factor {}", i + 1))?;
    }
    two_state_moment(o, fs, t, TwoState::Phi)
}

/// `Ψ_t[f₁ ⊗ … ⊗ fₙ]` for centered `fᵢ`.
pub fn psi_t(o: &StateOracle, fs: &[NCPoly], t: f64) -> Result<C64> {
    check_t(t)?;
    for (i, f) in fs.iter().enumerate() {
        o.require_centered(f, &format!("tensor factor {}", i + 1))?;
    }
    two_state_moment(o, fs, t, TwoState::Psi)
}

// Elements behind handles, as matrices when the oracle is a matrix model.
struct Elements<'a> {
    oracle: &'a StateOracle,
    polys: Vec<NCPoly>,
    mats: Option<Vec<DMatrix<C64>>>,
}

impl<'a> Elements<'a> {
    fn new(oracle: &'a StateOracle, elements: &[NCPoly]) -> Result<Self> {
        let mats = match oracle.as_matrix() {
            Some(m) => Some(elements.iter().map(|f| m.poly_matrix(f)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(Elements { oracle, polys: elements.to_vec(), mats })
    }

    fn check(&self, args: &[Handle]) -> Result<()> {
        match args.iter().find(|h| h.0 >= self.polys.len()) {
            Some(h) => Err(Error::Argument(format!("handle {h} has no element"))),
            None => Ok(()),
        }
    }

    fn product_moment(&self, args: &[Handle]) -> Result<C64> {
        self.check(args)?;
        match (&self.mats, self.oracle.as_matrix()) {
            (Some(mats), Some(m)) => {
                let mut v = m.omega().clone();
                for h in args.iter().rev() {
                    v = &mats[h.0] * v;
                }
                Ok(m.omega().dotc(&v))
            }
            _ => {
                let mut prod = NCPoly::one();
                for h in args {
                    prod = prod.mul(&self.polys[h.0]);
                }
                self.oracle.phi(&prod)
            }
        }
    }

    fn block_value(&self, args: &[Handle]) -> Result<C64> {
        self.check(args)?;
        match (&self.mats, self.oracle.as_matrix()) {
            (Some(mats), Some(m)) => {
                let refs: Vec<&DMatrix<C64>> = args.iter().map(|h| &mats[h.0]).collect();
                block_value_of_matrices(m, &refs)
            }
            _ => {
                let fs: Vec<NCPoly> = args.iter().map(|h| self.polys[h.0].clone()).collect();
                let all: Vec<usize> = (0..fs.len()).collect();
                self.oracle.phi(&self.oracle.block_word(&fs, &all)?)
            }
        }
    }
}

/// Handles evaluated by the base state `φ` on the product of the selected elements.
pub struct BaseMoments<'a> {
    elements: Elements<'a>,
}

impl<'a> BaseMoments<'a> {
    pub fn new(oracle: &'a StateOracle, elements: &[NCPoly]) -> Result<Self> {
        Ok(BaseMoments { elements: Elements::new(oracle, elements)? })
    }
}

impl MomentFunctional for BaseMoments<'_> {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        self.elements.product_moment(args)
    }
}

/// Handles evaluated by `Φ_t` or `Ψ_t` on tensors of centered elements. Block values
/// are shared between calls.
pub struct TwoStateMoments<'a> {
    elements: Elements<'a>,
    pub t: f64,
    pub which: TwoState,
    blocks: Mutex<HashMap<Vec<Handle>, C64>>,
}

impl<'a> TwoStateMoments<'a> {
    pub fn new(oracle: &'a StateOracle, elements: &[NCPoly], t: f64, which: TwoState) -> Result<Self> {
        check_t(t)?;
        for (i, f) in elements.iter().enumerate() {
            oracle.require_centered(f, &format!("element {i}"))?;
        }
        Ok(TwoStateMoments {
            elements: Elements::new(oracle, elements)?,
            t,
            which,
            blocks: Mutex::new(HashMap::new()),
        })
    }

    fn block(&self, args: Vec<Handle>) -> Result<C64> {
        if let Some(v) = self.blocks.lock().unwrap().get(&args) {
            return Ok(*v);
        }
        let v = self.elements.block_value(&args)?;
        self.blocks.lock().unwrap().insert(args, v);
        Ok(v)
    }
}

impl MomentFunctional for TwoStateMoments<'_> {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        self.elements.check(args)?;
        two_state_sum(args.len(), self.t, self.which, |b| {
            self.block(b.iter().map(|&i| args[i]).collect())
        })
    }
}

/// `B^φ[f₁, …, fₙ] = φ[f₁ Λ(f₂, Λ(…, Λ(f_{n-1}, fₙ)))]` for centered `fᵢ`, `n ≥ 2`.
pub fn boolean_cumulants_closed_form(o: &StateOracle, fs: &[NCPoly]) -> Result<C64> {
    if fs.len() < 2 {
        return Err(Error::Argument("the closed form needs at least two arguments".into()));
    }
    for (i, f) in fs.iter().enumerate() {
        o.require_centered(f, &format!("argument {}", i + 1))?;
    }
    let all: Vec<usize> = (0..fs.len()).collect();
    block_value(o, fs, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{centered_projection, MatrixModel, Word};

    fn bern(alpha: f64) -> StateOracle {
        MatrixModel::bernoulli(alpha).unwrap().into()
    }

    #[test]
    fn second_moments() {
        let a = 0.3;
        let o = bern(a);
        let f = vec![centered_projection(a); 2];
        for t in [0.0, 0.5, 1.0, 2.0] {
            let v = phi_t(&o, &f, t).unwrap();
            assert!((v - C64::new((1.0 + t) * 0.21, 0.0)).norm() < 1e-14);
            let v = psi_t(&o, &f, t).unwrap();
            assert!((v - C64::new(t * 0.21, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn block_value_matches_polynomial_route() {
        let o = bern(0.3);
        let f = centered_projection(0.3);
        let g = f.mul(&f).sub(&NCPoly::constant(0.21));
        let fs = vec![f.clone(), g.clone(), f.clone(), g, f];
        let free = StateOracle::Free(vec![o.clone()]);
        let lifted: Vec<NCPoly> = fs.iter().map(lift).collect();
        for block in [vec![0], vec![0, 1], vec![0, 2, 3], vec![0, 1, 2, 3, 4], vec![1, 4]] {
            let a = block_value(&o, &fs, &block).unwrap();
            let b = o.phi(&o.block_word(&fs, &block).unwrap()).unwrap();
            let c = block_value(&free, &lifted, &block).unwrap();
            assert!((a - b).norm() < 1e-14);
            assert!((a - c).norm() < 1e-14);
        }
    }

    fn lift(p: &NCPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w, c) in p.terms() {
            let mut letters = w.0.clone();
            for l in &mut letters {
                l.component.insert(0, 0);
            }
            out = out.add(&NCPoly::term(Word(letters), *c));
        }
        out
    }

    #[test]
    fn degenerate_t_zero_is_base_moment() {
        let a = 0.3;
        let o = bern(a);
        let f = centered_projection(a);
        for n in 0..=8 {
            let fs = vec![f.clone(); n];
            let mut prod = NCPoly::one();
            for g in &fs {
                prod = prod.mul(g);
            }
            let base = o.phi(&prod).unwrap();
            assert!((phi_t(&o, &fs, 0.0).unwrap() - base).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn requires_centering() {
        let o = bern(0.3);
        let fs = vec![NCPoly::generator("p"); 2];
        assert!(matches!(phi_t(&o, &fs, 1.0), Err(Error::Precondition(_))));
        assert!(matches!(psi_t(&o, &[], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn boolean_closed_form() {
        let a = 0.3;
        let o = bern(a);
        let f = centered_projection(a);
        let v2 = boolean_cumulants_closed_form(&o, &[f.clone(), f.clone()]).unwrap();
        assert!((v2 - o.phi(&f.mul(&f)).unwrap()).norm() < 1e-15);
        let v4 = boolean_cumulants_closed_form(&o, &vec![f.clone(); 4]).unwrap();
        assert!((v4 - C64::new(0.0336, 0.0)).norm() < 1e-14);
        let zero = boolean_cumulants_closed_form(&o, &[f.clone(), NCPoly::zero(), f.clone()]).unwrap();
        assert_eq!(zero, C64::new(0.0, 0.0));
        assert!(matches!(
            boolean_cumulants_closed_form(&o, &[NCPoly::generator("p"), f.clone()]),
            Err(Error::Precondition(_))
        ));
        assert!(boolean_cumulants_closed_form(&o, &[f]).is_err());
    }

    #[test]
    fn handle_functionals_agree_with_direct_sums() {
        let a = 0.3;
        let o = bern(a);
        let f = centered_projection(a);
        let g = o.lambda(&f, &f).unwrap();
        let elems = vec![f.clone(), g.clone()];
        let free = StateOracle::Free(vec![o.clone()]);
        let lifted: Vec<NCPoly> = elems.iter().map(lift).collect();
        let m = TwoStateMoments::new(&o, &elems, 0.7, TwoState::Phi).unwrap();
        let mf = TwoStateMoments::new(&free, &lifted, 0.7, TwoState::Phi).unwrap();
        let args = [Handle(0), Handle(1), Handle(0), Handle(0), Handle(1)];
        let fs: Vec<NCPoly> = args.iter().map(|h| elems[h.0].clone()).collect();
        let direct = phi_t(&o, &fs, 0.7).unwrap();
        assert!((m.moment(&args).unwrap() - direct).norm() < 1e-14);
        assert!((mf.moment(&args).unwrap() - direct).norm() < 1e-14);
        let b = BaseMoments::new(&o, &elems).unwrap();
        let bf = BaseMoments::new(&free, &lifted).unwrap();
        assert!((b.moment(&args).unwrap() - bf.moment(&args).unwrap()).norm() < 1e-14);
        assert!(m.moment(&[Handle(2)]).is_err());
    }
}
