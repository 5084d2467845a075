//! Truncated Fock-space models of `Φ_t`, `Ψ_t` and the Ricard construction.
//!
//! The one-particle space is `H° = Ω^⊥ ∩ span(BΩ)` for a matrix model `B`. Level `n`
//! is `(H°)^{⊗n}` with weight `w_n`, and each level basis is rescaled by `w_n^{-1/2}`
//! so that operator matrices live in an orthonormal basis and adjoints are literal
//! conjugate transposes. Level weights:
//!
//! | variant | `w_0` | `w_n`, `n ≥ 1`   |
//! |---------|-------|------------------|
//! | Phi     | 1     | `(1+t) t^{n-1}`  |
//! | Psi     | 1     | `t^n`            |
//! | Ricard  | 1     | `t^{n-1}`        |

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{MatrixModel, NCPoly, StateOracle, C64};
use crate::cumulants::{Handle, MomentFunctional};
use crate::error::{Error, Result};

/// Largest total dimension of a truncated Fock space.
pub const MAX_FOCK_DIM: usize = 1 << 13;

/// Vectors shorter than this are treated as linearly dependent when building `H°`.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Phi,
    Psi,
    Ricard,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Phi => "phi",
            Variant::Psi => "psi",
            Variant::Ricard => "ricard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Creation,
    Annihilation,
    Preservation,
    Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub kind: OperatorKind,
    pub matrix: DMatrix<C64>,
    pub source: NCPoly,
}

#[derive(Debug, Clone)]
pub struct FockModel {
    pub variant: Variant,
    pub t: f64,
    base: MatrixModel,
    oracle: StateOracle,
    /// Requested truncation level `N`.
    pub trunc: usize,
    /// Highest level actually present; 1 for the collapsed `t = 0` Phi model.
    top: usize,
    /// Orthonormal basis of `span(BΩ)` with `Ω` first.
    cyclic: DMatrix<C64>,
    /// Orthonormal basis of `H°` as columns.
    pub hcirc_basis: DMatrix<C64>,
    pub level_offsets: Vec<usize>,
    dim: usize,
}

// Orthonormal basis of the smallest subspace containing Ω and invariant under the
// generators and their adjoints, Ω first.
fn cyclic_basis(m: &MatrixModel) -> Vec<DVector<C64>> {
    let mut mats = Vec::new();
    for g in m.declared().values() {
        mats.push(g.clone());
        mats.push(g.adjoint());
    }
    let mut basis: Vec<DVector<C64>> = vec![m.omega().clone()];
    let mut next = 0;
    while next < basis.len() {
        let v = basis[next].clone();
        next += 1;
        for a in &mats {
            let mut w = a * &v;
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
            }
            let n = w.norm();
            if n > RANK_TOL {
                basis.push(w.unscale(n));
            }
        }
    }
    basis
}

impl FockModel {
    /// Builds the model on levels `0..=trunc`.
    ///
    /// Phi admits `t ≥ 0`; at `t = 0` the weights of levels `≥ 2` vanish and the model is
    /// `CΩ ⊕ H°`. Psi and Ricard need `t > 0`.
    pub fn build(base: &StateOracle, variant: Variant, t: f64, trunc: usize) -> Result<Self> {
        let Some(m) = base.as_matrix() else {
            return Err(Error::Argument("Fock models need a matrix-model base".into()));
        };
        if !t.is_finite() || t < 0.0 || (t == 0.0 && variant != Variant::Phi) {
            return Err(Error::Domain(format!("t = {t} is outside the domain of the {variant} construction")));
        }
        if trunc == 0 {
            return Err(Error::Argument("truncation level must be at least 1".into()));
        }
        let cyclic = cyclic_basis(m);
        let r = cyclic.len() - 1;
        if r == 0 {
            return Err(Error::Degenerate("H° is zero-dimensional: Ω is invariant".into()));
        }
        let top = if variant == Variant::Phi && t == 0.0 { 1 } else { trunc };
        let mut level_offsets = vec![0];
        let mut size = 1usize;
        let mut dim = 1usize;
        for _ in 1..=top {
            size = size.saturating_mul(r);
            level_offsets.push(dim);
            dim = dim.saturating_add(size);
            if dim > MAX_FOCK_DIM {
                return Err(Error::Size { what: "Fock space dimension", got: dim, limit: MAX_FOCK_DIM });
            }
        }
        let cyclic = DMatrix::from_columns(&cyclic);
        let hcirc_basis = cyclic.columns(1, r).into_owned();
        Ok(FockModel {
            variant,
            t,
            base: m.clone(),
            oracle: base.clone(),
            trunc,
            top,
            cyclic,
            hcirc_basis,
            level_offsets,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hcirc_dim(&self) -> usize {
        self.hcirc_basis.ncols()
    }

    /// Highest level present in the matrices.
    pub fn top_level(&self) -> usize {
        self.top
    }

    pub fn level_dim(&self, n: usize) -> usize {
        self.hcirc_dim().pow(n as u32)
    }

    pub fn base(&self) -> &MatrixModel {
        &self.base
    }

    /// Weight `w_n` of level `n`.
    pub fn weight(&self, n: usize) -> f64 {
        let t = self.t;
        match (self.variant, n) {
            (_, 0) => 1.0,
            (Variant::Phi, n) => (1.0 + t) * t.powi(n as i32 - 1),
            (Variant::Psi, n) => t.powi(n as i32),
            (Variant::Ricard, n) => t.powi(n as i32 - 1),
        }
    }

    // Orthonormal-basis factor of a⁺ from level n to n+1 and of a⁻ from n+1 to n;
    // equal to sqrt(w_{n+1}/w_n) times the raw coefficient of a⁻ at level n+1.
    fn step(&self, n: usize) -> f64 {
        let t = self.t;
        match (self.variant, n) {
            (Variant::Phi, 0) => (1.0 + t).sqrt(),
            (Variant::Ricard, 0) => 1.0,
            _ => t.sqrt(),
        }
    }

    /// Raw weighted Gram matrix `w_n (E^*E)^{⊗n}` of the level-`n` tensor basis.
    pub fn level_gram(&self, n: usize) -> DMatrix<C64> {
        let e = &self.hcirc_basis;
        let g1 = e.adjoint() * e;
        let mut g = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for _ in 0..n {
            g = g.kronecker(&g1);
        }
        g * C64::new(self.weight(n), 0.0)
    }

    fn check_member(&self, f: &NCPoly) -> Result<DMatrix<C64>> {
        self.base.poly_matrix(f)
    }

    /// `a⁺(f) ξ = (fΩ) ⊗ ξ`.
    pub fn creation(&self, f: &NCPoly) -> Result<FockOperator> {
        let fm = self.check_member(f)?;
        let c = self.hcirc_basis.adjoint() * (&fm * self.base.omega());
        let r = self.hcirc_dim();
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for n in 0..self.top {
            let s = self.step(n);
            let width = self.level_dim(n);
            for idx in 0..width {
                for j in 0..r {
                    a[(self.level_offsets[n + 1] + j * width + idx, self.level_offsets[n] + idx)] = c[j] * s;
                }
            }
        }
        Ok(FockOperator { kind: OperatorKind::Creation, matrix: a, source: f.clone() })
    }

    /// The variant's annihilator: `φ[f ξ₁] ξ₂ ⊗ … ⊗ ξₙ` times the level coefficient.
    pub fn annihilation(&self, f: &NCPoly) -> Result<FockOperator> {
        let fm = self.check_member(f)?;
        let d = (self.base.omega().adjoint() * &fm) * &self.hcirc_basis;
        let r = self.hcirc_dim();
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for n in 1..=self.top {
            let s = self.step(n - 1);
            let width = self.level_dim(n - 1);
            for j in 0..r {
                for rest in 0..width {
                    a[(self.level_offsets[n - 1] + rest, self.level_offsets[n] + j * width + rest)] =
                        d[j] * s;
                }
            }
        }
        Ok(FockOperator { kind: OperatorKind::Annihilation, matrix: a, source: f.clone() })
    }

    /// `a⁰(f)(ξ₁ ⊗ ξ') = (fξ₁ - ⟨fξ₁, Ω⟩Ω) ⊗ ξ'`.
    pub fn preservation(&self, f: &NCPoly) -> Result<FockOperator> {
        let fm = self.check_member(f)?;
        let l = self.hcirc_basis.adjoint() * &fm * &self.hcirc_basis;
        let r = self.hcirc_dim();
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for n in 1..=self.top {
            let width = self.level_dim(n - 1);
            let off = self.level_offsets[n];
            for i in 0..r {
                for j in 0..r {
                    if l[(i, j)] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for rest in 0..width {
                        a[(off + i * width + rest, off + j * width + rest)] = l[(i, j)];
                    }
                }
            }
        }
        Ok(FockOperator { kind: OperatorKind::Preservation, matrix: a, source: f.clone() })
    }

    /// `X(f, t)`, `Y(f, t)` or `Z(f, t)` for centered `f`.
    pub fn field_operator(&self, f: &NCPoly) -> Result<FockOperator> {
        self.oracle.require_centered(f, "field argument")?;
        let mut m = self.creation(f)?.matrix + self.annihilation(f)?.matrix;
        if self.variant != Variant::Ricard {
            m += self.preservation(f)?.matrix;
        }
        Ok(FockOperator { kind: OperatorKind::Field, matrix: m, source: f.clone() })
    }

    /// Smallest truncation level that evaluates words of length `m` exactly.
    pub fn levels_needed(&self, m: usize) -> usize {
        if self.variant == Variant::Phi && self.t == 0.0 {
            1
        } else {
            m.div_ceil(2)
        }
    }

    fn check_length(&self, m: usize) -> Result<()> {
        let needed = self.levels_needed(m);
        if needed > self.trunc {
            return Err(Error::Truncation { length: m, needed, available: self.trunc });
        }
        Ok(())
    }

    /// `⟨T₁ ⋯ T_m Ω, Ω⟩` for field operators already built on this model.
    pub fn vacuum_moment_of(&self, ops: &[&DMatrix<C64>]) -> Result<C64> {
        self.check_length(ops.len())?;
        let mut v = DVector::zeros(self.dim);
        v[0] = C64::new(1.0, 0.0);
        for a in ops.iter().rev() {
            v = *a * v;
        }
        Ok(v[0])
    }

    /// `⟨X(f₁) ⋯ X(f_m) Ω, Ω⟩`.
    pub fn vacuum_moment(&self, fs: &[NCPoly]) -> Result<C64> {
        self.check_length(fs.len())?;
        let ops = fs.iter().map(|f| self.field_operator(f)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&DMatrix<C64>> = ops.iter().map(|o| &o.matrix).collect();
        self.vacuum_moment_of(&refs)
    }

    // Index range compared by the adjointness test: all levels below N, or the whole
    // collapsed space.
    fn exact_block(&self) -> usize {
        if self.top < self.trunc {
            self.dim
        } else {
            self.level_offsets[self.top]
        }
    }

    /// `‖X(f*) − X(f)*‖` on the levels below the truncation boundary.
    pub fn adjointness_defect(&self, f: &NCPoly) -> Result<f64> {
        let fstar = f.star();
        let x = self.field_matrix_unchecked(f)?;
        let y = self.field_matrix_unchecked(&fstar)?;
        let k = self.exact_block();
        let diff = y.view((0, 0), (k, k)) - x.adjoint().view((0, 0), (k, k));
        Ok(operator_norm(&diff.into_owned()))
    }

    fn field_matrix_unchecked(&self, f: &NCPoly) -> Result<DMatrix<C64>> {
        let centered = self.oracle.center(f)?;
        let mut m = self.creation(&centered)?.matrix + self.annihilation(&centered)?.matrix;
        if self.variant != Variant::Ricard {
            m += self.preservation(&centered)?.matrix;
        }
        Ok(m)
    }

    /// `‖f‖_B`: the operator norm of `f` on `span(BΩ)`.
    pub fn base_norm(&self, f: &NCPoly) -> Result<f64> {
        let fm = self.base.poly_matrix(f)?;
        Ok(operator_norm(&(self.cyclic.adjoint() * fm * &self.cyclic)))
    }

    /// Constant `c` of the bound `‖field(f)‖ ≤ c‖f‖_B`.
    pub fn norm_constant(&self) -> f64 {
        let t = self.t;
        match self.variant {
            Variant::Phi => 2.0 * (1.0 + (1.0 + t).sqrt()),
            Variant::Psi => 2.0 * (1.0 + t.sqrt()),
            Variant::Ricard => 2.0 * t.max(1.0).sqrt(),
        }
    }

    /// `(‖field(f)‖, c‖f‖_B)` on the truncated space.
    pub fn norm_bound(&self, f: &NCPoly) -> Result<(f64, f64)> {
        let x = self.field_operator(f)?;
        Ok((operator_norm(&x.matrix), self.norm_constant() * self.base_norm(f)?))
    }

    pub fn norm_bound_check(&self, f: &NCPoly) -> Result<bool> {
        let (lhs, rhs) = self.norm_bound(f)?;
        Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-14)
    }
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `true` iff the Hermitian part of `g` admits a Cholesky factorization.
pub fn is_positive_definite(g: &DMatrix<C64>) -> bool {
    let h = (g + g.adjoint()) * C64::new(0.5, 0.0);
    nalgebra::Cholesky::new(h).is_some()
}

/// Vacuum moments of field operators, addressed by handles into `elements`.
pub struct VacuumMoments {
    model: FockModel,
    fields: Vec<DMatrix<C64>>,
}

impl VacuumMoments {
    pub fn new(model: FockModel, elements: &[NCPoly]) -> Result<Self> {
        let fields = elements
            .iter()
            .map(|f| model.field_operator(f).map(|o| o.matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(VacuumMoments { model, fields })
    }

    pub fn model(&self) -> &FockModel {
        &self.model
    }
}

impl MomentFunctional for VacuumMoments {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        let ops = args
            .iter()
            .map(|h| {
                self.fields
                    .get(h.0)
                    .ok_or_else(|| Error::Argument(format!("handle {h} has no element")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.model.vacuum_moment_of(&ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{boolean_matrix_model, centered_projection, BooleanModel};

    fn bern(alpha: f64) -> StateOracle {
        MatrixModel::bernoulli(alpha).unwrap().into()
    }

    #[test]
    fn dimensions() {
        let m = FockModel::build(&bern(0.3), Variant::Phi, 1.0, 4).unwrap();
        assert_eq!(m.hcirc_dim(), 1);
        assert_eq!(m.dim(), 5);
        let b = FockModel::build(&boolean_matrix_model(&[0.3, 0.5]).unwrap(), Variant::Phi, 1.0, 3).unwrap();
        assert_eq!(b.hcirc_dim(), 2);
        assert_eq!((0..=3).map(|n| b.level_dim(n)).collect::<Vec<_>>(), vec![1, 2, 4, 8]);
        let z = FockModel::build(&bern(0.3), Variant::Phi, 0.0, 1).unwrap();
        assert_eq!(z.dim(), 2);
    }

    #[test]
    fn second_moments() {
        let a = 0.3;
        let f = centered_projection(a);
        for t in [0.5, 1.0, 2.0] {
            let x = FockModel::build(&bern(a), Variant::Phi, t, 2).unwrap();
            assert_eq!(x.vacuum_moment(std::slice::from_ref(&f)).unwrap(), C64::new(0.0, 0.0));
            let v = x.vacuum_moment(&[f.clone(), f.clone()]).unwrap();
            assert!((v.re - (1.0 + t) * 0.21).abs() < 1e-14);
            let y = FockModel::build(&bern(a), Variant::Psi, t, 2).unwrap();
            let v = y.vacuum_moment(&[f.clone(), f.clone()]).unwrap();
            assert!((v.re - t * 0.21).abs() < 1e-14);
        }
        let x = FockModel::build(&bern(a), Variant::Phi, 1.0, 2).unwrap();
        assert_eq!(x.vacuum_moment(&[]).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn truncation_and_domains() {
        let f = centered_projection(0.3);
        let m = FockModel::build(&bern(0.3), Variant::Phi, 1.0, 2).unwrap();
        assert!(m.vacuum_moment(&vec![f.clone(); 4]).is_ok());
        assert!(matches!(
            m.vacuum_moment(&vec![f.clone(); 5]),
            Err(Error::Truncation { length: 5, needed: 3, available: 2 })
        ));
        let z = FockModel::build(&bern(0.3), Variant::Phi, 0.0, 1).unwrap();
        assert!(z.vacuum_moment(&vec![f.clone(); 9]).is_ok());
        assert!(matches!(FockModel::build(&bern(0.3), Variant::Psi, 0.0, 2), Err(Error::Domain(_))));
        assert!(matches!(FockModel::build(&bern(0.0), Variant::Phi, 1.0, 2), Err(Error::Degenerate(_))));
        assert!(matches!(
            m.field_operator(&NCPoly::generator("p")),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn t_zero_reproduces_base_moments() {
        let a = 0.3;
        let o = bern(a);
        let f = centered_projection(a);
        let z = FockModel::build(&o, Variant::Phi, 0.0, 1).unwrap();
        let mut prod = NCPoly::one();
        for n in 0..8 {
            let fock = z.vacuum_moment(&vec![f.clone(); n]).unwrap();
            assert!((fock - o.phi(&prod).unwrap()).norm() < 1e-14, "n = {n}");
            prod = prod.mul(&f);
        }
    }

    #[test]
    fn adjoint_and_norm_bounds() {
        let bm = BooleanModel::new(&[0.3, 0.6]).unwrap();
        let o = bm.oracle();
        let g = bm.centered(1).mul(&bm.centered(2)).scale(C64::new(0.5, 0.7)).add(&bm.centered(2));
        let g = o.center(&g).unwrap();
        for variant in [Variant::Phi, Variant::Psi, Variant::Ricard] {
            let m = FockModel::build(&o, variant, 0.8, 3).unwrap();
            assert!(m.adjointness_defect(&g).unwrap() <= 1e-10);
            assert!(m.norm_bound_check(&g).unwrap());
            assert!(m.norm_bound_check(&g.scale(3.0)).unwrap());
            assert!(m.norm_bound_check(&NCPoly::zero()).unwrap());
        }
    }

    #[test]
    fn level_grams_are_positive() {
        let o = boolean_matrix_model(&[0.3, 0.5]).unwrap();
        for variant in [Variant::Phi, Variant::Psi, Variant::Ricard] {
            let m = FockModel::build(&o, variant, 0.25, 3).unwrap();
            for n in 0..=3 {
                assert!(is_positive_definite(&m.level_gram(n)));
            }
        }
        let z = FockModel::build(&o, Variant::Phi, 0.0, 1).unwrap();
        assert!(!is_positive_definite(&z.level_gram(2)));
    }
}
