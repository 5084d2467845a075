//! Words, noncommutative polynomials and state oracles.
//!
//! A [`StateOracle`] is a unital moment functional on words. It is either a concrete
//! matrix model with a vector state, or a free or Boolean product of other oracles.
//! Letters carry the component path that routes them through nested products.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cumulants::{free_cumulant_of_mask, MaskMoments};
use crate::error::{Error, Result};
use crate::partitions::check_size;

pub mod spec;

pub type C64 = Complex64;

/// Tolerance used for centering preconditions and exact-identity comparisons.
pub const EXACT_TOL: f64 = 1e-10;

/// One letter of a word: a generator name plus the product components it lives in.
///
/// `component` is a path from the outermost product inwards; it is empty for a
/// letter addressed directly to a matrix model. A trailing `*` on the name denotes
/// the adjoint of the generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub name: String,
    pub component: Vec<usize>,
}

impl Letter {
    pub fn new(name: impl Into<String>) -> Self {
        Letter { name: name.into(), component: Vec::new() }
    }

    pub fn in_component(name: impl Into<String>, path: &[usize]) -> Self {
        Letter { name: name.into(), component: path.to_vec() }
    }

    pub fn adjoint(&self) -> Letter {
        let name = match self.name.strip_suffix('*') {
            Some(base) => base.to_string(),
            None => format!("{}*", self.name),
        };
        Letter { name, component: self.component.clone() }
    }

    fn head(&self) -> Option<(usize, Letter)> {
        let (&first, rest) = self.component.split_first()?;
        Some((first, Letter { name: self.name.clone(), component: rest.to_vec() }))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.component.is_empty() {
            let path: Vec<String> = self.component.iter().map(|c| c.to_string()).collect();
            write!(f, "{}:", path.join("."))?;
        }
        write!(f, "{}", self.name)
    }
}

/// A finite product of letters; the empty word is the unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    /// Parses whitespace-separated letters such as `p q p*` or `0:p 1:q 0.1:r`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let letter = match tok.split_once(':') {
                Some((path, name)) => {
                    let component = path
                        .split('.')
                        .map(|c| {
                            c.parse::<usize>().map_err(|_| Error::Parse {
                                path: format!("word `{s}`"),
                                message: format!("bad component index `{c}` in `{tok}`"),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Letter { name: name.to_string(), component }
                }
                None => Letter::new(tok),
            };
            if letter.name.is_empty() {
                return Err(Error::Parse {
                    path: format!("word `{s}`"),
                    message: format!("empty generator name in `{tok}`"),
                });
            }
            letters.push(letter);
        }
        Ok(Word(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Word(v)
    }

    pub fn star(&self) -> Word {
        Word(self.0.iter().rev().map(Letter::adjoint).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A finite linear combination of words. Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NCPoly {
    terms: BTreeMap<Word, C64>,
}

impl NCPoly {
    pub fn zero() -> Self {
        NCPoly::default()
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        NCPoly::term(Word::unit(), c)
    }

    pub fn one() -> Self {
        NCPoly::constant(1.0)
    }

    pub fn term(w: Word, c: impl Into<C64>) -> Self {
        let mut p = NCPoly::zero();
        p.add_term(w, c.into());
        p
    }

    pub fn word(w: Word) -> Self {
        NCPoly::term(w, 1.0)
    }

    pub fn generator(name: &str) -> Self {
        NCPoly::word(Word::letter(Letter::new(name)))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    fn add_term(&mut self, w: Word, c: C64) {
        let v = self.terms.get(&w).copied().unwrap_or_default() + c;
        if v == C64::new(0.0, 0.0) {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, v);
        }
    }

    pub fn add(&self, other: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &NCPoly) -> NCPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: impl Into<C64>) -> NCPoly {
        let s = s.into();
        let mut out = NCPoly::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &NCPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        out
    }

    /// Adjoint: reversed words with adjoint letters and conjugate coefficients.
    pub fn star(&self) -> NCPoly {
        let mut out = NCPoly::zero();
        for (w, c) in &self.terms {
            out.add_term(w.star(), c.conj());
        }
        out
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)·{}", c.re, c.im, w)?;
        }
        Ok(())
    }
}

/// A generator known to an oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub id: String,
    /// Name of the adjoint generator; `None` for self-adjoint generators.
    pub adjoint_of: Option<String>,
    pub component: Vec<usize>,
}

impl Generator {
    pub fn letter(&self) -> Letter {
        Letter::in_component(self.id.clone(), &self.component)
    }
}

/// Square complex matrices acting on `C^k` with the vector state of a unit vector `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixModel {
    dim: usize,
    omega: DVector<C64>,
    generators: BTreeMap<String, DMatrix<C64>>,
}

impl MatrixModel {
    /// `omega` defaults to the first standard basis vector and is normalized.
    pub fn new(
        generators: impl IntoIterator<Item = (String, DMatrix<C64>)>,
        omega: Option<DVector<C64>>,
    ) -> Result<Self> {
        let generators: BTreeMap<String, DMatrix<C64>> = generators.into_iter().collect();
        let dim = match (&omega, generators.values().next()) {
            (Some(o), _) => o.len(),
            (None, Some(m)) => m.nrows(),
            (None, None) => return Err(Error::Argument("matrix model needs a dimension".into())),
        };
        Self::with_dim(dim, generators, omega)
    }

    pub fn with_dim(
        dim: usize,
        generators: BTreeMap<String, DMatrix<C64>>,
        omega: Option<DVector<C64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("matrix model dimension must be positive".into()));
        }
        for (id, m) in &generators {
            if id.is_empty() {
                return Err(Error::Argument("generator id must be non-empty".into()));
            }
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Argument(format!(
                    "generator `{id}` is {}x{}, model dimension is {dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let omega = omega.unwrap_or_else(|| {
            let mut e = DVector::zeros(dim);
            e[0] = C64::new(1.0, 0.0);
            e
        });
        if omega.len() != dim {
            return Err(Error::Argument(format!(
                "state vector has length {}, model dimension is {dim}",
                omega.len()
            )));
        }
        let norm = omega.norm();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Argument("state vector must be nonzero and finite".into()));
        }
        Ok(MatrixModel { dim, omega: omega.unscale(norm), generators })
    }

    /// `C^2` with the projection `p = [[α, β], [β, 1-α]]`, `β = sqrt(α(1-α))`, and `Ω = e₁`.
    /// Then `φ[p] = α` and `p° = p - α` has moments of a centered Bernoulli law.
    pub fn bernoulli(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("Bernoulli parameter {alpha} outside [0, 1]")));
        }
        let b = (alpha * (1.0 - alpha)).sqrt();
        let p = real_matrix(2, &[alpha, b, b, 1.0 - alpha]);
        MatrixModel::new([("p".to_string(), p)], None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> &DVector<C64> {
        &self.omega
    }

    pub fn generator_names(&self) -> impl Iterator<Item = &str> {
        self.generators.keys().map(String::as_str)
    }

    /// Matrices as declared, without synthesized adjoints.
    pub fn declared(&self) -> &BTreeMap<String, DMatrix<C64>> {
        &self.generators
    }

    /// The matrix of a letter; `x*` falls back to the adjoint of `x`.
    pub fn letter_matrix(&self, name: &str) -> Result<DMatrix<C64>> {
        if let Some(m) = self.generators.get(name) {
            return Ok(m.clone());
        }
        if let Some(base) = name.strip_suffix('*') {
            if let Some(m) = self.generators.get(base) {
                return Ok(m.adjoint());
            }
        }
        Err(Error::UnknownGenerator(name.to_string()))
    }

    fn check_leaf(&self, l: &Letter) -> Result<()> {
        if !l.component.is_empty() {
            return Err(Error::UnknownGenerator(l.to_string()));
        }
        Ok(())
    }

    /// Applies the word (rightmost letter first) to a vector.
    pub fn apply_word(&self, w: &Word, v: &DVector<C64>) -> Result<DVector<C64>> {
        let mut v = v.clone();
        for l in w.0.iter().rev() {
            self.check_leaf(l)?;
            let m = self.resolve(&l.name)?;
            v = m.as_ref() * v;
        }
        Ok(v)
    }

    fn resolve(&self, name: &str) -> Result<std::borrow::Cow<'_, DMatrix<C64>>> {
        if let Some(m) = self.generators.get(name) {
            return Ok(std::borrow::Cow::Borrowed(m));
        }
        self.letter_matrix(name).map(std::borrow::Cow::Owned)
    }

    /// `⟨w Ω, Ω⟩`.
    pub fn moment(&self, w: &Word) -> Result<C64> {
        let v = self.apply_word(w, &self.omega)?;
        Ok(self.omega.dotc(&v))
    }

    /// The matrix of a polynomial.
    pub fn poly_matrix(&self, f: &NCPoly) -> Result<DMatrix<C64>> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (w, c) in f.terms() {
            let mut m = DMatrix::identity(self.dim, self.dim);
            for l in &w.0 {
                self.check_leaf(l)?;
                m *= self.resolve(&l.name)?.as_ref();
            }
            out += m * *c;
        }
        Ok(out)
    }

    pub fn generators(&self) -> Vec<Generator> {
        let mut out = Vec::new();
        for (id, m) in &self.generators {
            let hermitian = (m - m.adjoint()).norm() <= EXACT_TOL;
            let adjoint_of = if hermitian {
                None
            } else {
                Some(Letter::new(id.clone()).adjoint().name)
            };
            out.push(Generator { id: id.clone(), adjoint_of, component: Vec::new() });
        }
        out
    }
}

pub(crate) fn real_matrix(dim: usize, row_major: &[f64]) -> DMatrix<C64> {
    DMatrix::from_row_iterator(dim, dim, row_major.iter().map(|&x| C64::new(x, 0.0)))
}

/// A unital moment functional on words.
#[derive(Debug, Clone, PartialEq)]
pub enum StateOracle {
    Matrix(MatrixModel),
    /// Reduced free product: mixed free cumulants vanish.
    Free(Vec<StateOracle>),
    /// Boolean product of the non-unital component algebras.
    Boolean(Vec<StateOracle>),
}

impl From<MatrixModel> for StateOracle {
    fn from(m: MatrixModel) -> Self {
        StateOracle::Matrix(m)
    }
}

impl StateOracle {
    /// `φ` on a single word.
    pub fn moment(&self, w: &Word) -> Result<C64> {
        match self {
            StateOracle::Matrix(m) => m.moment(w),
            StateOracle::Free(children) => free_product_moment(children, w),
            StateOracle::Boolean(children) => boolean_product_moment(children, w),
        }
    }

    /// `φ` extended linearly to polynomials.
    pub fn phi(&self, p: &NCPoly) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (w, c) in p.terms() {
            acc += c * self.moment(w)?;
        }
        Ok(acc)
    }

    pub fn as_matrix(&self) -> Option<&MatrixModel> {
        match self {
            StateOracle::Matrix(m) => Some(m),
            _ => None,
        }
    }

    /// Every leaf generator with its full component path.
    pub fn generators(&self) -> Vec<Generator> {
        match self {
            StateOracle::Matrix(m) => m.generators(),
            StateOracle::Free(cs) | StateOracle::Boolean(cs) => cs
                .iter()
                .enumerate()
                .flat_map(|(i, c)| {
                    c.generators().into_iter().map(move |mut g| {
                        g.component.insert(0, i);
                        g
                    })
                })
                .collect(),
        }
    }

    /// `f - φ[f]·1`.
    pub fn center(&self, f: &NCPoly) -> Result<NCPoly> {
        Ok(f.sub(&NCPoly::constant(self.phi(f)?)))
    }

    /// `Λ(f, g) = fg - φ[fg]·1`.
    pub fn lambda(&self, f: &NCPoly, g: &NCPoly) -> Result<NCPoly> {
        self.center(&f.mul(g))
    }

    /// The block word `W(V) = f_{v1} Λ(f_{v2}, Λ(f_{v3}, … Λ(f_{v(k-1)}, f_{vk})))`.
    ///
    /// For `|V| = 1` this is `f_{v1}` and for `|V| = 2` the plain product `f_{v1} f_{v2}`.
    pub fn block_word(&self, fs: &[NCPoly], block: &[usize]) -> Result<NCPoly> {
        let Some((&first, rest)) = block.split_first() else {
            return Err(Error::Argument("block word of an empty block".into()));
        };
        if let Some(&bad) = block.iter().find(|&&i| i >= fs.len()) {
            return Err(Error::Argument(format!(
                "block index {bad} out of range for {} elements",
                fs.len()
            )));
        }
        let Some((&last, middle)) = rest.split_last() else {
            return Ok(fs[first].clone());
        };
        let mut inner = fs[last].clone();
        for &i in middle.iter().rev() {
            inner = self.lambda(&fs[i], &inner)?;
        }
        Ok(fs[first].mul(&inner))
    }

    /// Checks `|φ[f]| ≤ EXACT_TOL`.
    pub fn require_centered(&self, f: &NCPoly, what: &str) -> Result<()> {
        let m = self.phi(f)?;
        if m.norm() > EXACT_TOL {
            return Err(Error::Precondition(format!(
                "{what} must be centered, but φ = {m}"
            )));
        }
        Ok(())
    }
}

// Splits a word into maximal runs of letters from the same top-level component,
// returning per-run component index and the run re-addressed to the child.
fn runs(children: usize, w: &Word) -> Result<Vec<(usize, Word)>> {
    let mut out: Vec<(usize, Word)> = Vec::new();
    for l in &w.0 {
        let (c, inner) = l.head().ok_or_else(|| Error::UnknownGenerator(l.to_string()))?;
        if c >= children {
            return Err(Error::UnknownGenerator(l.to_string()));
        }
        match out.last_mut() {
            Some((prev, run)) if *prev == c => run.0.push(inner),
            _ => out.push((c, Word(vec![inner]))),
        }
    }
    Ok(out)
}

/// Moment of a word in the reduced free product of `children`.
///
/// Adjacent letters from one component are multiplied inside that component. The
/// remaining alternating product is resummed over noncrossing partitions whose
/// blocks stay inside one component, using each component's own free cumulants.
pub fn free_product_moment(children: &[StateOracle], w: &Word) -> Result<C64> {
    let runs = runs(children.len(), w)?;
    if runs.len() == 1 {
        return children[runs[0].0].moment(&runs[0].1);
    }
    let comps: Vec<usize> = runs.iter().map(|r| r.0).collect();
    alternating_moment(&comps, |c, picked| {
        let mut word = Word::unit();
        for &i in picked {
            word.0.extend(runs[i].1 .0.iter().cloned());
        }
        children[c].moment(&word)
    })
}

/// State of the product `a_1 ⋯ a_n` in the reduced free product, where each factor
/// `(c, a)` is an element of component `c` written in that component's letters.
pub fn free_product_phi_of_factors(children: &[StateOracle], factors: &[(usize, NCPoly)]) -> Result<C64> {
    let mut merged: Vec<(usize, NCPoly)> = Vec::new();
    for (c, a) in factors {
        if *c >= children.len() {
            return Err(Error::Argument(format!("component {c} out of range")));
        }
        match merged.last_mut() {
            Some((prev, p)) if prev == c => *p = p.mul(a),
            _ => merged.push((*c, a.clone())),
        }
    }
    if merged.len() == 1 {
        return children[merged[0].0].phi(&merged[0].1);
    }
    let comps: Vec<usize> = merged.iter().map(|r| r.0).collect();
    alternating_moment(&comps, |c, picked| {
        let p = picked.iter().fold(NCPoly::one(), |acc, &i| acc.mul(&merged[i].1));
        children[c].phi(&p)
    })
}

// Resums an alternating product over same-component noncrossing blocks; `child`
// gives the component moment of the selected positions, in order.
fn alternating_moment(comps: &[usize], mut child: impl FnMut(usize, &[usize]) -> Result<C64>) -> Result<C64> {
    let m = comps.len();
    if m == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    check_size("free-product word length", m)?;
    let mut child = MaskMoments::new(|mask: u32| {
        let picked: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        match picked.first() {
            Some(&i) => child(comps[i], &picked),
            None => Ok(C64::new(1.0, 0.0)),
        }
    });
    let mut cumulants: BTreeMap<u32, C64> = BTreeMap::new();
    let mut interval: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    interval_moment(0, m, comps, &mut child, &mut cumulants, &mut interval)
}

// Moment of runs lo..hi of the free product; the block holding `lo` ranges over all
// same-component subsets, the gaps it leaves are independent intervals.
fn interval_moment(
    lo: usize,
    hi: usize,
    comps: &[usize],
    child: &mut MaskMoments<impl FnMut(u32) -> Result<C64>>,
    cumulants: &mut BTreeMap<u32, C64>,
    memo: &mut BTreeMap<(usize, usize), C64>,
) -> Result<C64> {
    if lo >= hi {
        return Ok(C64::new(1.0, 0.0));
    }
    if let Some(v) = memo.get(&(lo, hi)) {
        return Ok(*v);
    }
    let same: Vec<usize> = (lo + 1..hi).filter(|&i| comps[i] == comps[lo]).collect();
    let mut total = C64::new(0.0, 0.0);
    for choice in 0u32..(1u32 << same.len()) {
        let mut block = vec![lo];
        for (k, &i) in same.iter().enumerate() {
            if choice >> k & 1 == 1 {
                block.push(i);
            }
        }
        let mask = block.iter().fold(0u32, |m, &i| m | 1 << i);
        let r = match cumulants.get(&mask) {
            Some(r) => *r,
            None => {
                let r = free_cumulant_of_mask(child, mask)?;
                cumulants.insert(mask, r);
                r
            }
        };
        if r == C64::new(0.0, 0.0) {
            continue;
        }
        let mut term = r;
        for pair in block.windows(2) {
            term *= interval_moment(pair[0] + 1, pair[1], comps, child, cumulants, memo)?;
        }
        term *= interval_moment(block[block.len() - 1] + 1, hi, comps, child, cumulants, memo)?;
        total += term;
    }
    memo.insert((lo, hi), total);
    Ok(total)
}

/// Moment of a word in the Boolean product: runs are multiplied inside their
/// component and the alternating product factorizes.
pub fn boolean_product_moment(children: &[StateOracle], w: &Word) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for (c, run) in runs(children.len(), w)? {
        acc *= children[c].moment(&run)?;
    }
    Ok(acc)
}

/// The Boolean product of two-point algebras realized in `M_{d+1}(C)` with `Ω = e₁`.
///
/// Component `i` (1-based names) contributes the projection `p{i}`, equal to
/// `α E₁₁ + β(E₁,ᵢ₊₁ + Eᵢ₊₁,₁) + (1-α) Eᵢ₊₁,ᵢ₊₁`, and its local unit
/// `u{i} = E₁₁ + Eᵢ₊₁,ᵢ₊₁`. The centered element
/// `p{i} - α_i u{i} = β_i(E₁,ᵢ₊₁ + Eᵢ₊₁,₁) + (1 - 2α_i) Eᵢ₊₁,ᵢ₊₁` is returned by
/// [`BooleanModel::centered`].
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanModel {
    pub alphas: Vec<f64>,
    pub model: MatrixModel,
}

impl BooleanModel {
    pub fn new(alphas: &[f64]) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Argument("Boolean model needs at least one component".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Domain(format!("projection state {a} outside (0, 1)")));
        }
        let k = alphas.len() + 1;
        let mut gens = BTreeMap::new();
        for (i, &a) in alphas.iter().enumerate() {
            let j = i + 1;
            let b = (a * (1.0 - a)).sqrt();
            let mut p = DMatrix::zeros(k, k);
            p[(0, 0)] = C64::new(a, 0.0);
            p[(0, j)] = C64::new(b, 0.0);
            p[(j, 0)] = C64::new(b, 0.0);
            p[(j, j)] = C64::new(1.0 - a, 0.0);
            let mut u = DMatrix::zeros(k, k);
            u[(0, 0)] = C64::new(1.0, 0.0);
            u[(j, j)] = C64::new(1.0, 0.0);
            gens.insert(format!("p{j}"), p);
            gens.insert(format!("u{j}"), u);
        }
        let model = MatrixModel::with_dim(k, gens, None)?;
        Ok(BooleanModel { alphas: alphas.to_vec(), model })
    }

    /// `p_i - α_i u_i` for the 1-based component `i`.
    pub fn centered(&self, i: usize) -> NCPoly {
        let a = self.alphas[i - 1];
        NCPoly::generator(&format!("p{i}")).sub(&NCPoly::generator(&format!("u{i}")).scale(a))
    }

    pub fn oracle(&self) -> StateOracle {
        StateOracle::Matrix(self.model.clone())
    }
}

/// The matrix-model oracle of [`BooleanModel::new`].
pub fn boolean_matrix_model(alphas: &[f64]) -> Result<StateOracle> {
    Ok(BooleanModel::new(alphas)?.oracle())
}

/// `C^2` Bernoulli model with an explicit unit generator `u`, the building block of
/// Boolean products (whose components are non-unital).
pub fn bernoulli_with_unit(alpha: f64) -> Result<MatrixModel> {
    let b = MatrixModel::bernoulli(alpha)?;
    let mut gens = b.declared().clone();
    gens.insert("u".into(), DMatrix::identity(2, 2));
    MatrixModel::with_dim(2, gens, None)
}

/// `p - α·1` for the Bernoulli model.
pub fn centered_projection(alpha: f64) -> NCPoly {
    NCPoly::generator("p").sub(&NCPoly::constant(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: f64) -> bool {
        (a - C64::new(b, 0.0)).norm() < 1e-12
    }

    fn bern(alpha: f64) -> StateOracle {
        MatrixModel::bernoulli(alpha).unwrap().into()
    }

    #[test]
    fn bernoulli_projection_moments() {
        let o = bern(0.3);
        assert!(close(o.moment(&Word::parse("p").unwrap()).unwrap(), 0.3));
        assert!(close(o.moment(&Word::unit()).unwrap(), 1.0));
        assert!(close(o.moment(&Word::parse("p p").unwrap()).unwrap(), 0.3));
        assert!(close(o.moment(&Word::parse("p p p p").unwrap()).unwrap(), 0.3));
    }

    #[test]
    fn unknown_generator() {
        let o = bern(0.3);
        assert!(matches!(o.moment(&Word::parse("q").unwrap()), Err(Error::UnknownGenerator(_))));
        let f = StateOracle::Free(vec![bern(0.3)]);
        assert!(matches!(f.moment(&Word::parse("3:p").unwrap()), Err(Error::UnknownGenerator(_))));
        assert!(matches!(f.moment(&Word::parse("p").unwrap()), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn centering() {
        let o = bern(0.3);
        let pc = o.center(&NCPoly::generator("p")).unwrap();
        assert_eq!(pc, centered_projection(0.3));
        assert!(o.center(&NCPoly::one()).unwrap().is_zero());
        assert!(o.phi(&pc).unwrap().norm() < 1e-15);
    }

    #[test]
    fn lambda_of_centered_projection() {
        let a = 0.3;
        let o = bern(a);
        let pc = centered_projection(a);
        // (p°)² has φ = α(1-α) = 0.21 from the 2x2 matrix arithmetic.
        let sq = pc.mul(&pc);
        assert!(close(o.phi(&sq).unwrap(), 0.21));
        let l = o.lambda(&pc, &pc).unwrap();
        assert_eq!(l, sq.sub(&NCPoly::constant(o.phi(&sq).unwrap())));
        assert!(o.phi(&l).unwrap().norm() < 1e-15);
        assert_eq!(o.lambda(&pc, &NCPoly::one()).unwrap(), o.center(&pc).unwrap());
    }

    #[test]
    fn block_words() {
        let a = 0.3;
        let o = bern(a);
        let pc = centered_projection(a);
        let fs = vec![pc.clone(), pc.clone(), pc.clone()];
        assert_eq!(o.block_word(&fs, &[0]).unwrap(), pc);
        assert_eq!(o.block_word(&fs, &[0, 1]).unwrap(), pc.mul(&pc));
        let w3 = o.block_word(&fs, &[0, 1, 2]).unwrap();
        assert_eq!(w3, pc.mul(&o.lambda(&pc, &pc).unwrap()));
        // α(1-α)(1-2α) at α = 0.3.
        assert!(close(o.phi(&w3).unwrap(), 0.084));
        assert!(matches!(o.block_word(&fs, &[]), Err(Error::Argument(_))));
    }

    #[test]
    fn free_product_basics() {
        let f = StateOracle::Free(vec![bern(0.5), bern(0.5)]);
        let pc = NCPoly::word(Word::parse("0:p").unwrap()).sub(&NCPoly::constant(0.5));
        let qc = NCPoly::word(Word::parse("1:p").unwrap()).sub(&NCPoly::constant(0.5));
        assert!(f.phi(&pc.mul(&qc)).unwrap().norm() < 1e-14);
        let alt = pc.mul(&qc).mul(&pc).mul(&qc);
        assert!(f.phi(&alt).unwrap().norm() < 1e-14);
        // A word inside one component is the child moment.
        let child = bern(0.5);
        let w = Word::parse("0:p 0:p 0:p").unwrap();
        assert!((f.moment(&w).unwrap() - child.moment(&Word::parse("p p p").unwrap()).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn factor_form_matches_expanded_words() {
        let children = [bern(0.3), bern(0.6)];
        let f = StateOracle::Free(children.to_vec());
        let pc = centered_projection(0.3);
        let lam = children[0].lambda(&pc, &pc).unwrap();
        let lift = |p: &NCPoly, c: usize| {
            p.terms().fold(NCPoly::zero(), |acc, (w, k)| {
                let letters = w.0.iter().map(|l| Letter::in_component(l.name.clone(), &[c])).collect();
                acc.add(&NCPoly::term(Word(letters), *k))
            })
        };
        let q = NCPoly::generator("p");
        let factors = vec![(1, q.clone()), (0, pc.clone()), (1, q.clone()), (0, lam.clone()), (0, pc.clone()), (1, q.clone())];
        let expanded = factors.iter().fold(NCPoly::one(), |acc, (c, a)| acc.mul(&lift(a, *c)));
        let a = free_product_phi_of_factors(&children, &factors).unwrap();
        let b = f.phi(&expanded).unwrap();
        assert!((a - b).norm() < 1e-13);
        assert!(matches!(free_product_phi_of_factors(&children, &[(2, q)]), Err(Error::Argument(_))));
    }

    #[test]
    fn free_product_mixed_second_order() {
        // φ[p q p] = φ[p²]φ[q] = αβ.
        let f = StateOracle::Free(vec![bern(0.3), bern(0.6)]);
        let v = f.moment(&Word::parse("0:p 1:p 0:p").unwrap()).unwrap();
        assert!(close(v, 0.3 * 0.6));
        // φ[p q p q] = φ[p²]φ[q]² + φ[p]²φ[q²] - φ[p]²φ[q]² for free pairs.
        let v = f.moment(&Word::parse("0:p 1:p 0:p 1:p").unwrap()).unwrap();
        let (a, b) = (0.3, 0.6);
        assert!(close(v, a * b * b + a * a * b - a * a * b * b));
    }

    #[test]
    fn boolean_product_factorizes() {
        let a = 0.3;
        let c = bernoulli_with_unit(a).unwrap();
        let o = StateOracle::Boolean(vec![c.clone().into(), c.into()]);
        let w = Word::parse("0:p 1:p 0:p").unwrap();
        assert!(close(o.moment(&w).unwrap(), a * a * a));
        let m3 = boolean_matrix_model(&[a, a]).unwrap();
        assert!(close(m3.moment(&Word::parse("p1 p2 p1").unwrap()).unwrap(), a * a * a));
        let same = Word::parse("0:p 0:p").unwrap();
        assert!(close(o.moment(&same).unwrap(), a));
    }

    #[test]
    fn boolean_model_centered_elements() {
        let bm = BooleanModel::new(&[0.5]).unwrap();
        let m = bm.model.poly_matrix(&bm.centered(1)).unwrap();
        let expected = real_matrix(2, &[0.0, 0.5, 0.5, 0.0]);
        assert!((m - expected).norm() < 1e-15);
        let bm = BooleanModel::new(&[0.3, 0.7]).unwrap();
        for i in 1..=2 {
            let a = bm.alphas[i - 1];
            let c = bm.centered(i);
            assert!(bm.oracle().phi(&c).unwrap().norm() < 1e-15);
            assert!(close(bm.oracle().phi(&c.mul(&c)).unwrap(), a * (1.0 - a)));
        }
        assert!(matches!(BooleanModel::new(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_sign_is_invisible_to_moments() {
        let a: f64 = 0.3;
        let b = (a * (1.0 - a)).sqrt();
        let plus = MatrixModel::bernoulli(a).unwrap();
        let minus = MatrixModel::new(
            [("p".to_string(), real_matrix(2, &[a, -b, -b, 1.0 - a]))],
            None,
        )
        .unwrap();
        for n in 1..8 {
            let w = Word(vec![Letter::new("p"); n]);
            assert!((plus.moment(&w).unwrap() - minus.moment(&w).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn adjoint_letters() {
        let mut a = real_matrix(2, &[0.0, 1.0, 0.5, 0.0]);
        a[(1, 1)] = C64::new(0.0, 0.7);
        let m = MatrixModel::new([("a".to_string(), a)], None).unwrap();
        assert!(close(m.moment(&Word::parse("a a*").unwrap()).unwrap(), 1.0));
        for s in ["a", "a a*", "a a a*", "a* a a a*", "a a* a* a a"] {
            let w = Word::parse(s).unwrap();
            let lhs = m.moment(&w.star()).unwrap();
            assert!((lhs - m.moment(&w).unwrap().conj()).norm() < 1e-14, "{s}");
        }
        let gens = m.generators();
        assert_eq!(gens[0].adjoint_of.as_deref(), Some("a*"));
    }

    #[test]
    fn word_parsing() {
        let w = Word::parse("0:p 1.2:q r*").unwrap();
        assert_eq!(w.0[0], Letter::in_component("p", &[0]));
        assert_eq!(w.0[1], Letter::in_component("q", &[1, 2]));
        assert_eq!(w.0[2].name, "r*");
        assert_eq!(w.to_string(), "0:p 1.2:q r*");
        assert!(Word::parse("x:p").is_err());
    }
}
