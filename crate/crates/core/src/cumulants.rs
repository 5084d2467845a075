//! Free, Boolean and conditionally free cumulants.
//!
//! Arguments are opaque [`Handle`]s interpreted by a [`MomentFunctional`]. Cumulants
//! are computed from the first-block recursions over sub-tuples, memoized by bitmask.
//! The inverse direction ([`moments_from_cumulants`]) sums explicitly over partitions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::partitions::{check_size, enumerate, PartitionClass};

/// An opaque argument of a moment functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle(pub usize);

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// `h` repeated `n` times.
pub fn repeated(h: Handle, n: usize) -> Vec<Handle> {
    vec![h; n]
}

fn fmt_tuple(args: &[Handle]) -> String {
    let parts: Vec<String> = args.iter().map(Handle::to_string).collect();
    format!("({})", parts.join(", "))
}

/// A multilinear moment functional `φ[a₁, …, aₙ]` with `φ[] = 1`.
pub trait MomentFunctional {
    fn moment(&self, args: &[Handle]) -> Result<C64>;
}

impl<M: MomentFunctional + ?Sized> MomentFunctional for &M {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        (**self).moment(args)
    }
}

/// Wraps a closure as a moment functional. The empty tuple always evaluates to 1.
pub struct FnMoments<F>(pub F);

impl<F: Fn(&[Handle]) -> Result<C64>> MomentFunctional for FnMoments<F> {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        if args.is_empty() {
            return Ok(C64::new(1.0, 0.0));
        }
        (self.0)(args)
    }
}

/// Memoizes another functional by argument tuple.
pub struct Cached<M> {
    inner: M,
    cache: Mutex<HashMap<Vec<Handle>, C64>>,
}

impl<M: MomentFunctional> Cached<M> {
    pub fn new(inner: M) -> Self {
        Cached { inner, cache: Mutex::new(HashMap::new()) }
    }
}

impl<M: MomentFunctional> MomentFunctional for Cached<M> {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        if let Some(v) = self.cache.lock().unwrap().get(args) {
            return Ok(*v);
        }
        let v = self.inner.moment(args)?;
        self.cache.lock().unwrap().insert(args.to_vec(), v);
        Ok(v)
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

fn strictly_between(a: usize, b: usize) -> u32 {
    let below_b = (1u32 << b) - 1;
    let upto_a = (1u32 << (a + 1)) - 1;
    below_b & !upto_a
}

fn above(a: usize) -> u32 {
    if a >= 31 {
        0
    } else {
        !((1u32 << (a + 1)) - 1)
    }
}

/// Moments of sub-tuples selected by a bitmask, with cached free and Boolean cumulants.
pub struct MaskMoments<F> {
    f: F,
    moments: HashMap<u32, C64>,
    free: HashMap<u32, C64>,
    boolean: HashMap<u32, C64>,
}

impl<F: FnMut(u32) -> Result<C64>> MaskMoments<F> {
    pub fn new(f: F) -> Self {
        MaskMoments { f, moments: HashMap::new(), free: HashMap::new(), boolean: HashMap::new() }
    }

    pub fn moment(&mut self, mask: u32) -> Result<C64> {
        if mask == 0 {
            return Ok(C64::new(1.0, 0.0));
        }
        if let Some(v) = self.moments.get(&mask) {
            return Ok(*v);
        }
        let v = (self.f)(mask)?;
        self.moments.insert(mask, v);
        Ok(v)
    }
}

// Σ over blocks V ∋ min(S), V ⊆ S, of weight(V) · Π_{gaps} gap(g) · tail(rest after V),
// excluding V = S; returns the complement that the full-block cumulant must supply.
fn first_block_sum(
    mask: u32,
    mut weight: impl FnMut(u32) -> Result<C64>,
    mut gap: impl FnMut(u32) -> Result<C64>,
    mut tail: impl FnMut(u32) -> Result<C64>,
) -> Result<C64> {
    let low = mask & mask.wrapping_neg();
    let rest = mask ^ low;
    let mut total = C64::new(0.0, 0.0);
    let mut sub = rest;
    loop {
        let block = low | sub;
        if block != mask {
            let w = weight(block)?;
            if w != C64::new(0.0, 0.0) {
                let positions: Vec<usize> = bits(block).collect();
                let mut term = w;
                for pair in positions.windows(2) {
                    let g = mask & strictly_between(pair[0], pair[1]);
                    if g != 0 {
                        term *= gap(g)?;
                    }
                }
                let t = mask & above(positions[positions.len() - 1]);
                if t != 0 {
                    term *= tail(t)?;
                }
                total += term;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    Ok(total)
}

/// Free cumulant of the sub-tuple selected by `mask`.
pub fn free_cumulant_of_mask<F: FnMut(u32) -> Result<C64>>(
    m: &mut MaskMoments<F>,
    mask: u32,
) -> Result<C64> {
    if mask == 0 {
        return Err(Error::Argument("cumulant of the empty tuple".into()));
    }
    if let Some(v) = m.free.get(&mask) {
        return Ok(*v);
    }
    let full = m.moment(mask)?;
    let m_cell = std::cell::RefCell::new(&mut *m);
    let others = first_block_sum(
        mask,
        |b| free_cumulant_of_mask(&mut m_cell.borrow_mut(), b),
        |g| m_cell.borrow_mut().moment(g),
        |t| m_cell.borrow_mut().moment(t),
    )?;
    let v = full - others;
    m.free.insert(mask, v);
    Ok(v)
}

/// Boolean cumulant of the sub-tuple selected by `mask`.
pub fn boolean_cumulant_of_mask<F: FnMut(u32) -> Result<C64>>(
    m: &mut MaskMoments<F>,
    mask: u32,
) -> Result<C64> {
    if mask == 0 {
        return Err(Error::Argument("cumulant of the empty tuple".into()));
    }
    if let Some(v) = m.boolean.get(&mask) {
        return Ok(*v);
    }
    let positions: Vec<usize> = bits(mask).collect();
    let mut v = m.moment(mask)?;
    let mut prefix = 0u32;
    for &p in &positions[..positions.len() - 1] {
        prefix |= 1 << p;
        let b = boolean_cumulant_of_mask(m, prefix)?;
        v -= b * m.moment(mask & !prefix)?;
    }
    m.boolean.insert(mask, v);
    Ok(v)
}

/// Conditionally free cumulant `R^{φ,ψ}` of the sub-tuple selected by `mask`.
pub fn cfree_cumulant_of_mask<F, G>(
    phi: &mut MaskMoments<F>,
    psi: &mut MaskMoments<G>,
    cache: &mut HashMap<u32, C64>,
    mask: u32,
) -> Result<C64>
where
    F: FnMut(u32) -> Result<C64>,
    G: FnMut(u32) -> Result<C64>,
{
    if mask == 0 {
        return Err(Error::Argument("cumulant of the empty tuple".into()));
    }
    if let Some(v) = cache.get(&mask) {
        return Ok(*v);
    }
    let full = phi.moment(mask)?;
    let state = std::cell::RefCell::new((&mut *phi, &mut *psi, &mut *cache));
    let others = first_block_sum(
        mask,
        |b| {
            let mut s = state.borrow_mut();
            let (p, q, c) = &mut *s;
            cfree_cumulant_of_mask(p, q, c, b)
        },
        |g| state.borrow_mut().1.moment(g),
        |t| state.borrow_mut().0.moment(t),
    )?;
    let v = full - others;
    cache.insert(mask, v);
    Ok(v)
}

fn select(args: &[Handle], mask: u32) -> Vec<Handle> {
    bits(mask).map(|i| args[i]).collect()
}

fn full_mask(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        u32::MAX >> (32 - n)
    }
}

fn mask_moments<'a, M: MomentFunctional + ?Sized>(
    m: &'a M,
    args: &'a [Handle],
) -> MaskMoments<impl FnMut(u32) -> Result<C64> + 'a> {
    MaskMoments::new(move |mask| m.moment(&select(args, mask)))
}

fn check_args(args: &[Handle]) -> Result<()> {
    if args.is_empty() {
        return Err(Error::Argument("cumulants need at least one argument".into()));
    }
    check_size("cumulant order", args.len())
}

/// `R^φ[a₁, …, aₙ]`.
pub fn free_cumulants<M: MomentFunctional + ?Sized>(m: &M, args: &[Handle]) -> Result<C64> {
    check_args(args)?;
    let mut mm = mask_moments(m, args);
    free_cumulant_of_mask(&mut mm, full_mask(args.len()))
}

/// `B^φ[a₁, …, aₙ]`.
pub fn boolean_cumulants<M: MomentFunctional + ?Sized>(m: &M, args: &[Handle]) -> Result<C64> {
    check_args(args)?;
    let mut mm = mask_moments(m, args);
    boolean_cumulant_of_mask(&mut mm, full_mask(args.len()))
}

/// `R^{φ,ψ}[a₁, …, aₙ]`: outer blocks carry `R^{φ,ψ}`, inner blocks `R^ψ`.
pub fn cfree_cumulants<M, N>(phi: &M, psi: &N, args: &[Handle]) -> Result<C64>
where
    M: MomentFunctional + ?Sized,
    N: MomentFunctional + ?Sized,
{
    check_args(args)?;
    let mut mp = mask_moments(phi, args);
    let mut mq = mask_moments(psi, args);
    cfree_cumulant_of_mask(&mut mp, &mut mq, &mut HashMap::new(), full_mask(args.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Free,
    Boolean,
    CFree,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Free => "free",
            Family::Boolean => "boolean",
            Family::CFree => "cfree",
        })
    }
}

/// Cumulants of one family for every nonempty sub-tuple of some root tuples.
///
/// For [`Family::CFree`] the table also carries the free cumulants of the second
/// state, which weigh the inner blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable {
    pub family: Family,
    pub roots: Vec<Vec<Handle>>,
    pub values: BTreeMap<Vec<Handle>, C64>,
    pub psi: Option<BTreeMap<Vec<Handle>, C64>>,
}

fn all_masks(
    roots: &[Vec<Handle>],
    mut per_root: impl FnMut(&[Handle], &mut dyn FnMut(u32, C64)) -> Result<()>,
) -> Result<BTreeMap<Vec<Handle>, C64>> {
    let mut values = BTreeMap::new();
    for root in roots {
        check_args(root)?;
        per_root(root, &mut |mask, v| {
            values.insert(select(root, mask), v);
        })?;
    }
    Ok(values)
}

impl CumulantTable {
    /// Free or Boolean cumulants of `m` on all sub-tuples of `roots`.
    pub fn compute<M: MomentFunctional + ?Sized>(
        family: Family,
        m: &M,
        roots: &[Vec<Handle>],
    ) -> Result<Self> {
        let values = all_masks(roots, |root, put| {
            let mut mm = mask_moments(m, root);
            for mask in 1..=full_mask(root.len()) {
                let v = match family {
                    Family::Free => free_cumulant_of_mask(&mut mm, mask)?,
                    Family::Boolean => boolean_cumulant_of_mask(&mut mm, mask)?,
                    Family::CFree => {
                        return Err(Error::Argument(
                            "conditionally free tables need two states".into(),
                        ))
                    }
                };
                put(mask, v);
            }
            Ok(())
        })?;
        Ok(CumulantTable { family, roots: roots.to_vec(), values, psi: None })
    }

    /// `R^{φ,ψ}` together with `R^ψ` on all sub-tuples of `roots`.
    pub fn compute_cfree<M, N>(phi: &M, psi: &N, roots: &[Vec<Handle>]) -> Result<Self>
    where
        M: MomentFunctional + ?Sized,
        N: MomentFunctional + ?Sized,
    {
        let values = all_masks(roots, |root, put| {
            let mut mp = mask_moments(phi, root);
            let mut mq = mask_moments(psi, root);
            let mut cache = HashMap::new();
            for mask in 1..=full_mask(root.len()) {
                put(mask, cfree_cumulant_of_mask(&mut mp, &mut mq, &mut cache, mask)?);
            }
            Ok(())
        })?;
        let psi_table = CumulantTable::compute(Family::Free, psi, roots)?;
        Ok(CumulantTable {
            family: Family::CFree,
            roots: roots.to_vec(),
            values,
            psi: Some(psi_table.values),
        })
    }

    pub fn get(&self, args: &[Handle]) -> Result<C64> {
        self.values
            .get(args)
            .copied()
            .ok_or_else(|| Error::IncompleteTable(fmt_tuple(args)))
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> CumulantTable {
        let mut out = self.clone();
        for v in out.values.values_mut() {
            *v = f(*v);
        }
        out
    }

    /// The table of another family describing the same moments.
    pub fn to_family(&self, family: Family) -> Result<CumulantTable> {
        if family == self.family {
            return Ok(self.clone());
        }
        let moments = Cached::new(TableMoments(self));
        CumulantTable::compute(family, &moments, &self.roots)
    }
}

/// Moments encoded by a cumulant table.
pub struct TableMoments<'a>(pub &'a CumulantTable);

impl MomentFunctional for TableMoments<'_> {
    fn moment(&self, args: &[Handle]) -> Result<C64> {
        moments_from_cumulants(self.0, args)
    }
}

/// Resums a cumulant table over the matching partition class.
pub fn moments_from_cumulants(table: &CumulantTable, args: &[Handle]) -> Result<C64> {
    let n = args.len();
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let class = match table.family {
        Family::Boolean => PartitionClass::Interval,
        Family::Free | Family::CFree => PartitionClass::Noncrossing,
    };
    let lookup = |map: &BTreeMap<Vec<Handle>, C64>, block: &[usize]| -> Result<C64> {
        let key: Vec<Handle> = block.iter().map(|&i| args[i]).collect();
        map.get(&key).copied().ok_or_else(|| Error::IncompleteTable(fmt_tuple(&key)))
    };
    let mut total = C64::new(0.0, 0.0);
    for p in enumerate(n, class)? {
        let mut term = C64::new(1.0, 0.0);
        match table.family {
            Family::CFree => {
                let psi = table.psi.as_ref().ok_or_else(|| {
                    Error::IncompleteTable("second-state cumulants missing".into())
                })?;
                for (block, kind) in p.blocks().iter().zip(p.classify_blocks()?) {
                    term *= match kind {
                        crate::partitions::BlockKind::Outer => lookup(&table.values, block)?,
                        crate::partitions::BlockKind::Inner => lookup(psi, block)?,
                    };
                }
            }
            _ => {
                for block in p.blocks() {
                    term *= lookup(&table.values, block)?;
                }
            }
        }
        total += term;
    }
    Ok(total)
}

/// Multiplies every free cumulant by `s`, the cumulant form of `μ^{⊞s}`.
pub fn scale_free_cumulants(table: &CumulantTable, s: f64) -> Result<CumulantTable> {
    if table.family != Family::Free {
        return Err(Error::Argument(format!("expected a free table, got {}", table.family)));
    }
    if s.is_nan() || s < 0.0 {
        return Err(Error::Domain(format!("scale {s} must be nonnegative")));
    }
    Ok(table.map_values(|v| v * s))
}

/// Multiplies every Boolean cumulant by `s`, the cumulant form of `μ^{⊎s}`.
pub fn scale_boolean_cumulants(table: &CumulantTable, s: f64) -> Result<CumulantTable> {
    if table.family != Family::Boolean {
        return Err(Error::Argument(format!("expected a Boolean table, got {}", table.family)));
    }
    if s.is_nan() || s < 0.0 {
        return Err(Error::Domain(format!("scale {s} must be nonnegative")));
    }
    Ok(table.map_values(|v| v * s))
}

/// `B_t(μ) = (μ^{⊞(1+t)})^{⊎ 1/(1+t)}`, returned as a free table.
pub fn belinschi_nica(table: &CumulantTable, t: f64) -> Result<CumulantTable> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("Belinschi-Nica parameter {t} must be nonnegative")));
    }
    let free = table.to_family(Family::Free)?;
    let powered = scale_free_cumulants(&free, 1.0 + t)?;
    let boolean = powered.to_family(Family::Boolean)?;
    scale_boolean_cumulants(&boolean, 1.0 / (1.0 + t))?.to_family(Family::Free)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tab(family: Family, entries: &[(usize, C64)], n: usize) -> CumulantTable {
        let h = Handle(0);
        let mut values = BTreeMap::new();
        for k in 1..=n {
            let v = entries.iter().find(|e| e.0 == k).map(|e| e.1).unwrap_or_default();
            values.insert(repeated(h, k), v);
        }
        CumulantTable { family, roots: vec![repeated(h, n)], values, psi: None }
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    // Moments of a centered Bernoulli(α) variable: m_k = α(1-α)[(1-α)^{k-1} + (-1)^k α^{k-1}].
    fn bernoulli_moments(alpha: f64) -> impl MomentFunctional {
        FnMoments(move |args: &[Handle]| {
            let k = args.len() as i32;
            let v = (1.0 - alpha) * (-alpha).powi(k) + alpha * (1.0 - alpha).powi(k);
            Ok(c(v))
        })
    }

    #[test]
    fn low_order_free_cumulants() {
        let m = FnMoments(|args: &[Handle]| {
            Ok(c(args.iter().map(|h| (h.0 + 1) as f64).product::<f64>() + args.len() as f64))
        });
        let (a, b) = (Handle(0), Handle(1));
        assert_eq!(free_cumulants(&m, &[a]).unwrap(), m.moment(&[a]).unwrap());
        let r2 = free_cumulants(&m, &[a, b]).unwrap();
        let expect = m.moment(&[a, b]).unwrap() - m.moment(&[a]).unwrap() * m.moment(&[b]).unwrap();
        assert!((r2 - expect).norm() < 1e-14);
    }

    #[test]
    fn bernoulli_variance_is_second_cumulant() {
        let m = bernoulli_moments(0.3);
        let h = repeated(Handle(0), 2);
        assert!((free_cumulants(&m, &h).unwrap() - c(0.21)).norm() < 1e-14);
        assert!((boolean_cumulants(&m, &h).unwrap() - c(0.21)).norm() < 1e-14);
        let h3 = repeated(Handle(0), 3);
        assert!((boolean_cumulants(&m, &h3).unwrap() - c(0.084)).norm() < 1e-14);
    }

    #[test]
    fn semicircle_and_bernoulli_tables() {
        let free = tab(Family::Free, &[(2, c(1.0))], 4);
        let args = repeated(Handle(0), 4);
        assert!((moments_from_cumulants(&free, &args).unwrap() - c(2.0)).norm() < 1e-14);
        let boolean = tab(Family::Boolean, &[(2, c(1.0))], 4);
        assert!((moments_from_cumulants(&boolean, &args).unwrap() - c(1.0)).norm() < 1e-14);
        assert_eq!(moments_from_cumulants(&free, &[]).unwrap(), c(1.0));
        let short = tab(Family::Free, &[(2, c(1.0))], 2);
        assert!(matches!(moments_from_cumulants(&short, &args), Err(Error::IncompleteTable(_))));
    }

    #[test]
    fn scaling() {
        let m = bernoulli_moments(0.5);
        let t = CumulantTable::compute(Family::Free, &m, &[repeated(Handle(0), 4)]).unwrap();
        assert_eq!(scale_free_cumulants(&t, 1.0).unwrap(), t);
        let s2 = scale_free_cumulants(&t, 2.0).unwrap();
        assert!((s2.get(&repeated(Handle(0), 2)).unwrap() - c(0.5)).norm() < 1e-14);
        let s0 = scale_free_cumulants(&t, 0.0).unwrap();
        for k in 1..=4 {
            assert_eq!(moments_from_cumulants(&s0, &repeated(Handle(0), k)).unwrap(), c(0.0));
        }
        assert!(scale_boolean_cumulants(&t, 2.0).is_err());
    }

    #[test]
    fn cfree_with_equal_states_is_free() {
        let m = bernoulli_moments(0.3);
        for n in 1..=6 {
            let args = repeated(Handle(0), n);
            let r = free_cumulants(&m, &args).unwrap();
            let rc = cfree_cumulants(&m, &m, &args).unwrap();
            assert!((r - rc).norm() < 1e-13, "n = {n}");
        }
        assert_eq!(cfree_cumulants(&m, &m, &[Handle(0)]).unwrap(), m.moment(&[Handle(0)]).unwrap());
    }

    #[test]
    fn belinschi_nica_at_zero_is_identity() {
        let m = bernoulli_moments(0.3);
        let t = CumulantTable::compute(Family::Free, &m, &[repeated(Handle(0), 5)]).unwrap();
        let b = belinschi_nica(&t, 0.0).unwrap();
        for (k, v) in &t.values {
            assert!((b.values[k] - v).norm() < 1e-13);
        }
    }

    #[test]
    fn size_cap() {
        let m = bernoulli_moments(0.3);
        assert!(matches!(free_cumulants(&m, &repeated(Handle(0), 15)), Err(Error::Size { .. })));
        assert!(free_cumulants(&m, &[]).is_err());
    }
}
