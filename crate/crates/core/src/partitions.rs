//! Set partitions of `{0, .., n-1}` and the classes the moment/cumulant sums run over.
//!
//! Elements are 0-based throughout the API; `Display` prints them 1-based, so the
//! canonical crossing partition is written `{1 3|2 4}`.
//!
//! Enumeration follows restricted-growth-string order: element `i` is assigned a
//! block label, trying existing blocks in order of their minima before opening a
//! new one. The resulting order is lexicographic in the label sequence and is the
//! same on every run.

use std::fmt;

use crate::error::{Error, Result};

/// Largest ground set the enumerators and cumulant recursions accept.
pub const MAX_PARTITION_SIZE: usize = 14;

/// Environment variable that can lower (never raise) [`MAX_PARTITION_SIZE`].
pub const PARTITION_CAP_ENV: &str = "FREEFOCK_PARTITION_CAP";

/// Effective size cap: [`MAX_PARTITION_SIZE`], lowered by `FREEFOCK_PARTITION_CAP` when set.
pub fn partition_cap() -> usize {
    std::env::var(PARTITION_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map_or(MAX_PARTITION_SIZE, |c| c.min(MAX_PARTITION_SIZE))
}

pub(crate) fn check_size(what: &'static str, n: usize) -> Result<()> {
    let limit = partition_cap();
    if n > limit {
        return Err(Error::Size { what, got: n, limit });
    }
    Ok(())
}

/// Partition classes used by the moment and cumulant formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionClass {
    All,
    Noncrossing,
    Interval,
    /// Noncrossing with a single outer block.
    IrreducibleNC,
    /// Noncrossing without singleton blocks.
    NoSingletonNC,
    IrreducibleNoSingletonNC,
}

impl PartitionClass {
    pub fn contains(self, p: &SetPartition) -> bool {
        match self {
            PartitionClass::All => true,
            PartitionClass::Noncrossing => p.is_noncrossing(),
            PartitionClass::Interval => p.is_interval(),
            PartitionClass::IrreducibleNC => p.is_noncrossing() && p.is_irreducible(),
            PartitionClass::NoSingletonNC => p.is_noncrossing() && !p.has_singleton(),
            PartitionClass::IrreducibleNoSingletonNC => {
                p.is_noncrossing() && p.is_irreducible() && !p.has_singleton()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Inner,
    Outer,
}

/// A partition of `{0, .., n-1}`: blocks sorted internally and by their minima.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition from arbitrary blocks, normalizing their order.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Argument("partition has an empty block".into()));
            }
            for &i in b {
                if i >= n {
                    return Err(Error::Argument(format!("element {i} outside ground set of size {n}")));
                }
                if seen[i] {
                    return Err(Error::Argument(format!("element {i} appears in two blocks")));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Argument(format!("element {missing} is not covered")));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(SetPartition { n, blocks })
    }

    /// Builds a partition from a restricted growth string (`labels[i]` = block of `i`).
    fn from_labels(labels: &[usize]) -> Self {
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l].push(i);
        }
        SetPartition { n: labels.len(), blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block label of every element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (l, b) in self.blocks.iter().enumerate() {
            for &i in b {
                labels[i] = l;
            }
        }
        labels
    }

    /// True iff there are no `i < j < k < l` with `i ~ k`, `j ~ l` in distinct blocks.
    pub fn is_noncrossing(&self) -> bool {
        // Two blocks cross iff one has an element strictly inside a gap of the other
        // and an element outside that gap's span.
        for (a, va) in self.blocks.iter().enumerate() {
            for vb in &self.blocks[a + 1..] {
                for w in va.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let inside = vb.iter().any(|&x| lo < x && x < hi);
                    let outside = vb.iter().any(|&x| x < lo || x > hi);
                    if inside && outside {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn is_interval(&self) -> bool {
        self.blocks.iter().all(|b| b[b.len() - 1] - b[0] + 1 == b.len())
    }

    pub fn has_singleton(&self) -> bool {
        self.blocks.iter().any(|b| b.len() == 1)
    }

    /// For a noncrossing partition: a single outer block, i.e. `0 ~ n-1`.
    pub fn is_irreducible(&self) -> bool {
        self.n > 0 && self.blocks[0].last() == Some(&(self.n - 1))
    }

    /// Labels each block Inner or Outer. Crossing partitions are rejected.
    pub fn classify_blocks(&self) -> Result<Vec<BlockKind>> {
        if !self.is_noncrossing() {
            return Err(Error::Crossing(self.to_string()));
        }
        Ok(self.block_kinds_unchecked())
    }

    // In a noncrossing partition V is nested under W iff min W < min V < max W.
    fn block_kinds_unchecked(&self) -> Vec<BlockKind> {
        self.blocks
            .iter()
            .map(|v| {
                let nested = self
                    .blocks
                    .iter()
                    .any(|w| !std::ptr::eq(v, w) && w[0] < v[0] && v[0] < w[w.len() - 1]);
                if nested {
                    BlockKind::Inner
                } else {
                    BlockKind::Outer
                }
            })
            .collect()
    }

    /// `(inner, outer)` block counts of a noncrossing partition.
    pub fn inner_outer_counts(&self) -> Result<(usize, usize)> {
        let kinds = self.classify_blocks()?;
        let inner = kinds.iter().filter(|k| **k == BlockKind::Inner).count();
        Ok((inner, kinds.len() - inner))
    }

    /// The unique outer block when the partition is noncrossing and irreducible.
    pub fn outer_block(&self) -> Option<&[usize]> {
        if self.is_noncrossing() && self.is_irreducible() {
            Some(&self.blocks[0])
        } else {
            None
        }
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, "|")?;
            }
            for (j, i) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", i + 1)?;
            }
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Growth {
    Any,
    Noncrossing,
    Interval,
}

impl PartitionClass {
    fn growth(self) -> Growth {
        match self {
            PartitionClass::All => Growth::Any,
            PartitionClass::Interval => Growth::Interval,
            _ => Growth::Noncrossing,
        }
    }
}

/// Every partition of `{0, .., n-1}` in `class`, each exactly once, in canonical order.
pub fn enumerate(n: usize, class: PartitionClass) -> Result<Vec<SetPartition>> {
    if n == 0 {
        return Err(Error::Size { what: "ground set size", got: 0, limit: partition_cap() });
    }
    check_size("ground set size", n)?;
    let mut out = Vec::new();
    let mut labels = Vec::with_capacity(n);
    let mut open = Vec::with_capacity(n);
    grow(n, class.growth(), &mut labels, &mut open, 0, &mut |labels| {
        let p = SetPartition::from_labels(labels);
        if class.contains(&p) {
            out.push(p);
        }
    });
    Ok(out)
}

// `open` is the stack of blocks that can still receive elements without creating a
// crossing; giving element i to block b closes every block opened after b.
fn grow(
    n: usize,
    growth: Growth,
    labels: &mut Vec<usize>,
    open: &mut Vec<usize>,
    blocks: usize,
    emit: &mut dyn FnMut(&[usize]),
) {
    if labels.len() == n {
        emit(labels);
        return;
    }
    let candidates: Vec<usize> = match growth {
        Growth::Any => (0..blocks).collect(),
        Growth::Interval => labels.last().copied().into_iter().collect(),
        Growth::Noncrossing => {
            let mut c = open.clone();
            c.sort_unstable();
            c
        }
    };
    for b in candidates {
        let saved = open.clone();
        if growth == Growth::Noncrossing {
            let pos = open.iter().position(|&x| x == b).expect("candidate is open");
            open.truncate(pos + 1);
        }
        labels.push(b);
        grow(n, growth, labels, open, blocks, emit);
        labels.pop();
        *open = saved;
    }
    labels.push(blocks);
    open.push(blocks);
    grow(n, growth, labels, open, blocks + 1, emit);
    open.pop();
    labels.pop();
}

/// The n-th Catalan number.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}
