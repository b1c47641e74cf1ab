//! Alternators and the combinatorial part of exterior algebra: wedge signs by
//! permutation parity, and the Hodge star on an orthonormal, positively
//! oriented frame.
//!
//! An *alternator* is a strictly increasing tuple of coordinate indices
//! `0 ≤ a_1 < … < a_k < d`, standing for the basis k-form
//! `dx^{a_1} ∧ … ∧ dx^{a_k}`. The global order on alternators of fixed
//! degree is lexicographic, which fixes the column layout of every
//! coefficient matrix in the crate.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Strictly increasing tuple of coordinate indices; a basis k-form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alternator(Vec<usize>);

impl Alternator {
    /// Builds an alternator, checking strict monotonicity.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDegree(format!(
                "alternator indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(Alternator(indices))
    }

    /// The empty alternator (the basis 0-form `1`).
    pub fn empty() -> Self {
        Alternator(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Indices of `0..dim` not present in `self`, in increasing order.
    pub fn complement(&self, dim: usize) -> Alternator {
        Alternator((0..dim).filter(|i| !self.contains(*i)).collect())
    }

    /// Alternator with the entry at position `pos` removed.
    pub fn without_position(&self, pos: usize) -> Alternator {
        let mut v = self.0.clone();
        v.remove(pos);
        Alternator(v)
    }
}

/// All alternators of degree `k` over `dim` coordinates, lexicographic.
pub fn enumerate_alternators(dim: usize, k: usize) -> Result<Vec<Alternator>> {
    if k > dim {
        return Err(Error::InvalidDegree(format!(
            "form degree {k} exceeds coordinate dimension {dim}"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(Alternator(current.clone()));
        if k == 0 {
            break;
        }
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] != i + dim - k {
                break;
            }
            if i == 0 {
                return Ok(out);
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Number of inversions between `a` and `b`: pairs `(x ∈ a, y ∈ b)` with
/// `x > y`. `None` if the tuples share an index.
fn inversions(a: &[usize], b: &[usize]) -> Option<usize> {
    let mut inv = 0usize;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inv += 1;
            }
        }
    }
    Some(inv)
}

/// Sign and merged alternator of `dx^a ∧ dx^b`; `None` when the wedge
/// vanishes because the tuples overlap.
pub fn wedge_sign(a: &Alternator, b: &Alternator) -> Option<(i8, Alternator)> {
    let inv = inversions(a.indices(), b.indices())?;
    let mut merged: Vec<usize> = a.indices().iter().chain(b.indices()).copied().collect();
    merged.sort_unstable();
    let sign = if inv % 2 == 0 { 1 } else { -1 };
    Some((sign, Alternator(merged)))
}

/// Hodge star of the basis form `dx^a` on an orthonormal positively oriented
/// frame of dimension `dim`: returns `(sign, complement)` such that
/// `⋆ dx^a = sign · dx^complement`, fixed by `dx^a ∧ ⋆dx^a = vol`.
pub fn hodge_star(a: &Alternator, dim: usize) -> Result<(i8, Alternator)> {
    if a.indices().last().is_some_and(|&m| m >= dim) {
        return Err(Error::DimensionMismatch(format!(
            "alternator {:?} does not fit in dimension {dim}",
            a.indices()
        )));
    }
    let comp = a.complement(dim);
    let inv = inversions(a.indices(), comp.indices()).expect("complement is disjoint");
    let sign = if inv % 2 == 0 { 1 } else { -1 };
    Ok((sign, comp))
}

/// Fixed enumeration of all alternators of one degree, with reverse lookup.
#[derive(Debug, Clone)]
pub struct AlternatorSet {
    pub dim: usize,
    pub degree: usize,
    pub list: Vec<Alternator>,
    index: HashMap<Alternator, usize>,
}

impl AlternatorSet {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        let list = enumerate_alternators(dim, degree)?;
        let index = list.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Ok(AlternatorSet { dim, degree, list, index })
    }

    /// Cached shared instance; panics if `degree > dim` (callers validate).
    pub fn get(dim: usize, degree: usize) -> std::sync::Arc<AlternatorSet> {
        use std::collections::HashMap as Map;
        use std::sync::{Arc, Mutex, OnceLock};
        static CACHE: OnceLock<Mutex<Map<(usize, usize), Arc<AlternatorSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Map::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((dim, degree))
            .or_insert_with(|| Arc::new(AlternatorSet::new(dim, degree).expect("degree ≤ dim")))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn position(&self, a: &Alternator) -> Option<usize> {
        self.index.get(a).copied()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// dim Λ^k(R^d) = C(d, k); used for sanity checks.
pub fn alternator_count(dim: usize, k: usize) -> usize {
    binomial(dim, k)
}
