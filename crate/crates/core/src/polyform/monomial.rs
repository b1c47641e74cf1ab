//! Graded-lexicographic monomial bases with a process-wide cache.
//!
//! `MonomialBasis::get(nvars, max_deg)` enumerates all exponent tuples of
//! total degree ≤ `max_deg` — degree 0 first, then each degree in ascending
//! lexicographic order — and memoizes the result so that coefficient layouts
//! agree across the whole process.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// All monomials in `nvars` variables up to a total degree, in a fixed order.
///
/// The constant monomial always sits at index 0.  Positions are stable for a
/// given `(nvars, max_deg)` pair, and a basis with a smaller degree bound is
/// always a prefix of the larger one.
#[derive(Debug)]
pub struct MonomialBasis {
    nvars: usize,
    max_deg: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl MonomialBasis {
    /// Shared, cached basis for `nvars` variables up to total degree `max_deg`.
    pub fn get(nvars: usize, max_deg: usize) -> Arc<MonomialBasis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((nvars, max_deg))
            .or_insert_with(|| Arc::new(MonomialBasis::build(nvars, max_deg)))
            .clone()
    }

    fn build(nvars: usize, max_deg: usize) -> Self {
        let mut exps = Vec::new();
        for deg in 0..=max_deg {
            let mut tuple = vec![0u8; nvars];
            emit_degree(nvars, deg, 0, &mut tuple, &mut exps);
            if nvars == 0 {
                // Only the empty tuple exists; higher degrees add nothing.
                break;
            }
        }
        let index = exps.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        MonomialBasis { nvars, max_deg, exps, index }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_deg(&self) -> usize {
        self.max_deg
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exps
    }

    pub fn exponent(&self, idx: usize) -> &[u8] {
        &self.exps[idx]
    }

    /// Index of an exponent tuple, if it lies within the degree bound.
    pub fn position(&self, exp: &[u8]) -> Option<usize> {
        self.index.get(exp).copied()
    }

    /// Total degree of the monomial at `idx`.
    pub fn degree_of(&self, idx: usize) -> usize {
        self.exps[idx].iter().map(|&e| e as usize).sum()
    }

    /// Number of monomials of total degree ≤ `deg` (a prefix of this basis).
    pub fn count_up_to(&self, deg: usize) -> usize {
        self.exps
            .iter()
            .take_while(|e| e.iter().map(|&x| x as usize).sum::<usize>() <= deg)
            .count()
    }
}

/// Append, in lexicographic order, all tuples with the given remaining degree
/// spread over coordinates `pos..`.
fn emit_degree(nvars: usize, remaining: usize, pos: usize, tuple: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == nvars {
        if remaining == 0 {
            out.push(tuple.clone());
        }
        return;
    }
    if pos + 1 == nvars {
        tuple[pos] = remaining as u8;
        out.push(tuple.clone());
        tuple[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        tuple[pos] = e as u8;
        emit_degree(nvars, remaining - e, pos + 1, tuple, out);
    }
    tuple[pos] = 0;
}
