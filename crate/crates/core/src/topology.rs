//! Chain complexes, Betti numbers, and spanning sets of interior simplices.
//!
//! Both the simplicial submesh and the polytopal cell structure of a mesh
//! form integer chain complexes. This module exposes their incidence
//! matrices, homology ranks, and — the combinatorial backbone of the cochain
//! lift — per-cell spanning sets: for each cell and degree `k`, a maximal
//! family of interior `k`-simplices `F_i` together with boundary chains
//! `z_i = ∂w_i` that carry unit coefficient on `F_i`, vanish on every other
//! selected simplex, and are supported on simplices processed before `F_i`
//! plus the boundary submesh.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{pinv_solve, rank};
use crate::mesh::{Cell, Mesh};
use crate::RANK_TOL;

/// Sparse integer incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    nrows: usize,
    ncols: usize,
    /// (row, col, value), coordinate order, no duplicates, no zeros.
    entries: Vec<(usize, usize, i64)>,
}

impl IncidenceMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, raw: Vec<(usize, usize, i64)>) -> Self {
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for (r, c, v) in raw {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            *acc.entry((r, c)).or_insert(0) += v;
        }
        let mut entries: Vec<(usize, usize, i64)> =
            acc.into_iter().filter(|&(_, v)| v != 0).map(|((r, c), v)| (r, c, v)).collect();
        entries.sort_unstable();
        IncidenceMatrix { nrows, ncols, entries }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        IncidenceMatrix { nrows, ncols, entries: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entries(&self) -> &[(usize, usize, i64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v as f64;
        }
        m
    }

    pub fn transpose(&self) -> IncidenceMatrix {
        let mut entries: Vec<(usize, usize, i64)> =
            self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_unstable();
        IncidenceMatrix { nrows: self.ncols, ncols: self.nrows, entries }
    }

    /// Exact integer product `self · other`.
    pub fn compose(&self, other: &IncidenceMatrix) -> IncidenceMatrix {
        assert_eq!(self.ncols, other.nrows, "composition shape mismatch");
        let mut by_row: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
        for &(r, c, v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut raw = Vec::new();
        for &(r, mid, v) in &self.entries {
            if let Some(row) = by_row.get(&mid) {
                for &(c, w) in row {
                    raw.push((r, c, v * w));
                }
            }
        }
        IncidenceMatrix::from_triplets(self.nrows, other.ncols, raw)
    }

    /// Apply to an integer chain (dense vector of length `ncols`).
    pub fn apply(&self, chain: &DVector<f64>) -> DVector<f64> {
        assert_eq!(chain.len(), self.ncols);
        let mut out = DVector::zeros(self.nrows);
        for &(r, c, v) in &self.entries {
            out[r] += v as f64 * chain[c];
        }
        out
    }
}

/// A finite chain complex: element counts per dimension and boundary maps
/// `boundary[k] : C_k → C_{k−1}` (`boundary[0]` has zero rows).
#[derive(Debug, Clone)]
pub struct Complex {
    pub counts: Vec<usize>,
    pub boundary: Vec<IncidenceMatrix>,
}

impl Complex {
    pub fn dim(&self) -> usize {
        self.counts.len() - 1
    }

    /// Real Betti numbers `b_k = dim ker ∂_k − rank ∂_{k+1}`.
    pub fn betti(&self) -> Vec<usize> {
        let ranks: Vec<usize> =
            self.boundary.iter().map(|b| rank(&b.to_dense(), RANK_TOL)).collect();
        (0..self.counts.len())
            .map(|k| {
                let kernel = self.counts[k] - ranks[k];
                let image = ranks.get(k + 1).copied().unwrap_or(0);
                kernel - image
            })
            .collect()
    }

    /// The composition of consecutive boundary maps, exactly over the
    /// integers; all must be zero for a valid complex.
    pub fn boundary_squares(&self) -> Vec<IncidenceMatrix> {
        (2..self.counts.len()).map(|k| self.boundary[k - 1].compose(&self.boundary[k])).collect()
    }
}

/// The polytopal chain complex of a mesh (cells with incidence signs).
pub fn polytopal_complex(mesh: &Mesh) -> Complex {
    let n = mesh.dim();
    let counts: Vec<usize> = (0..=n).map(|k| mesh.cell_count(k)).collect();
    let mut boundary = vec![IncidenceMatrix::zeros(0, counts[0])];
    for k in 1..=n {
        let mut raw = Vec::new();
        for cell in mesh.cells(k) {
            for &(b, s) in &cell.boundary {
                raw.push((b, cell.id, i64::from(s)));
            }
        }
        boundary.push(IncidenceMatrix::from_triplets(counts[k - 1], counts[k], raw));
    }
    Complex { counts, boundary }
}

/// The simplicial chain complex of a mesh's submesh.
pub fn simplicial_complex(mesh: &Mesh) -> Complex {
    let n = mesh.dim();
    let counts: Vec<usize> = (0..=n).map(|k| mesh.simplex_count(k)).collect();
    let mut boundary = vec![IncidenceMatrix::zeros(0, counts[0])];
    for k in 1..=n {
        let mut raw = Vec::new();
        for s in 0..counts[k] {
            for &(face, sign) in mesh.simplex_boundary(k, s) {
                raw.push((face, s, i64::from(sign)));
            }
        }
        boundary.push(IncidenceMatrix::from_triplets(counts[k - 1], counts[k], raw));
    }
    Complex { counts, boundary }
}

/// Chain complex of a sorted family of simplex id lists per dimension. The
/// family must be closed under taking faces.
pub fn subset_complex(mesh: &Mesh, lists: &[Vec<usize>]) -> Complex {
    let counts: Vec<usize> = lists.iter().map(Vec::len).collect();
    let mut boundary = vec![IncidenceMatrix::zeros(0, counts[0])];
    for k in 1..lists.len() {
        let mut raw = Vec::new();
        for (col, &s) in lists[k].iter().enumerate() {
            for &(face, sign) in mesh.simplex_boundary(k, s) {
                let row = lists[k - 1]
                    .binary_search(&face)
                    .expect("face family is closed under boundaries");
                raw.push((row, col, i64::from(sign)));
            }
        }
        boundary.push(IncidenceMatrix::from_triplets(counts[k - 1], counts[k], raw));
    }
    Complex { counts, boundary }
}

/// Simplicial complex of a cell's closure.
pub fn closure_complex(mesh: &Mesh, cell: &Cell) -> Complex {
    subset_complex(mesh, &cell.closure_simplices)
}

/// Simplicial complex of a cell's boundary submesh.
pub fn boundary_complex(mesh: &Mesh, cell: &Cell) -> Complex {
    subset_complex(mesh, &cell.boundary_simplices)
}

/// Least-norm chain `w` with `∂w = target` for a dense boundary matrix.
pub fn boundary_preimage(boundary: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let (w, residual) = pinv_solve(boundary, target);
    let scale = target.norm().max(1.0);
    if residual > 1e-9 * scale {
        return Err(Error::NotABoundary { residual });
    }
    Ok(w)
}

/// Least-norm cochain `λ` with `δλ = target` for a dense coboundary matrix.
pub fn coboundary_preimage(
    coboundary: &DMatrix<f64>,
    target: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (w, residual) = pinv_solve(coboundary, target);
    let scale = target.norm().max(1.0);
    if residual > 1e-9 * scale {
        return Err(Error::NotACoboundary { residual });
    }
    Ok(w)
}

/// One selected interior simplex with its duality chain.
#[derive(Debug, Clone)]
pub struct SpanningElement {
    /// Global id of the selected interior `k`-simplex.
    pub simplex: usize,
    /// (k+1)-chain over the cell closure (local indices) with `∂w = z`.
    pub w: DVector<f64>,
    /// k-chain over the cell closure: unit coefficient on `simplex`, zero on
    /// every other selected simplex.
    pub z: DVector<f64>,
}

/// The spanning set of a cell at one degree.
#[derive(Debug, Clone)]
pub struct SpanningSet {
    pub degree: usize,
    pub elements: Vec<SpanningElement>,
    /// Interior k-simplices in processing order (ascending global id).
    pub processed: Vec<usize>,
    /// Which processed simplices were selected, parallel to `processed`.
    pub selected: Vec<bool>,
}

/// Selects a spanning set of interior `k`-simplices of `cell` (`k < dim`).
///
/// Interior simplices are visited in ascending global id. The allowed
/// support `V` starts as the boundary submesh and grows by every visited
/// simplex, selected or not. A simplex `F` is selected when some
/// (k+1)-chain `w` has `∂w` supported in `V ∪ {F}` with unit coefficient on
/// `F`; the stored chain additionally vanishes on all previously selected
/// simplices (later ones vanish automatically, lying outside the allowed
/// support), so `⟨F_i, z_j⟩ = δ_ij` over the whole family.
pub fn construct_spanning_set(mesh: &Mesh, cell: &Cell, k: usize) -> Result<SpanningSet> {
    if k >= cell.dim {
        return Err(Error::InvalidDegree(format!(
            "spanning set needs k < dim, got k = {k} on a {}-cell",
            cell.dim
        )));
    }
    let rows = &cell.closure_simplices[k];
    let cols = &cell.closure_simplices[k + 1];
    let local = |s: usize| rows.binary_search(&s).expect("closure simplex");
    // dense boundary matrix Δ_{k+1}(closure) → Δ_k(closure)
    let mut a = DMatrix::zeros(rows.len(), cols.len());
    for (c, &s) in cols.iter().enumerate() {
        for &(face, sign) in mesh.simplex_boundary(k + 1, s) {
            a[(local(face), c)] = f64::from(sign);
        }
    }
    let mut allowed = vec![false; rows.len()];
    for &s in &cell.boundary_simplices[k] {
        allowed[local(s)] = true;
    }
    let gather = |row_ids: &[usize]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(row_ids.len(), cols.len());
        for (i, &r) in row_ids.iter().enumerate() {
            m.set_row(i, &a.row(r));
        }
        m
    };
    let mut elements: Vec<SpanningElement> = Vec::new();
    let mut selected_rows: Vec<usize> = Vec::new();
    let mut processed = Vec::new();
    let mut selected_flags = Vec::new();
    for &f in &cell.interior_simplices[k] {
        let f_row = local(f);
        allowed[f_row] = true; // V grows on every visit
        // constraint rows: zero outside the allowed support AND zero on the
        // previously selected simplices (duality)
        let mut base_rows: Vec<usize> = (0..rows.len()).filter(|&r| !allowed[r]).collect();
        base_rows.extend(&selected_rows);
        let base = gather(&base_rows);
        base_rows.push(f_row);
        let full = gather(&base_rows);
        let feasible = rank(&full, RANK_TOL) == rank(&base, RANK_TOL) + 1;
        processed.push(f);
        selected_flags.push(feasible);
        if !feasible {
            continue;
        }
        // least-norm chain: all constraint rows zero, unit on F
        let mut rhs = DVector::zeros(full.nrows());
        rhs[full.nrows() - 1] = 1.0;
        let (w, residual) = pinv_solve(&full, &rhs);
        if residual > 1e-9 {
            return Err(Error::Solve(format!(
                "spanning chain for {k}-simplex {f} is infeasible (residual {residual:.3e})"
            )));
        }
        let z = &a * &w;
        selected_rows.push(f_row);
        elements.push(SpanningElement { simplex: f, w, z });
    }
    Ok(SpanningSet { degree: k, elements, processed, selected: selected_flags })
}

impl SpanningSet {
    /// `dim Z_k(closure) − dim Z_k(boundary)`: the size the spanning set
    /// must reach.
    pub fn expected_len(mesh: &Mesh, cell: &Cell, k: usize) -> usize {
        let cycles = |complex: &Complex| {
            let c = complex.counts.get(k).copied().unwrap_or(0);
            if c == 0 {
                return 0;
            }
            c - rank(&complex.boundary[k].to_dense(), RANK_TOL)
        };
        cycles(&closure_complex(mesh, cell)) - cycles(&boundary_complex(mesh, cell))
    }
}
