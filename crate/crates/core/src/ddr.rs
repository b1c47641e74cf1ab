//! Discrete de Rham complex on a polytopal mesh.
//!
//! The degree-`k` space attaches to every cell `f` of dimension `d ≥ k` a
//! trimmed polynomial space of `(d−k)`-forms on the cell's chart; a component
//! stores the Hodge star of the trace of the continuous form it discretises.
//! Degrees of freedom are the trimmed coefficients, laid out cell by cell
//! ([`SpaceLayout`]).
//!
//! Two families of local reconstructions are built cell by cell from
//! integration by parts:
//!
//! * the **derivative** on a `d`-cell, a full polynomial `(d−k−1)`-form
//!   determined by pairing against all of `P_r`, with boundary terms supplied
//!   by the potentials one dimension down;
//! * the **potential**, a full polynomial `(d−k)`-form recovered from the
//!   derivative and the cell's own component, tested against a Koszul span
//!   whose exterior derivatives together with a complementary Koszul space
//!   fill out `P_r`.
//!
//! Composing the derivative with the trimmed projection on each cell yields
//! the global derivative matrices, which square to zero; interpolation of
//! smooth forms commutes with them for polynomial data up to degree `r`.
//! [`stokes_residual`] provides an independent integral identity check that
//! bypasses the reconstruction machinery entirely.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_spd, pinv_solve_mat};
use crate::mesh::geometry::Frame;
use crate::mesh::{Cell, CellRef, Mesh};
use crate::polyform::basis::trimmed_dim;
use crate::polyform::{FullBasis, PolyForm, SpanBasis, TrimmedBasis};

/// Chart of the ambient space: identity frame at the origin, unit scale.
pub fn ambient_frame(dim: usize) -> Frame {
    Frame { origin: DVector::zeros(dim), basis: DMatrix::identity(dim, dim), scale: 1.0 }
}

/// A polynomial form on the ambient chart with coefficients drawn uniformly
/// from `[-1, 1]`. The number of draws depends only on the shape parameters,
/// so one seeded generator produces the same field sequence on every mesh.
pub fn random_ambient_field<R: Rng>(
    dim: usize,
    degree: usize,
    poly_deg: usize,
    rng: &mut R,
) -> Result<PolyForm> {
    let basis = FullBasis::new(dim, degree, poly_deg, ambient_frame(dim).scale)?;
    let v = DVector::from_fn(basis.len(), |_, _| rng.gen_range(-1.0..=1.0));
    Ok(basis.form_from_vec(&v))
}

/// Offsets of the per-cell coefficient blocks of one discrete space inside a
/// single global vector. Blocks are ordered by cell dimension, then cell id.
#[derive(Debug, Clone)]
pub struct SpaceLayout {
    degree: usize,
    offsets: Vec<Vec<usize>>,
    lens: Vec<usize>,
    total: usize,
}

impl SpaceLayout {
    fn new(mesh: &Mesh, degree: usize, poly_deg: usize) -> SpaceLayout {
        let n = mesh.dim();
        let mut offsets = vec![Vec::new(); n + 1];
        let mut lens = vec![0usize; n + 1];
        let mut total = 0;
        for d in degree..=n {
            lens[d] = trimmed_dim(d, d - degree, poly_deg);
            offsets[d] = Vec::with_capacity(mesh.cell_count(d));
            for _ in 0..mesh.cell_count(d) {
                offsets[d].push(total);
                total += lens[d];
            }
        }
        SpaceLayout { degree, offsets, lens, total }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Length of the coefficient block of any cell of dimension `d`.
    pub fn component_len(&self, d: usize) -> usize {
        self.lens[d]
    }

    pub fn offset(&self, f: CellRef) -> usize {
        self.offsets[f.dim][f.id]
    }

    pub fn range(&self, f: CellRef) -> std::ops::Range<usize> {
        let start = self.offset(f);
        start..start + self.lens[f.dim]
    }
}

/// A local reconstruction: reads the global coefficients listed in `cols`
/// and returns full-basis coefficients on one cell.
#[derive(Debug, Clone)]
pub struct LocalOp {
    pub cols: Vec<usize>,
    pub mat: DMatrix<f64>,
}

impl LocalOp {
    /// Applies the operator to a global coefficient vector.
    pub fn apply(&self, global: &DVector<f64>) -> DVector<f64> {
        &self.mat * gather(global, &self.cols)
    }
}

/// Coefficients of one element of a discrete space.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

fn gather(global: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    DVector::from_fn(cols.len(), |i, _| global[cols[i]])
}

/// Column bookkeeping for the closure of one cell: the global indices of
/// every component block in the closure, and each index's local position.
struct ClosureIndex {
    cols: Vec<usize>,
    pos: HashMap<usize, usize>,
}

impl ClosureIndex {
    fn new(layout: &SpaceLayout, cell: &Cell) -> ClosureIndex {
        let mut cols = Vec::new();
        let mut pos = HashMap::new();
        for d in layout.degree()..=cell.dim {
            for &id in &cell.closure_cells[d] {
                for g in layout.range(CellRef { dim: d, id }) {
                    pos.insert(g, cols.len());
                    cols.push(g);
                }
            }
        }
        ClosureIndex { cols, pos }
    }

    fn scatter(&self, cols: &[usize]) -> Vec<usize> {
        cols.iter().map(|c| self.pos[c]).collect()
    }
}

/// The discrete complex of one mesh at one polynomial order: trimmed bases,
/// component layouts, local derivative and potential reconstructions, and
/// the global derivative matrices.
pub struct DdrSetup {
    dim: usize,
    poly_deg: usize,
    layouts: Vec<SpaceLayout>,
    /// `[d][id][l]`: trimmed basis of `l`-forms at order `poly_deg` on the cell.
    trimmed: Vec<Vec<Vec<TrimmedBasis>>>,
    /// `[k][d][id]`, nonempty for `d > k`: full-basis star of the local derivative.
    derivative_ops: Vec<Vec<Vec<LocalOp>>>,
    /// `[k][d][id]`, nonempty for `d ≥ k`: full-basis star of the local potential.
    potential_ops: Vec<Vec<Vec<LocalOp>>>,
    /// `[k]` for `k < dim`: global derivative, degree `k` to `k+1`.
    global_derivative: Vec<DMatrix<f64>>,
}

impl DdrSetup {
    pub fn new(mesh: &Mesh, poly_deg: usize) -> Result<DdrSetup> {
        let n = mesh.dim();
        let layouts: Vec<SpaceLayout> =
            (0..=n).map(|k| SpaceLayout::new(mesh, k, poly_deg)).collect();

        let mut trimmed: Vec<Vec<Vec<TrimmedBasis>>> = Vec::with_capacity(n + 1);
        for d in 0..=n {
            let mut per_dim = Vec::with_capacity(mesh.cell_count(d));
            for cell in mesh.cells(d) {
                let mut per_cell = Vec::with_capacity(d + 1);
                for l in 0..=d {
                    per_cell.push(TrimmedBasis::new(&cell.geometry, l, poly_deg)?);
                }
                per_dim.push(per_cell);
            }
            trimmed.push(per_dim);
        }

        let mut derivative_ops = Vec::with_capacity(n + 1);
        let mut potential_ops = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut der_k: Vec<Vec<LocalOp>> = vec![Vec::new(); n + 1];
            let mut pot_k: Vec<Vec<LocalOp>> = vec![Vec::new(); n + 1];
            for cell in mesh.cells(k) {
                let cols = layouts[k].range(CellRef { dim: k, id: cell.id }).collect();
                let mat = trimmed[k][cell.id][0].generator_coeffs().clone();
                pot_k[k].push(LocalOp { cols, mat });
            }
            for d in k + 1..=n {
                for cell in mesh.cells(d) {
                    let idx = ClosureIndex::new(&layouts[k], cell);
                    let dop =
                        derivative_op(mesh, &layouts[k], &trimmed, &pot_k, poly_deg, cell, &idx)?;
                    let pop = potential_op(
                        mesh, &layouts[k], &trimmed, &pot_k, poly_deg, cell, &idx, &dop,
                    )?;
                    der_k[d].push(dop);
                    pot_k[d].push(pop);
                }
            }
            derivative_ops.push(der_k);
            potential_ops.push(pot_k);
        }

        let mut global_derivative = Vec::with_capacity(n);
        for k in 0..n {
            let mut mat = DMatrix::zeros(layouts[k + 1].total(), layouts[k].total());
            for d in k + 1..=n {
                for cell in mesh.cells(d) {
                    let target = &trimmed[d][cell.id][d - k - 1];
                    if target.is_empty() {
                        continue;
                    }
                    let dop = &derivative_ops[k][d][cell.id];
                    let full_gram = target.full().gram(&cell.geometry);
                    let chol = cholesky_spd(target.gram(), "trimmed Gram")?;
                    let proj =
                        chol.solve(&(target.generator_coeffs().transpose() * full_gram));
                    let rows = proj * &dop.mat;
                    let row0 = layouts[k + 1].offset(CellRef { dim: d, id: cell.id });
                    for i in 0..rows.nrows() {
                        for (j, &c) in dop.cols.iter().enumerate() {
                            mat[(row0 + i, c)] += rows[(i, j)];
                        }
                    }
                }
            }
            global_derivative.push(mat);
        }

        Ok(DdrSetup { dim: n, poly_deg, layouts, trimmed, derivative_ops, potential_ops, global_derivative })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn poly_deg(&self) -> usize {
        self.poly_deg
    }

    pub fn layout(&self, k: usize) -> &SpaceLayout {
        &self.layouts[k]
    }

    /// Trimmed basis holding the degree-`k` component on cell `f`.
    pub fn trimmed_basis(&self, k: usize, f: CellRef) -> &TrimmedBasis {
        &self.trimmed[f.dim][f.id][f.dim - k]
    }

    /// Global derivative matrix from degree `k` to `k + 1`.
    pub fn derivative(&self, k: usize) -> &DMatrix<f64> {
        &self.global_derivative[k]
    }

    pub fn zero_form(&self, k: usize) -> DiscreteForm {
        DiscreteForm { degree: k, coeffs: DVector::zeros(self.layouts[k].total()) }
    }

    /// Uniform random coefficients in `[-1, 1]`.
    pub fn random_form(&self, k: usize, rng: &mut impl Rng) -> DiscreteForm {
        let coeffs =
            DVector::from_fn(self.layouts[k].total(), |_, _| rng.gen_range(-1.0..=1.0));
        DiscreteForm { degree: k, coeffs }
    }

    pub fn apply_derivative(&self, form: &DiscreteForm) -> Result<DiscreteForm> {
        if form.degree >= self.dim {
            return Err(Error::InvalidDegree(format!(
                "derivative of a degree-{} element of a dimension-{} complex",
                form.degree, self.dim
            )));
        }
        Ok(DiscreteForm {
            degree: form.degree + 1,
            coeffs: &self.global_derivative[form.degree] * &form.coeffs,
        })
    }

    /// Star of the local derivative on `f`: a full polynomial
    /// `(dim f − k − 1)`-form on the cell's chart.
    pub fn star_derivative(
        &self,
        mesh: &Mesh,
        k: usize,
        f: CellRef,
        form: &DiscreteForm,
    ) -> Result<PolyForm> {
        if f.dim <= k {
            return Err(Error::InvalidDegree(format!(
                "derivative of a degree-{k} component on a {}-cell",
                f.dim
            )));
        }
        let op = &self.derivative_ops[k][f.dim][f.id];
        let coeffs = op.apply(&form.coeffs);
        let scale = mesh.cell(f).geometry.frame.scale;
        let basis = FullBasis::new(f.dim, f.dim - k - 1, self.poly_deg, scale)?;
        Ok(basis.form_from_vec(&coeffs))
    }

    /// Star of the local potential on `f`: a full polynomial
    /// `(dim f − k)`-form on the cell's chart.
    pub fn star_potential(
        &self,
        mesh: &Mesh,
        k: usize,
        f: CellRef,
        form: &DiscreteForm,
    ) -> Result<PolyForm> {
        if f.dim < k {
            return Err(Error::InvalidDegree(format!(
                "potential of a degree-{k} component on a {}-cell",
                f.dim
            )));
        }
        let op = &self.potential_ops[k][f.dim][f.id];
        let coeffs = op.apply(&form.coeffs);
        let scale = mesh.cell(f).geometry.frame.scale;
        let basis = FullBasis::new(f.dim, f.dim - k, self.poly_deg, scale)?;
        Ok(basis.form_from_vec(&coeffs))
    }

    /// Component-wise projection of a smooth `k`-form given on the ambient
    /// chart: trace onto each cell, star, project onto the trimmed space.
    pub fn interpolate(&self, mesh: &Mesh, omega: &PolyForm) -> Result<DiscreteForm> {
        if omega.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "interpolating a form on a {}-dimensional chart into a {}-dimensional mesh",
                omega.dim(),
                self.dim
            )));
        }
        let k = omega.degree();
        let ambient = ambient_frame(self.dim);
        let mut out = self.zero_form(k);
        for d in k..=self.dim {
            for cell in mesh.cells(d) {
                let tb = &self.trimmed[d][cell.id][d - k];
                if tb.is_empty() {
                    continue;
                }
                let embed = ambient.embed(&cell.geometry.frame);
                let star = omega.trace(&embed)?.hodge();
                let c = tb.project(&star, &cell.geometry)?;
                let off = self.layouts[k].offset(CellRef { dim: d, id: cell.id });
                for (i, v) in c.iter().enumerate() {
                    out.coeffs[off + i] = *v;
                }
            }
        }
        Ok(out)
    }

    /// The trimmed component on one cell as a polynomial form (the star of
    /// the trace it represents).
    pub fn component_form(&self, k: usize, f: CellRef, form: &DiscreteForm) -> PolyForm {
        let tb = &self.trimmed[f.dim][f.id][f.dim - k];
        tb.form_from_coeffs(&gather(
            &form.coeffs,
            &self.layouts[k].range(f).collect::<Vec<_>>(),
        ))
    }

    /// Residual of the boundary-integral identity defining the local
    /// derivative, re-evaluated from the reconstructed forms: the worst over
    /// the full test basis of
    /// `|⟨⋆dω, μ⟩ − (−1)^{k+1}⟨⋆ω_f, dμ⟩ − Σ ε⟨⋆P_{f'}ω, tr μ⟩|`.
    pub fn derivative_relation_residual(
        &self,
        mesh: &Mesh,
        k: usize,
        f: CellRef,
        form: &DiscreteForm,
    ) -> Result<f64> {
        let cell = mesh.cell(f);
        let d = f.dim;
        let geo = &cell.geometry;
        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let star_d = self.star_derivative(mesh, k, f, form)?;
        let own = self.component_form(k, f, form);
        let tests = FullBasis::new(d, d - k - 1, self.poly_deg, geo.frame.scale)?;
        let mut worst = 0.0_f64;
        for i in 0..tests.len() {
            let mu = tests.element(i);
            let mut val = star_d.inner_product(&mu, geo)?
                - sign * own.inner_product(&mu.d()?, geo)?;
            for &(bid, bsign) in &cell.boundary {
                let bf = CellRef { dim: d - 1, id: bid };
                let bcell = mesh.cell(bf);
                let pot = self.star_potential(mesh, k, bf, form)?;
                let embed = geo.frame.embed(&bcell.geometry.frame);
                val -= f64::from(bsign)
                    * pot.inner_product(&mu.trace(&embed)?, &bcell.geometry)?;
            }
            worst = worst.max(val.abs());
        }
        Ok(worst)
    }

    /// Residual of the projection identity tying the potential back to the
    /// stored component: the trimmed projection of the reconstructed
    /// potential must reproduce the cell's own coefficients exactly, for
    /// every input. Returned in the component's Gram norm.
    pub fn potential_projection_residual(
        &self,
        mesh: &Mesh,
        k: usize,
        f: CellRef,
        form: &DiscreteForm,
    ) -> Result<f64> {
        let tb = &self.trimmed[f.dim][f.id][f.dim - k];
        if tb.is_empty() {
            return Ok(0.0);
        }
        let geo = &mesh.cell(f).geometry;
        let pot = self.star_potential(mesh, k, f, form)?;
        let proj = tb.project(&pot, geo)?;
        let own = gather(&form.coeffs, &self.layouts[k].range(f).collect::<Vec<_>>());
        Ok(tb.coeff_norm(&(proj - own)))
    }

    /// Ratio of the potential's norm to the recursive local norm of the
    /// input on the same cell — the boundedness constant of the
    /// reconstruction, measured (zero for zero input).
    pub fn potential_bound_ratio(
        &self,
        mesh: &Mesh,
        k: usize,
        f: CellRef,
        form: &DiscreteForm,
    ) -> Result<f64> {
        let geo = &mesh.cell(f).geometry;
        let pot = self.star_potential(mesh, k, f, form)?;
        let pnorm = pot.norm(geo)?;
        let local = self.local_norm(mesh, k, f, form);
        Ok(if local > 0.0 { pnorm / local } else { 0.0 })
    }

    /// Norm of the component stored on one cell.
    pub fn component_norm(&self, k: usize, f: CellRef, form: &DiscreteForm) -> f64 {
        let tb = &self.trimmed[f.dim][f.id][f.dim - k];
        tb.coeff_norm(&gather(&form.coeffs, &self.layouts[k].range(f).collect::<Vec<_>>()))
    }

    /// Recursively weighted norm on the closure of one cell: the component
    /// norm squared plus the cell diameter times the boundary cells' squares.
    pub fn local_norm(&self, mesh: &Mesh, k: usize, f: CellRef, form: &DiscreteForm) -> f64 {
        self.local_norm_sq(mesh, k, f, form).sqrt()
    }

    fn local_norm_sq(&self, mesh: &Mesh, k: usize, f: CellRef, form: &DiscreteForm) -> f64 {
        let cell = mesh.cell(f);
        let own = self.component_norm(k, f, form).powi(2);
        if f.dim == k {
            return own;
        }
        let boundary: f64 = cell
            .boundary
            .iter()
            .map(|&(id, _)| self.local_norm_sq(mesh, k, CellRef { dim: f.dim - 1, id }, form))
            .sum();
        own + cell.diameter() * boundary
    }

    /// Flat-weighted square norm over the closure of one top cell: component
    /// squares scaled by `h_T^(n−d)` for components on `d`-cells.
    pub fn explicit_norm_sq(
        &self,
        mesh: &Mesh,
        k: usize,
        top: usize,
        form: &DiscreteForm,
    ) -> f64 {
        let cell = &mesh.cells(self.dim)[top];
        let h = cell.diameter();
        let mut acc = 0.0;
        for d in k..=self.dim {
            let weight = h.powi((self.dim - d) as i32);
            for &id in &cell.closure_cells[d] {
                acc += weight * self.component_norm(k, CellRef { dim: d, id }, form).powi(2);
            }
        }
        acc
    }

    /// Global norm: the sum of the flat-weighted squares over all top cells.
    pub fn global_norm(&self, mesh: &Mesh, k: usize, form: &DiscreteForm) -> f64 {
        (0..mesh.cell_count(self.dim))
            .map(|t| self.explicit_norm_sq(mesh, k, t, form))
            .sum::<f64>()
            .sqrt()
    }

    /// Global norm built from the recursive per-cell weighting instead of
    /// the flat one; equivalent to [`Self::global_norm`] up to constants
    /// depending only on mesh regularity.
    pub fn recursive_global_norm(&self, mesh: &Mesh, k: usize, form: &DiscreteForm) -> f64 {
        (0..mesh.cell_count(self.dim))
            .map(|t| self.local_norm_sq(mesh, k, CellRef { dim: self.dim, id: t }, form))
            .sum::<f64>()
            .sqrt()
    }

    /// Gram matrix of the global norm: block diagonal per component, each
    /// block the trimmed Gram times the cell's accumulated top weights.
    pub fn norm_gram(&self, mesh: &Mesh, k: usize) -> DMatrix<f64> {
        let n = self.dim;
        let mut weights: Vec<Vec<f64>> = (0..=n).map(|d| vec![0.0; mesh.cell_count(d)]).collect();
        for top in mesh.cells(n) {
            let h = top.diameter();
            for d in k..=n {
                let w = h.powi((n - d) as i32);
                for &id in &top.closure_cells[d] {
                    weights[d][id] += w;
                }
            }
        }
        let mut gram = DMatrix::zeros(self.layouts[k].total(), self.layouts[k].total());
        for d in k..=n {
            for cell in mesh.cells(d) {
                let tb = &self.trimmed[d][cell.id][d - k];
                if tb.is_empty() {
                    continue;
                }
                let off = self.layouts[k].offset(CellRef { dim: d, id: cell.id });
                let block = tb.gram() * weights[d][cell.id];
                for i in 0..block.nrows() {
                    for j in 0..block.ncols() {
                        gram[(off + i, off + j)] = block[(i, j)];
                    }
                }
            }
        }
        gram
    }
}

/// Pairing row against the boundary potentials: adds
/// `Σ_{f'⊂∂f} ε ⟨star-potential on f', tr μ⟩_{f'}` for each test `μ` into
/// `rhs`, scattered to closure columns.
#[allow(clippy::too_many_arguments)]
fn add_boundary_rows(
    mesh: &Mesh,
    pot_k: &[Vec<LocalOp>],
    k: usize,
    poly_deg: usize,
    cell: &Cell,
    idx: &ClosureIndex,
    tests: &[PolyForm],
    weight: f64,
    rhs: &mut DMatrix<f64>,
) -> Result<()> {
    let d = cell.dim;
    for &(bid, bsign) in &cell.boundary {
        let bcell = &mesh.cells(d - 1)[bid];
        let bgeo = &bcell.geometry;
        let embed = cell.geometry.frame.embed(&bgeo.frame);
        let bop = &pot_k[d - 1][bid];
        let basis = FullBasis::new(d - 1, d - 1 - k, poly_deg, bgeo.frame.scale)?;
        let scatter = idx.scatter(&bop.cols);
        let factor = weight * f64::from(bsign);
        for (i, mu) in tests.iter().enumerate() {
            let pair = basis.inner_with(&mu.trace(&embed)?, bgeo)?;
            let row = pair.transpose() * &bop.mat;
            for (j, &p) in scatter.iter().enumerate() {
                rhs[(i, p)] += factor * row[(0, j)];
            }
        }
    }
    Ok(())
}

/// Adds `weight · ⟨own trimmed component, forms[i]⟩_f` rows into `rhs`.
fn add_own_component_rows(
    layout: &SpaceLayout,
    trimmed: &[Vec<Vec<TrimmedBasis>>],
    cell: &Cell,
    idx: &ClosureIndex,
    forms: &[PolyForm],
    weight: f64,
    rhs: &mut DMatrix<f64>,
    row0: usize,
) -> Result<()> {
    let d = cell.dim;
    let own = &trimmed[d][cell.id][d - layout.degree()];
    if own.is_empty() {
        return Ok(());
    }
    let off = layout.offset(CellRef { dim: d, id: cell.id });
    for (i, f) in forms.iter().enumerate() {
        let pair = own.full().inner_with(f, &cell.geometry)?;
        let w = own.generator_coeffs().transpose() * pair;
        for j in 0..own.len() {
            rhs[(row0 + i, idx.pos[&(off + j)])] += weight * w[j];
        }
    }
    Ok(())
}

/// Local derivative on a cell of dimension `d > k`: the unique full
/// polynomial `(d−k−1)`-form whose pairings with every test in `P_r` match
/// the integration-by-parts expression built from the cell's own component
/// and the boundary potentials.
fn derivative_op(
    mesh: &Mesh,
    layout: &SpaceLayout,
    trimmed: &[Vec<Vec<TrimmedBasis>>],
    pot_k: &[Vec<LocalOp>],
    poly_deg: usize,
    cell: &Cell,
    idx: &ClosureIndex,
) -> Result<LocalOp> {
    let d = cell.dim;
    let k = layout.degree();
    let geo = &cell.geometry;
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let basis = FullBasis::new(d, d - k - 1, poly_deg, geo.frame.scale)?;
    let tests: Vec<PolyForm> = (0..basis.len()).map(|i| basis.element(i)).collect();
    let dtests: Vec<PolyForm> = tests.iter().map(PolyForm::d).collect::<Result<_>>()?;

    let mut rhs = DMatrix::zeros(tests.len(), idx.cols.len());
    add_own_component_rows(layout, trimmed, cell, idx, &dtests, sign, &mut rhs, 0)?;
    add_boundary_rows(mesh, pot_k, k, poly_deg, cell, idx, &tests, 1.0, &mut rhs)?;

    let gram = basis.gram(geo);
    let chol = cholesky_spd(&gram, "derivative test Gram")?;
    Ok(LocalOp { cols: idx.cols.clone(), mat: chol.solve(&rhs) })
}

/// Local potential on a cell of dimension `d > k`: tested against the Koszul
/// span `M` of `(d−k−1)`-forms (whose derivatives reach the full order) plus,
/// when nonempty, the complementary Koszul span `N` of `(d−k)`-forms paired
/// directly with the cell's component. The stacked system is consistent by
/// construction; the residual is still checked.
#[allow(clippy::too_many_arguments)]
fn potential_op(
    mesh: &Mesh,
    layout: &SpaceLayout,
    trimmed: &[Vec<Vec<TrimmedBasis>>],
    pot_k: &[Vec<LocalOp>],
    poly_deg: usize,
    cell: &Cell,
    idx: &ClosureIndex,
    dop: &LocalOp,
) -> Result<LocalOp> {
    let d = cell.dim;
    let k = layout.degree();
    let geo = &cell.geometry;
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let target = FullBasis::new(d, d - k, poly_deg, geo.frame.scale)?;
    let deriv_basis = FullBasis::new(d, d - k - 1, poly_deg, geo.frame.scale)?;

    let mu = SpanBasis::koszul_span(geo, d - k - 1, poly_deg + 1)?;
    let nu = if k >= 1 && poly_deg >= 1 {
        Some(SpanBasis::koszul_span(geo, d - k, poly_deg)?)
    } else {
        None
    };
    let n_mu = mu.len();
    let n_nu = nu.as_ref().map_or(0, SpanBasis::len);

    let mut lhs = DMatrix::zeros(n_mu + n_nu, target.len());
    let mut rhs = DMatrix::zeros(n_mu + n_nu, idx.cols.len());

    let mus: Vec<PolyForm> = (0..n_mu).map(|i| mu.element(i)).collect();
    for (i, mu_i) in mus.iter().enumerate() {
        let lrow = target.inner_with(&mu_i.d()?, geo)?;
        for j in 0..target.len() {
            lhs[(i, j)] = sign * lrow[j];
        }
        let pair = deriv_basis.inner_with(mu_i, geo)?;
        let row = pair.transpose() * &dop.mat;
        for j in 0..idx.cols.len() {
            rhs[(i, j)] += row[(0, j)];
        }
    }
    add_boundary_rows(mesh, pot_k, k, poly_deg, cell, idx, &mus, -1.0, &mut rhs)?;

    if let Some(nu) = &nu {
        let nus: Vec<PolyForm> = (0..n_nu).map(|i| nu.element(i)).collect();
        for (i, nu_i) in nus.iter().enumerate() {
            let lrow = target.inner_with(nu_i, geo)?;
            for j in 0..target.len() {
                lhs[(n_mu + i, j)] = lrow[j];
            }
        }
        add_own_component_rows(layout, trimmed, cell, idx, &nus, 1.0, &mut rhs, n_mu)?;
    }

    let (mat, res) = pinv_solve_mat(&lhs, &rhs);
    let tol = 1e-8 * rhs.norm().max(1.0);
    if res > tol {
        return Err(Error::Solve(format!(
            "potential relations inconsistent on {d}-cell {} (residual {res:.3e})",
            cell.id
        )));
    }
    Ok(LocalOp { cols: idx.cols.clone(), mat })
}

/// Integral identity residual `|∫_f d(form) − Σ_{f'⊂∂f} ε ∫_{f'} tr(form)|`
/// for a `(dim f − 1)`-form given on the cell's chart. Independent of the
/// discrete-complex machinery.
pub fn stokes_residual(mesh: &Mesh, f: CellRef, form: &PolyForm) -> Result<f64> {
    let cell = mesh.cell(f);
    if f.dim == 0 || form.degree() + 1 != f.dim {
        return Err(Error::InvalidDegree(format!(
            "boundary integral identity needs a {}-form on a {}-cell",
            f.dim.saturating_sub(1),
            f.dim
        )));
    }
    let lhs = form.d()?.integral(&cell.geometry)?;
    let mut rhs = 0.0;
    for &(bid, bsign) in &cell.boundary {
        let bcell = &mesh.cells(f.dim - 1)[bid];
        let embed = cell.geometry.frame.embed(&bcell.geometry.frame);
        rhs += f64::from(bsign) * form.trace(&embed)?.integral(&bcell.geometry)?;
    }
    Ok((lhs - rhs).abs())
}
