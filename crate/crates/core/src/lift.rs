//! Cochain lifts between the polytopal cells of a mesh and its simplicial
//! submesh.
//!
//! Polytopal cochains carry one value per cell, simplicial cochains one per
//! simplex. Restriction sums a simplicial cochain over the members of each
//! cell. Lifting goes the other way: cell values are spread over member
//! simplices in proportion to measure, and values on simplices interior to
//! higher-dimensional cells are reconstructed from spanning-set duality
//! chains so that lifting commutes with the coboundary. Feeding a lifted
//! cochain through the minimal-energy Whitney preimage and restricting back
//! yields discrete primitives of polytopal coboundaries together with a
//! mesh-size-weighted norm ratio.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, InvariantKind, Result};
use crate::mesh::geometry::simplex_measure;
use crate::mesh::{Cell, Mesh};
use crate::topology::{
    boundary_preimage, closure_complex, construct_spanning_set, polytopal_complex,
    simplicial_complex, SpanningSet,
};
use crate::whitney::WhitneySpace;

/// Lift and restriction matrices between polytopal and simplicial cochains,
/// with the coboundaries of both complexes.
pub struct CochainLift {
    dim: usize,
    /// `lift[k]`: k-simplices × k-cells.
    lift: Vec<DMatrix<f64>>,
    /// `restriction[k]`: k-cells × k-simplices.
    restriction: Vec<DMatrix<f64>>,
    /// `cell_coboundary[k]`: (k+1)-cells × k-cells.
    cell_coboundary: Vec<DMatrix<f64>>,
    /// `simplex_coboundary[k]`: (k+1)-simplices × k-simplices.
    simplex_coboundary: Vec<DMatrix<f64>>,
}

impl CochainLift {
    pub fn new(mesh: &Mesh) -> Result<CochainLift> {
        let n = mesh.dim();
        let poly = polytopal_complex(mesh);
        let simp = simplicial_complex(mesh);
        let cell_coboundary: Vec<DMatrix<f64>> =
            (0..n).map(|k| poly.boundary[k + 1].transpose().to_dense()).collect();
        let simplex_coboundary: Vec<DMatrix<f64>> =
            (0..n).map(|k| simp.boundary[k + 1].transpose().to_dense()).collect();

        let mut restriction = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut j = DMatrix::<f64>::zeros(mesh.cell_count(k), mesh.simplex_count(k));
            for cell in mesh.cells(k) {
                for &s in &cell.members {
                    j[(cell.id, s)] = 1.0;
                }
            }
            restriction.push(j);
        }

        // Degrees are assembled from the top down: interior rows at degree k
        // pair duality chains with the already-lifted coboundary one degree
        // up. Within a degree, cells are visited by ascending dimension so
        // that the rows of a cell's boundary simplices are ready.
        let mut lift = vec![DMatrix::<f64>::zeros(0, 0); n + 1];
        for k in (0..=n).rev() {
            let mut m = DMatrix::<f64>::zeros(mesh.simplex_count(k), mesh.cell_count(k));
            for cell in mesh.cells(k) {
                for &s in &cell.members {
                    let coords = mesh.simplex_coords(k, s);
                    m[(s, cell.id)] = simplex_measure(&coords) / cell.measure();
                }
            }
            let propagated =
                if k < n { Some(&lift[k + 1] * &cell_coboundary[k]) } else { None };
            for d in (k + 1)..=n {
                for cell in mesh.cells(d) {
                    fill_interior_rows(
                        mesh,
                        cell,
                        k,
                        propagated.as_ref().expect("degree above has been assembled"),
                        &mut m,
                    )?;
                }
            }
            lift[k] = m;
        }

        Ok(CochainLift { dim: n, lift, restriction, cell_coboundary, simplex_coboundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The lift matrix at degree `k` (k-simplices × k-cells).
    pub fn lift_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.lift[k]
    }

    /// The restriction matrix at degree `k` (k-cells × k-simplices).
    pub fn restriction_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.restriction[k]
    }

    /// The polytopal coboundary `k`-cells → `(k+1)`-cells.
    pub fn cell_coboundary(&self, k: usize) -> &DMatrix<f64> {
        &self.cell_coboundary[k]
    }

    /// The simplicial coboundary `k`-simplices → `(k+1)`-simplices.
    pub fn simplex_coboundary(&self, k: usize) -> &DMatrix<f64> {
        &self.simplex_coboundary[k]
    }

    /// Lift a polytopal `k`-cochain to the simplicial submesh.
    pub fn interpolate(&self, k: usize, cochain: &DVector<f64>) -> DVector<f64> {
        &self.lift[k] * cochain
    }

    /// Restrict a simplicial `k`-cochain to the polytopal cells.
    pub fn restrict(&self, k: usize, cochain: &DVector<f64>) -> DVector<f64> {
        &self.restriction[k] * cochain
    }
}

/// Fills the lift rows of the interior `k`-simplices of one cell.
///
/// For a selected simplex with duality chains `(w, z)`, the row pairs `w`
/// with the lifted polytopal coboundary and subtracts the `z`-weighted rows
/// of the remaining closure simplices; rows of unselected interior
/// simplices stay zero.
fn fill_interior_rows(
    mesh: &Mesh,
    cell: &Cell,
    k: usize,
    propagated: &DMatrix<f64>,
    m: &mut DMatrix<f64>,
) -> Result<()> {
    if cell.interior_simplices[k].is_empty() {
        return Ok(());
    }
    let span = construct_spanning_set(mesh, cell, k)?;
    let expected = SpanningSet::expected_len(mesh, cell, k);
    if span.elements.len() != expected {
        return Err(Error::invariant(
            InvariantKind::Selection,
            format!(
                "spanning set of {}-cell {} at degree {k} selected {} of {expected}",
                cell.dim,
                cell.id,
                span.elements.len()
            ),
        ));
    }
    let anchored = if k == 0 { Some(anchored_chains(mesh, cell, &span)?) } else { None };
    for (i, element) in span.elements.iter().enumerate() {
        let (w, z) = match &anchored {
            Some(chains) => (&chains[i].0, &chains[i].1),
            None => (&element.w, &element.z),
        };
        let mut row = RowDVector::<f64>::zeros(m.ncols());
        for (j, &g) in cell.closure_simplices[k + 1].iter().enumerate() {
            if w[j] != 0.0 {
                row += propagated.row(g) * w[j];
            }
        }
        for (p, &s) in cell.closure_simplices[k].iter().enumerate() {
            if s != element.simplex && z[p] != 0.0 {
                row -= m.row(s) * z[p];
            }
        }
        m.set_row(element.simplex, &row);
    }
    Ok(())
}

/// Anchored duality chains at degree zero: `z = e_F − e_anchor` with the
/// anchor at the cell's lowest-id boundary vertex, and `w` the least-norm
/// 1-chain of the closure with `∂w = z`.
fn anchored_chains(
    mesh: &Mesh,
    cell: &Cell,
    span: &SpanningSet,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let closure = closure_complex(mesh, cell);
    let edges = closure.boundary[1].to_dense();
    let verts = &cell.closure_simplices[0];
    let anchor = cell.boundary_simplices[0][0];
    let anchor_pos = verts.binary_search(&anchor).expect("anchor vertex lies in the closure");
    let mut out = Vec::with_capacity(span.elements.len());
    for element in &span.elements {
        let pos = verts
            .binary_search(&element.simplex)
            .expect("selected vertex lies in the closure");
        let mut z = DVector::zeros(verts.len());
        z[pos] = 1.0;
        z[anchor_pos] = -1.0;
        let w = boundary_preimage(&edges, &z)?;
        out.push((w, z));
    }
    Ok(out)
}

/// Per-cell weights `Σ_T h_T^{n−2k}` over the top cells whose closure
/// contains each `k`-cell: the natural scaling of squared cochain values.
pub fn cochain_weights(mesh: &Mesh, k: usize) -> DVector<f64> {
    let n = mesh.dim();
    let exponent = n as i32 - 2 * k as i32;
    let mut weights = DVector::zeros(mesh.cell_count(k));
    for top in mesh.cells(n) {
        let h = top.diameter().powi(exponent);
        for &f in &top.closure_cells[k] {
            weights[f] += h;
        }
    }
    weights
}

/// A discrete primitive of a polytopal coboundary.
#[derive(Debug, Clone)]
pub struct CochainPrimitive {
    /// `k`-cochain whose coboundary reproduces the data.
    pub potential: DVector<f64>,
    /// Weighted norm of the potential.
    pub potential_norm: f64,
    /// Weighted norm of the data.
    pub data_norm: f64,
    /// Ratio of the two: the stability constant of this primitive.
    pub constant: f64,
}

/// Solves `δλ = ξ` for a polytopal `(k+1)`-cochain `ξ` where `k` is the
/// degree of `space`.
///
/// The data is lifted to the simplicial submesh, a minimal-Whitney-energy
/// simplicial primitive is computed there, and its restriction solves the
/// polytopal problem because restriction commutes with the coboundary and
/// inverts the lift. Fails with `NotACoboundary` when `ξ` has no primitive.
pub fn cochain_primitive(
    mesh: &Mesh,
    lift: &CochainLift,
    space: &WhitneySpace,
    data: &DVector<f64>,
) -> Result<CochainPrimitive> {
    let k = space.degree();
    if k + 1 > mesh.dim() {
        return Err(Error::InvalidDegree(format!(
            "cochain primitive needs degree < {}, got {k}",
            mesh.dim()
        )));
    }
    if data.len() != mesh.cell_count(k + 1) {
        return Err(Error::DimensionMismatch(format!(
            "data has {} entries, mesh has {} cells of dimension {}",
            data.len(),
            mesh.cell_count(k + 1),
            k + 1
        )));
    }
    let lifted = lift.interpolate(k + 1, data);
    let simplicial = space.min_energy_preimage(lift.simplex_coboundary(k), &lifted)?;
    let potential = lift.restrict(k, &simplicial);

    let residual = (lift.cell_coboundary(k) * &potential - data).amax();
    if residual > 1e-8 * data.amax().max(1.0) {
        return Err(Error::Solve(format!(
            "restricted primitive misses the data by {residual:.3e}"
        )));
    }

    let potential_norm = weighted_norm(&cochain_weights(mesh, k), &potential);
    let data_norm = weighted_norm(&cochain_weights(mesh, k + 1), data);
    let constant = if data_norm > 0.0 { potential_norm / data_norm } else { 0.0 };
    Ok(CochainPrimitive { potential, potential_norm, data_norm, constant })
}

fn weighted_norm(weights: &DVector<f64>, values: &DVector<f64>) -> f64 {
    weights.iter().zip(values.iter()).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}
