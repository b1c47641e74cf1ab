//! Per-cell geometry: orthonormal frames, scaled local coordinates, member
//! simplices, and exact moments of monomials.
//!
//! All geometry lives on simplices. A cell of dimension `d` carries an
//! orthonormal frame `U ∈ R^{n×d}`, a star point `x_f`, and a diameter `h_f`;
//! points are addressed by *scaled frame coordinates* `ŷ = Uᵀ(x − x_f)/h_f`.
//! Working in scaled coordinates keeps Gram matrices of monomial bases
//! uniformly conditioned under refinement, and makes the response of every
//! local operator to a uniform rescaling of the cell an exact power of the
//! scaling factor.
//!
//! Moments `∫_f ŷ^α dx` are exact: each member simplex contributes the
//! closed-form integral of the barycentric expansion of `ŷ^α`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polyform::monomial::MonomialBasis;

/// An affine chart: orthonormal columns `basis` (n×d), a base point, and the
/// length `scale` dividing frame coordinates.
#[derive(Debug, Clone)]
pub struct Frame {
    pub origin: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub scale: f64,
}

impl Frame {
    /// The ambient chart: identity frame at the origin with unit scale.
    pub fn ambient(n: usize) -> Frame {
        Frame { origin: DVector::zeros(n), basis: DMatrix::identity(n, n), scale: 1.0 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Scaled frame coordinates of an ambient point.
    pub fn local(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.basis.transpose() * (x - &self.origin)) / self.scale
    }

    /// Affine substitution mapping `child` scaled coordinates into `self`
    /// scaled coordinates, for a child chart whose domain geometrically lies
    /// inside this chart's affine span.
    pub fn embed(&self, child: &Frame) -> AffineEmbed {
        let shift = (self.basis.transpose() * (&child.origin - &self.origin)) / self.scale;
        let coframe = self.basis.transpose() * &child.basis;
        let linear = &coframe * (child.scale / self.scale);
        AffineEmbed { shift, linear, coframe, child_scale: child.scale }
    }
}

/// Data of an affine inclusion between two charts: `ŷ_parent = shift +
/// linear · ŷ_child`, and the physical coframe relation `dy_parent =
/// coframe · dy_child` used to pull back alternators. `child_scale` is kept
/// so pulled-back forms stay usable on the child chart.
#[derive(Debug, Clone)]
pub struct AffineEmbed {
    pub shift: DVector<f64>,
    pub linear: DMatrix<f64>,
    pub coframe: DMatrix<f64>,
    pub child_scale: f64,
}

impl AffineEmbed {
    pub fn parent_dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn child_dim(&self) -> usize {
        self.linear.ncols()
    }
}

/// One member simplex of a cell, in the cell's scaled coordinates.
#[derive(Debug, Clone)]
pub struct MemberSimplex {
    /// Vertex coordinates, one column per vertex (`d × (d+1)`).
    pub verts: DMatrix<f64>,
    /// Physical d-measure.
    pub measure: f64,
    /// Orientation of the stored vertex order relative to the cell frame.
    pub orientation: i8,
}

/// Geometry of one cell: frame, size, member simplices, and cached moments.
#[derive(Debug)]
pub struct CellGeometry {
    pub dim: usize,
    pub frame: Frame,
    /// Diameter of the cell (max pairwise vertex distance); 0-cells use 0.
    pub diameter: f64,
    /// Physical measure: sum of member measures (1 for a 0-cell).
    pub measure: f64,
    pub members: Vec<MemberSimplex>,
    moments: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl Clone for CellGeometry {
    fn clone(&self) -> Self {
        CellGeometry {
            dim: self.dim,
            frame: self.frame.clone(),
            diameter: self.diameter,
            measure: self.measure,
            members: self.members.clone(),
            moments: Mutex::new(self.moments.lock().unwrap().clone()),
        }
    }
}

impl CellGeometry {
    pub fn new(frame: Frame, diameter: f64, members: Vec<MemberSimplex>) -> Self {
        let measure = if frame.dim() == 0 { 1.0 } else { members.iter().map(|m| m.measure).sum() };
        CellGeometry {
            dim: frame.dim(),
            frame,
            diameter,
            measure,
            members,
            moments: Mutex::new(HashMap::new()),
        }
    }

    /// Geometry of a 0-cell at a point: empty frame, unit counting measure.
    pub fn point(x: DVector<f64>) -> Self {
        let n = x.len();
        let frame = Frame { origin: x, basis: DMatrix::zeros(n, 0), scale: 1.0 };
        CellGeometry::new(frame, 0.0, Vec::new())
    }

    /// The image of this cell under the dilation `x ↦ s·x` about the ambient
    /// origin. Scaled-coordinate data (member vertices) is unchanged; only
    /// physical quantities pick up powers of `s`. 0-cells keep unit scale.
    pub fn rescaled(&self, s: f64) -> CellGeometry {
        let frame = Frame {
            origin: &self.frame.origin * s,
            basis: self.frame.basis.clone(),
            scale: if self.dim == 0 { 1.0 } else { self.frame.scale * s },
        };
        let members = self
            .members
            .iter()
            .map(|m| MemberSimplex {
                verts: m.verts.clone(),
                measure: m.measure * s.powi(self.dim as i32),
                orientation: m.orientation,
            })
            .collect();
        CellGeometry::new(frame, self.diameter * s, members)
    }

    /// Orientation-weighted moments `∫_f ŷ^α dx` for all `|α| ≤ max_deg`, in
    /// the order of [`MonomialBasis::new`]. Member orientations are +1 on any
    /// validated mesh, so these equal plain measure moments.
    pub fn moments(&self, max_deg: usize) -> Arc<Vec<f64>> {
        if let Some(m) = self.moments.lock().unwrap().get(&max_deg) {
            return m.clone();
        }
        let basis = MonomialBasis::get(self.dim, max_deg);
        let mut vals = vec![0.0; basis.len()];
        if self.dim == 0 {
            vals[0] = 1.0; // counting measure on a point
        } else {
            for member in &self.members {
                let signed = member.measure * f64::from(member.orientation);
                for (i, alpha) in basis.exponents().iter().enumerate() {
                    vals[i] += signed * simplex_monomial_average(&member.verts, alpha);
                }
            }
        }
        let arc = Arc::new(vals);
        self.moments.lock().unwrap().insert(max_deg, arc.clone());
        arc
    }
}

/// Mean value of the monomial `ŷ^α` over the simplex spanned by the columns
/// of `verts` (`d × (m+1)`, an m-simplex inside d coordinates), exactly, via
/// the barycentric expansion and the closed-form average
/// `avg(λ^γ) = m! γ! / (|γ| + m)!`.
pub fn simplex_monomial_average(verts: &DMatrix<f64>, alpha: &[u8]) -> f64 {
    let d = verts.nrows();
    let m = verts.ncols() - 1;
    debug_assert_eq!(alpha.len(), d);
    let total: usize = alpha.iter().map(|&a| a as usize).sum();
    if total == 0 {
        return 1.0;
    }
    let lam = MonomialBasis::get(m + 1, total);
    // expand Π_c (Σ_i λ_i verts[c,i])^{α_c} as a polynomial in λ
    let mut poly = vec![0.0; lam.len()];
    poly[0] = 1.0; // the constant monomial is first in graded order
    let mut deg = 0usize;
    for c in 0..d {
        for _ in 0..alpha[c] {
            poly = multiply_by_linear(&poly, deg, verts, c, &lam);
            deg += 1;
        }
    }
    let mut acc = 0.0;
    for (idx, coef) in poly.iter().enumerate() {
        if *coef == 0.0 {
            continue;
        }
        let gamma = &lam.exponents()[idx];
        acc += coef * barycentric_average(gamma, m);
    }
    acc
}

/// Multiplies a polynomial in barycentric variables (dense over `lam`, degree
/// ≤ `deg`) by the linear form `Σ_i λ_i verts[coord, i]`.
fn multiply_by_linear(
    poly: &[f64],
    deg: usize,
    verts: &DMatrix<f64>,
    coord: usize,
    lam: &MonomialBasis,
) -> Vec<f64> {
    let nvars = lam.nvars();
    let mut out = vec![0.0; lam.len()];
    for (idx, coef) in poly.iter().enumerate() {
        if *coef == 0.0 {
            continue;
        }
        let gamma = lam.exponents()[idx].clone();
        debug_assert!(lam.degree_of(idx) <= deg);
        for i in 0..nvars {
            let v = verts[(coord, i)];
            if v == 0.0 {
                continue;
            }
            let mut g = gamma.clone();
            g[i] += 1;
            let j = lam.position(&g).expect("degree bound maintained");
            out[j] += coef * v;
        }
    }
    out
}

/// `avg(λ^γ)` over an m-simplex: `m! γ! / (|γ| + m)!`.
fn barycentric_average(gamma: &[u8], m: usize) -> f64 {
    let total: usize = gamma.iter().map(|&g| g as usize).sum();
    let mut val = 1.0;
    // m! / (|γ|+m)! = 1 / ((m+1)(m+2)…(m+|γ|))
    for i in 1..=total {
        val /= (m + i) as f64;
    }
    for &g in gamma {
        for i in 1..=g as usize {
            val *= i as f64;
        }
    }
    val
}

/// Builds an orthonormal frame spanning the columns of `edges` (n×d, full
/// column rank) by pivoted Gram–Schmidt. Deterministic; errors on rank loss.
pub fn orthonormal_frame(edges: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = edges.nrows();
    let d = edges.ncols();
    let mut cols: Vec<DVector<f64>> = (0..d).map(|j| edges.column(j).into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    let first_norm = cols.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if first_norm == 0.0 {
        return Err(Error::invariant(
            crate::error::InvariantKind::Degenerate,
            "zero edge matrix while building a frame",
        ));
    }
    let mut used = vec![false; d];
    for _ in 0..d {
        // pivot: largest residual column
        let mut best = usize::MAX;
        let mut best_norm = -1.0;
        for (j, c) in cols.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nrm = c.norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best_norm <= 1e-12 * first_norm {
            return Err(Error::invariant(
                crate::error::InvariantKind::Degenerate,
                "rank-deficient simplex edges while building a frame",
            ));
        }
        used[best] = true;
        let q = &cols[best] / best_norm;
        for (j, c) in cols.iter_mut().enumerate() {
            if !used[j] {
                let proj = q.dot(c);
                *c -= &q * proj;
            }
        }
        basis.push(q);
    }
    let mut u = DMatrix::zeros(n, d);
    for (j, q) in basis.iter().enumerate() {
        u.set_column(j, q);
    }
    Ok(u)
}

/// Unsigned m-measure of the simplex with ambient vertex columns `verts`
/// (n×(m+1)): sqrt(det(EᵀE))/m! with E the edge matrix.
pub fn simplex_measure(verts: &DMatrix<f64>) -> f64 {
    let m = verts.ncols() - 1;
    if m == 0 {
        return 1.0;
    }
    let mut e = DMatrix::zeros(verts.nrows(), m);
    for j in 0..m {
        e.set_column(j, &(verts.column(j + 1) - verts.column(0)));
    }
    let g = e.transpose() * &e;
    let det = g.determinant().max(0.0);
    let mut fact = 1.0;
    for i in 1..=m {
        fact *= i as f64;
    }
    det.sqrt() / fact
}

/// Diameter of a point cloud given as columns.
pub fn diameter(points: &[DVector<f64>]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            h = h.max((&points[i] - &points[j]).norm());
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_triangle() -> CellGeometry {
        // unit right triangle in its own plane, scale 1 so ŷ = physical coords
        let frame = Frame { origin: DVector::zeros(2), basis: DMatrix::identity(2, 2), scale: 1.0 };
        let verts = DMatrix::from_column_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let member = MemberSimplex { verts, measure: 0.5, orientation: 1 };
        CellGeometry::new(frame, 2f64.sqrt(), vec![member])
    }

    #[test]
    fn triangle_moments_match_hand_integrals() {
        let cell = reference_triangle();
        let m = cell.moments(2);
        let basis = MonomialBasis::get(2, 2);
        let get = |a: &[u8]| m[basis.position(a).unwrap()];
        assert_relative_eq!(get(&[0, 0]), 0.5, epsilon = 1e-15); // area
        assert_relative_eq!(get(&[1, 0]), 1.0 / 6.0, epsilon = 1e-15); // ∫x
        assert_relative_eq!(get(&[0, 1]), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(get(&[2, 0]), 1.0 / 12.0, epsilon = 1e-15); // ∫x²
        assert_relative_eq!(get(&[1, 1]), 1.0 / 24.0, epsilon = 1e-15); // ∫xy
    }

    /// Independent oracle: tensor Gauss–Legendre quadrature mapped to the
    /// simplex by the Duffy transform, whose Jacobian is polynomial, so the
    /// rule is exact for polynomials of moderate degree.
    fn duffy_integrate(verts: &DMatrix<f64>, alpha: &[u8]) -> f64 {
        // 10-point Gauss–Legendre on [0,1]
        const X: [f64; 10] = [
            0.013046735741414128, 0.06746831665550773, 0.16029521585048778,
            0.2833023029353764, 0.42556283050918442, 0.5744371694908156,
            0.7166976970646236, 0.8397047841495122, 0.9325316833444923,
            0.9869532642585859,
        ];
        const W: [f64; 10] = [
            0.03333567215434402, 0.0747256745752903, 0.10954318125799103,
            0.13463335965499817, 0.14776211235737644, 0.14776211235737644,
            0.13463335965499817, 0.10954318125799103, 0.0747256745752903,
            0.03333567215434402,
        ];
        let d = verts.nrows();
        let m = verts.ncols() - 1;
        assert_eq!(d, m, "oracle written for full-dimensional simplices");
        let mut e = DMatrix::zeros(d, m);
        for j in 0..m {
            e.set_column(j, &(verts.column(j + 1) - verts.column(0)));
        }
        let detj = e.determinant().abs();
        let mut total = 0.0;
        let npts = 10usize.pow(m as u32);
        for flat in 0..npts {
            let mut idx = flat;
            let mut u = vec![0.0; m];
            let mut w = 1.0;
            for uj in u.iter_mut() {
                let i = idx % 10;
                idx /= 10;
                *uj = X[i];
                w *= W[i];
            }
            // Duffy: t1 = u1, t2 = u2(1-t1), t3 = u3(1-t1-t2), ...
            let mut t = vec![0.0; m];
            let mut remaining = 1.0;
            let mut jac = 1.0;
            for j in 0..m {
                t[j] = u[j] * remaining;
                jac *= remaining;
                remaining -= t[j];
            }
            let y = verts.column(0)
                + (0..m).map(|j| e.column(j) * t[j]).fold(DVector::zeros(d), |a, b| a + b);
            let mut val = 1.0;
            for (c, &a) in alpha.iter().enumerate() {
                val *= y[c].powi(i32::from(a));
            }
            total += w * jac * val * detj;
        }
        total
    }

    #[test]
    fn moments_match_quadrature_oracle_2d_and_3d() {
        let tri = DMatrix::from_column_slice(2, 3, &[0.1, -0.2, 0.9, 0.05, 0.3, 0.8]);
        let basis2 = MonomialBasis::get(2, 4);
        for alpha in basis2.exponents() {
            let exact = simplex_monomial_average(&tri, alpha) * simplex_measure(&tri);
            let oracle = duffy_integrate(&tri, alpha);
            assert_relative_eq!(exact, oracle, epsilon = 1e-12, max_relative = 1e-11);
        }
        let tet = DMatrix::from_column_slice(
            3,
            4,
            &[0.0, 0.0, 0.0, 1.0, 0.1, -0.1, 0.2, 0.9, 0.1, 0.15, 0.25, 1.1],
        );
        let basis3 = MonomialBasis::get(3, 3);
        for alpha in basis3.exponents() {
            let exact = simplex_monomial_average(&tet, alpha) * simplex_measure(&tet);
            let oracle = duffy_integrate(&tet, alpha);
            assert_relative_eq!(exact, oracle, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn frames_are_orthonormal_and_deterministic() {
        let e = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let u = orthonormal_frame(&e).unwrap();
        let gram = u.transpose() * &u;
        assert_relative_eq!(gram, DMatrix::identity(2, 2), epsilon = 1e-12);
        // spans the same plane
        let proj = &u * u.transpose() * &e;
        assert_relative_eq!(proj, e, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_edges_are_rejected() {
        let e = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert!(orthonormal_frame(&e).is_err());
    }

    #[test]
    fn zero_cell_has_unit_moment() {
        let cell = CellGeometry::point(DVector::from_column_slice(&[3.0, 4.0]));
        let m = cell.moments(2);
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m[0], 1.0);
    }
}
