//! Whitney forms on the simplicial submesh.
//!
//! The degree-`k` Whitney space has one basis form per `k`-simplex,
//! `φ_σ = Σ_p ±λ_p dλ_{σ∖p}`, piecewise polynomial over the top-dimensional
//! simplices. It carries two structure maps: the interpolation `W` taking a
//! simplicial cochain to a piecewise form, and the de Rham map `R`
//! integrating a piecewise form over each `k`-simplex, normalized so that
//! `R∘W = id`. The normalizing constant (the integral of a basis form over
//! its own simplex) is measured per degree and checked for consistency
//! rather than assumed.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::AlternatorSet;
use crate::linalg::{cholesky_spd, kernel_basis};
use crate::mesh::geometry::{diameter, orthonormal_frame, CellGeometry, Frame, MemberSimplex};
use crate::mesh::Mesh;
use crate::polyform::PolyForm;
use crate::topology::coboundary_preimage;

/// Chart geometry of a single simplex: an orthonormal frame with origin at
/// the barycenter, reflected if needed so the stored vertex order is
/// positively oriented in the chart.
pub fn simplex_geometry(mesh: &Mesh, k: usize, s: usize) -> Result<CellGeometry> {
    let coords = mesh.simplex_coords(k, s);
    let points: Vec<DVector<f64>> = coords.column_iter().map(|c| c.into_owned()).collect();
    if k == 0 {
        return Ok(CellGeometry::point(points[0].clone()));
    }
    let mut edges = DMatrix::zeros(mesh.ambient_dim(), k);
    for j in 0..k {
        edges.set_column(j, &(&points[j + 1] - &points[0]));
    }
    let mut basis = orthonormal_frame(&edges)?;
    if (basis.transpose() * &edges).determinant() < 0.0 {
        let flipped = -basis.column(k - 1).into_owned();
        basis.set_column(k - 1, &flipped);
    }
    let origin = points.iter().sum::<DVector<f64>>() / points.len() as f64;
    let h = diameter(&points);
    let frame = Frame { origin, basis, scale: h };
    let mut local = DMatrix::zeros(k, k + 1);
    for (j, p) in points.iter().enumerate() {
        local.set_column(j, &frame.local(p));
    }
    let measure = crate::mesh::geometry::simplex_measure(&coords);
    let members = vec![MemberSimplex { verts: local, measure, orientation: 1 }];
    Ok(CellGeometry::new(frame, h, members))
}

/// Barycentric coordinates of a chart simplex as affine forms of the scaled
/// chart coordinates.
pub fn barycentric_forms(chart: &CellGeometry) -> Result<Vec<PolyForm>> {
    let d = chart.dim;
    let verts = &chart.members[0].verts;
    // rows: conditions λ(v_i) = δ_ij, unknowns: d slope entries and offset
    let mut a = DMatrix::zeros(d + 1, d + 1);
    for i in 0..=d {
        for j in 0..d {
            a[(i, j)] = verts[(j, i)];
        }
        a[(i, d)] = 1.0;
    }
    let lu = a.lu();
    let mut out = Vec::with_capacity(d + 1);
    for j in 0..=d {
        let mut rhs = DVector::zeros(d + 1);
        rhs[j] = 1.0;
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solve("degenerate simplex for barycentric coordinates".into()))?;
        let mut form = PolyForm::zero(d, 0, 1, chart.frame.scale)?;
        let monos = form.monomials();
        let constant = monos.position(&vec![0u8; d]).expect("constant monomial");
        let mut linear = Vec::with_capacity(d);
        for v in 0..d {
            let mut exp = vec![0u8; d];
            exp[v] = 1;
            linear.push(monos.position(&exp).expect("linear monomial"));
        }
        form.coeffs_mut()[(constant, 0)] = sol[d];
        for v in 0..d {
            form.coeffs_mut()[(linear[v], 0)] = sol[v];
        }
        out.push(form);
    }
    Ok(out)
}

/// The Whitney form of the vertex tuple `positions` (indices into the
/// chart's vertex list, in the orientation-defining order).
///
/// The k! factor makes interpolation commute with the exterior derivative
/// and normalises the self-integral over the simplex to one.
pub fn whitney_form(chart: &CellGeometry, positions: &[usize]) -> Result<PolyForm> {
    let lambda = barycentric_forms(chart)?;
    let d = chart.dim;
    let k = positions.len() - 1;
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let mut total = PolyForm::zero(d, k, 1, chart.frame.scale)?;
    for omit in 0..positions.len() {
        let mut term = lambda[positions[omit]].clone();
        if omit % 2 == 1 {
            term = term.scaled(-1.0);
        }
        for (j, &p) in positions.iter().enumerate() {
            if j != omit {
                term = term.wedge(&lambda[p].d()?)?;
            }
        }
        total = total.add(&term)?;
    }
    Ok(total.scaled(factorial))
}

/// The global Whitney space of one degree on a mesh.
pub struct WhitneySpace {
    degree: usize,
    /// Charts of the top-dimensional simplices.
    charts: Vec<CellGeometry>,
    /// Charts of the k-simplices (integration domains of the de Rham map).
    face_charts: Vec<CellGeometry>,
    /// Per top simplex: the global ids of its k-faces.
    faces: Vec<Vec<usize>>,
    /// Per top simplex: the local basis forms matching `faces`.
    forms: Vec<Vec<PolyForm>>,
    /// Per k-simplex: the top simplices containing it, ascending.
    adjacency: Vec<Vec<usize>>,
    /// Measured self-integral of a basis form over its own simplex.
    diagonal: f64,
    gram: DMatrix<f64>,
}

impl WhitneySpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<WhitneySpace> {
        let n = mesh.dim();
        if degree > n {
            return Err(Error::InvalidDegree(format!(
                "Whitney degree {degree} exceeds mesh dimension {n}"
            )));
        }
        let k = degree;
        let tops = mesh.simplex_count(n);
        let nk = mesh.simplex_count(k);
        let mut charts = Vec::with_capacity(tops);
        let mut faces: Vec<Vec<usize>> = Vec::with_capacity(tops);
        let mut forms: Vec<Vec<PolyForm>> = Vec::with_capacity(tops);
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nk];
        let subsets = AlternatorSet::get(n + 1, k + 1);
        for t in 0..tops {
            let chart = simplex_geometry(mesh, n, t)?;
            let verts = &mesh.simplices(n)[t].verts;
            let mut t_faces = Vec::with_capacity(subsets.len());
            let mut t_forms = Vec::with_capacity(subsets.len());
            for subset in &subsets.list {
                let tuple: Vec<usize> = subset.indices().iter().map(|&i| verts[i]).collect();
                let f = mesh
                    .simplex_by_verts(k, &tuple)
                    .ok_or_else(|| Error::Parse(format!("missing {k}-face of top simplex {t}")))?;
                // positions of the face's STORED vertex order inside the top
                // simplex, so the form carries the face's own orientation
                let positions: Vec<usize> = mesh.simplices(k)[f]
                    .verts
                    .iter()
                    .map(|v| verts.iter().position(|w| w == v).expect("face vertex"))
                    .collect();
                t_faces.push(f);
                t_forms.push(whitney_form(&chart, &positions)?);
                adjacency[f].push(t);
            }
            charts.push(chart);
            faces.push(t_faces);
            forms.push(t_forms);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            if list.is_empty() {
                return Err(Error::invariant(
                    crate::error::InvariantKind::Conformity,
                    "a simplex lies in no top-dimensional simplex",
                ));
            }
        }
        let face_charts: Vec<CellGeometry> =
            (0..nk).map(|f| simplex_geometry(mesh, k, f)).collect::<Result<_>>()?;
        // global Gram
        let mut gram = DMatrix::zeros(nk, nk);
        for t in 0..tops {
            for (i, &fi) in faces[t].iter().enumerate() {
                for (j, &fj) in faces[t].iter().enumerate() {
                    if fi <= fj {
                        let v = forms[t][i].inner_product(&forms[t][j], &charts[t])?;
                        gram[(fi, fj)] += v;
                        if fi != fj {
                            gram[(fj, fi)] += v;
                        }
                    }
                }
            }
        }
        let mut space = WhitneySpace {
            degree,
            charts,
            face_charts,
            faces,
            forms,
            adjacency,
            diagonal: 0.0,
            gram,
        };
        // measure the de Rham normalization and insist it is uniform
        let mut diag = None;
        for f in 0..nk {
            let t = space.adjacency[f][0];
            let i = space.faces[t].iter().position(|&x| x == f).expect("face of its top simplex");
            let v = space.integrate_over_face(&space.forms[t][i], t, f)?;
            match diag {
                None => diag = Some(v),
                Some(prev) => {
                    if (v - prev).abs() > 1e-10 * prev.abs().max(1.0) {
                        return Err(Error::IllConditioned(format!(
                            "de Rham diagonal varies across simplices: {prev:.3e} vs {v:.3e}"
                        )));
                    }
                }
            }
        }
        space.diagonal = diag.ok_or_else(|| {
            Error::InvalidDegree(format!("mesh has no {k}-simplices"))
        })?;
        Ok(space)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of global basis forms (= number of k-simplices).
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Measured normalization constant of the de Rham map.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn chart(&self, t: usize) -> &CellGeometry {
        &self.charts[t]
    }

    /// Global ids of the k-faces of top simplex `t`.
    pub fn faces_of(&self, t: usize) -> &[usize] {
        &self.faces[t]
    }

    /// ∫ over face `f` of the trace of a form living on top simplex `t`.
    fn integrate_over_face(&self, form: &PolyForm, t: usize, f: usize) -> Result<f64> {
        let embed = self.charts[t].frame.embed(&self.face_charts[f].frame);
        form.trace(&embed)?.integral(&self.face_charts[f])
    }

    /// Interpolation `W`: cochain coefficients to one form per top simplex.
    pub fn whitney_map(&self, cochain: &DVector<f64>) -> Result<Vec<PolyForm>> {
        if cochain.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "cochain has {} entries, space has {}",
                cochain.len(),
                self.len()
            )));
        }
        let n = self.charts.first().map_or(0, |c| c.dim);
        let mut out = Vec::with_capacity(self.charts.len());
        for t in 0..self.charts.len() {
            let mut acc = PolyForm::zero(n, self.degree, 1, self.charts[t].frame.scale)?;
            for (i, &f) in self.faces[t].iter().enumerate() {
                if cochain[f] != 0.0 {
                    acc = acc.add(&self.forms[t][i].scaled(cochain[f]))?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// De Rham map `R`: integrate the piecewise form over every k-simplex
    /// (using its lowest-id top simplex) and divide by the measured diagonal.
    pub fn de_rham(&self, forms: &[PolyForm]) -> Result<DVector<f64>> {
        if forms.len() != self.charts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} forms for {} top simplices",
                forms.len(),
                self.charts.len()
            )));
        }
        let mut out = DVector::zeros(self.len());
        for f in 0..self.len() {
            let t = self.adjacency[f][0];
            out[f] = self.integrate_over_face(&forms[t], t, f)? / self.diagonal;
        }
        Ok(out)
    }

    /// Largest mismatch of face integrals between the different top
    /// simplices sharing a face: zero for a conforming piecewise form.
    pub fn trace_jump(&self, forms: &[PolyForm]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for f in 0..self.len() {
            let vals: Vec<f64> = self.adjacency[f]
                .iter()
                .map(|&t| self.integrate_over_face(&forms[t], t, f))
                .collect::<Result<_>>()?;
            for v in &vals {
                worst = worst.max((v - vals[0]).abs());
            }
        }
        Ok(worst)
    }

    /// Derivative of a piecewise form, top simplex by top simplex.
    pub fn derivative(&self, forms: &[PolyForm]) -> Result<Vec<PolyForm>> {
        forms.iter().map(PolyForm::d).collect()
    }

    /// Squared Whitney energy of a cochain.
    pub fn energy(&self, cochain: &DVector<f64>) -> f64 {
        (cochain.transpose() * &self.gram * cochain)[(0, 0)]
    }

    /// The cochain `c` minimizing the Whitney energy `‖W(c)‖²` subject to
    /// `δc = target`, where `coboundary` is the simplicial coboundary matrix
    /// out of this degree.
    pub fn min_energy_preimage(
        &self,
        coboundary: &DMatrix<f64>,
        target: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let c0 = coboundary_preimage(coboundary, target)?;
        let kernel = kernel_basis(coboundary, crate::RANK_TOL);
        if kernel.ncols() == 0 {
            return Ok(c0);
        }
        let kgk = kernel.transpose() * &self.gram * &kernel;
        let rhs = kernel.transpose() * &self.gram * &c0;
        let chol = cholesky_spd(&kgk, "whitney energy reduction")?;
        let y = chol.solve(&rhs);
        Ok(c0 - kernel * y)
    }

    /// Cholesky factor of the global Gram (the space is a genuine basis).
    pub fn gram_cholesky(&self) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        cholesky_spd(&self.gram, "whitney gram")
    }
}
