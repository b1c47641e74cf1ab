//! A polynomial differential form on one chart, with exact calculus.
//!
//! Coefficients are stored densely as a (monomial × alternator) matrix: the
//! form is `Σ c_{αβ} ŷ^α dy^β` with `ŷ` the scaled frame coordinates and
//! `dy^β` the physical orthonormal coframe.  Because `∂/∂y = (1/h) ∂/∂ŷ` and
//! the radial field is `x − x₀ = h Σ ŷ_i u_i`, the exterior derivative
//! carries an exact `1/h` and the Koszul contraction an exact `h`, while the
//! Hodge star is a signed permutation of alternator columns.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{hodge_star, wedge_sign, Alternator, AlternatorSet};
use crate::mesh::geometry::{AffineEmbed, CellGeometry};
use crate::polyform::monomial::MonomialBasis;

/// Polynomial `k`-form on a `dim`-dimensional chart with length scale
/// `scale`, of polynomial degree ≤ `poly_deg`.
#[derive(Debug, Clone)]
pub struct PolyForm {
    dim: usize,
    degree: usize,
    poly_deg: usize,
    scale: f64,
    /// monomials × alternators, layouts from [`MonomialBasis`] / [`AlternatorSet`].
    coeffs: DMatrix<f64>,
}

impl PolyForm {
    pub fn zero(dim: usize, degree: usize, poly_deg: usize, scale: f64) -> Result<PolyForm> {
        if degree > dim {
            return Err(Error::InvalidDegree(format!(
                "{degree}-form on a {dim}-dimensional chart"
            )));
        }
        let nm = MonomialBasis::get(dim, poly_deg).len();
        let na = AlternatorSet::get(dim, degree).len();
        Ok(PolyForm { dim, degree, poly_deg, scale, coeffs: DMatrix::zeros(nm, na) })
    }

    pub fn from_coeffs(
        dim: usize,
        degree: usize,
        poly_deg: usize,
        scale: f64,
        coeffs: DMatrix<f64>,
    ) -> Result<PolyForm> {
        let mut form = PolyForm::zero(dim, degree, poly_deg, scale)?;
        if coeffs.shape() != form.coeffs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix {:?} for a degree-{degree}, order-{poly_deg} form on \
                 dimension {dim} (want {:?})",
                coeffs.shape(),
                form.coeffs.shape()
            )));
        }
        form.coeffs = coeffs;
        Ok(form)
    }

    /// Constant 0-form.
    pub fn constant(dim: usize, value: f64, scale: f64) -> PolyForm {
        let mut form = PolyForm::zero(dim, 0, 0, scale).expect("0 ≤ dim");
        form.coeffs[(0, 0)] = value;
        form
    }

    /// The unit coefficient form `ŷ^α dy^β` given by basis positions.
    pub fn basis_element(
        dim: usize,
        degree: usize,
        poly_deg: usize,
        scale: f64,
        mono_idx: usize,
        alt_idx: usize,
    ) -> Result<PolyForm> {
        let mut form = PolyForm::zero(dim, degree, poly_deg, scale)?;
        form.coeffs[(mono_idx, alt_idx)] = 1.0;
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn poly_deg(&self) -> usize {
        self.poly_deg
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.coeffs
    }

    pub fn monomials(&self) -> Arc<MonomialBasis> {
        MonomialBasis::get(self.dim, self.poly_deg)
    }

    pub fn alternators(&self) -> Arc<AlternatorSet> {
        AlternatorSet::get(self.dim, self.degree)
    }

    /// Coefficients flattened alternator-major (matching column-major storage).
    pub fn coeff_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.coeffs.as_slice())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// Same form with the polynomial degree bound raised to `poly_deg`.
    /// Smaller-degree monomial layouts are prefixes of larger ones, so this
    /// is zero padding.
    pub fn promoted(&self, poly_deg: usize) -> PolyForm {
        if poly_deg <= self.poly_deg {
            return self.clone();
        }
        let mut out = PolyForm::zero(self.dim, self.degree, poly_deg, self.scale)
            .expect("degree already validated");
        let (nm, na) = self.coeffs.shape();
        out.coeffs.view_mut((0, 0), (nm, na)).copy_from(&self.coeffs);
        out
    }

    pub fn scaled(&self, factor: f64) -> PolyForm {
        let mut out = self.clone();
        out.coeffs *= factor;
        out
    }

    pub fn add(&self, other: &PolyForm) -> Result<PolyForm> {
        self.check_chart(other)?;
        if self.degree != other.degree {
            return Err(Error::InvalidDegree(format!(
                "adding a {}-form to a {}-form",
                other.degree, self.degree
            )));
        }
        let r = self.poly_deg.max(other.poly_deg);
        let mut out = self.promoted(r);
        let o = other.promoted(r);
        out.coeffs += o.coeffs;
        Ok(out)
    }

    pub fn sub(&self, other: &PolyForm) -> Result<PolyForm> {
        self.add(&other.scaled(-1.0))
    }

    fn check_chart(&self, other: &PolyForm) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "charts of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let tol = 1e-12 * self.scale.abs().max(other.scale.abs()).max(1.0);
        if (self.scale - other.scale).abs() > tol {
            return Err(Error::DimensionMismatch(format!(
                "charts with scales {} and {}",
                self.scale, other.scale
            )));
        }
        Ok(())
    }

    /// Exterior derivative. Errors on top-degree forms (the result would not
    /// be representable; it is zero).
    pub fn d(&self) -> Result<PolyForm> {
        if self.degree >= self.dim {
            return Err(Error::InvalidDegree(format!(
                "exterior derivative of a top-degree ({}-) form",
                self.degree
            )));
        }
        let out_poly = self.poly_deg.saturating_sub(1);
        let mut out = PolyForm::zero(self.dim, self.degree + 1, out_poly, self.scale)?;
        let monos = self.monomials();
        let alts = self.alternators();
        let out_monos = out.monomials();
        let out_alts = out.alternators();
        for b in 0..alts.len() {
            let beta = &alts.list[b];
            for m in 0..monos.len() {
                let c = self.coeffs[(m, b)];
                if c == 0.0 {
                    continue;
                }
                let alpha = monos.exponent(m);
                for (i, &ai) in alpha.iter().enumerate() {
                    if ai == 0 {
                        continue;
                    }
                    let di = Alternator::new(vec![i]).expect("singleton");
                    let Some((sign, joined)) = wedge_sign(&di, beta) else { continue };
                    let mut a2 = alpha.to_vec();
                    a2[i] -= 1;
                    let mi = out_monos.position(&a2).expect("degree drops");
                    let bi = out_alts.position(&joined).expect("degree raised by one");
                    out.coeffs[(mi, bi)] += c * f64::from(ai) * f64::from(sign) / self.scale;
                }
            }
        }
        Ok(out)
    }

    /// Koszul contraction with the radial field `x − x₀` of the chart.
    /// Errors on 0-forms (the result would be a (−1)-form; it is zero).
    pub fn koszul(&self) -> Result<PolyForm> {
        if self.degree == 0 {
            return Err(Error::InvalidDegree("Koszul contraction of a 0-form".into()));
        }
        let mut out = PolyForm::zero(self.dim, self.degree - 1, self.poly_deg + 1, self.scale)?;
        let monos = self.monomials();
        let alts = self.alternators();
        let out_monos = out.monomials();
        let out_alts = out.alternators();
        for b in 0..alts.len() {
            let beta = &alts.list[b];
            for m in 0..monos.len() {
                let c = self.coeffs[(m, b)];
                if c == 0.0 {
                    continue;
                }
                let alpha = monos.exponent(m);
                for (j, &idx) in beta.indices().iter().enumerate() {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let mut a2 = alpha.to_vec();
                    a2[idx] += 1;
                    let reduced = beta.without_position(j);
                    let mi = out_monos.position(&a2).expect("degree raised by one");
                    let bi = out_alts.position(&reduced).expect("degree drops");
                    out.coeffs[(mi, bi)] += c * sign * self.scale;
                }
            }
        }
        Ok(out)
    }

    /// Hodge star against the chart's orthonormal coframe and orientation.
    pub fn hodge(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.dim, self.dim - self.degree, self.poly_deg, self.scale)
            .expect("complement degree valid");
        let alts = self.alternators();
        let out_alts = out.alternators();
        for b in 0..alts.len() {
            let (sign, comp) = hodge_star(&alts.list[b], self.dim).expect("valid alternator");
            let bi = out_alts.position(&comp).expect("complement in set");
            let src = self.coeffs.column(b) * f64::from(sign);
            let mut dst = out.coeffs.column_mut(bi);
            dst += src;
        }
        out
    }

    /// The form `ζ` with `⋆ζ = self`: equals `(−1)^{k(d−k)} ⋆ self`.
    pub fn hodge_inv(&self) -> PolyForm {
        let k = self.degree;
        let sign = if (k * (self.dim - k)) % 2 == 0 { 1.0 } else { -1.0 };
        self.hodge().scaled(sign)
    }

    /// Wedge product with a form on the same chart. Errors when the total
    /// degree exceeds the chart dimension (the product is zero there).
    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        self.check_chart(other)?;
        if self.degree + other.degree > self.dim {
            return Err(Error::InvalidDegree(format!(
                "wedge of degrees {} and {} on a {}-dimensional chart",
                self.degree, other.degree, self.dim
            )));
        }
        let mut out = PolyForm::zero(
            self.dim,
            self.degree + other.degree,
            self.poly_deg + other.poly_deg,
            self.scale,
        )?;
        let monos1 = self.monomials();
        let monos2 = other.monomials();
        let alts1 = self.alternators();
        let alts2 = other.alternators();
        let out_monos = out.monomials();
        let out_alts = out.alternators();
        for b1 in 0..alts1.len() {
            for b2 in 0..alts2.len() {
                let Some((sign, joined)) = wedge_sign(&alts1.list[b1], &alts2.list[b2]) else {
                    continue;
                };
                let bo = out_alts.position(&joined).expect("combined degree in range");
                for m1 in 0..monos1.len() {
                    let c1 = self.coeffs[(m1, b1)];
                    if c1 == 0.0 {
                        continue;
                    }
                    let a1 = monos1.exponent(m1);
                    for m2 in 0..monos2.len() {
                        let c2 = other.coeffs[(m2, b2)];
                        if c2 == 0.0 {
                            continue;
                        }
                        let a2 = monos2.exponent(m2);
                        let sum: Vec<u8> = a1.iter().zip(a2).map(|(x, y)| x + y).collect();
                        let mo = out_monos.position(&sum).expect("degree bound is the sum");
                        out.coeffs[(mo, bo)] += c1 * c2 * f64::from(sign);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Pullback along an affine chart inclusion (`self` lives on the parent
    /// chart; the result lives on the child chart). Errors when the form
    /// degree exceeds the child dimension.
    pub fn trace(&self, embed: &AffineEmbed) -> Result<PolyForm> {
        if embed.parent_dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "pullback of a form on dimension {} along an inclusion into dimension {}",
                self.dim,
                embed.parent_dim()
            )));
        }
        let cd = embed.child_dim();
        if self.degree > cd {
            return Err(Error::InvalidDegree(format!(
                "trace of a {}-form onto a {}-dimensional chart",
                self.degree, cd
            )));
        }
        let mut out = PolyForm::zero(cd, self.degree, self.poly_deg, embed.child_scale)?;
        let monos = self.monomials();
        let alts = self.alternators();
        let out_monos = out.monomials();
        let out_alts = out.alternators();
        // substituted monomials, computed lazily per source row
        let mut mono_cache: Vec<Option<Vec<f64>>> = vec![None; monos.len()];
        // alternator pullback: minor determinants of the coframe
        let k = self.degree;
        let mut alt_rows: Vec<Vec<f64>> = Vec::with_capacity(alts.len());
        for beta in &alts.list {
            let mut row = vec![0.0; out_alts.len()];
            for (ci, delta) in out_alts.list.iter().enumerate() {
                let minor = DMatrix::from_fn(k, k, |r, c| {
                    embed.coframe[(beta.indices()[r], delta.indices()[c])]
                });
                row[ci] = minor.determinant();
            }
            alt_rows.push(row);
        }
        for b in 0..alts.len() {
            for m in 0..monos.len() {
                let c = self.coeffs[(m, b)];
                if c == 0.0 {
                    continue;
                }
                if mono_cache[m].is_none() {
                    mono_cache[m] =
                        Some(substitute_affine(monos.exponent(m), embed, &out_monos));
                }
                let poly = mono_cache[m].as_ref().unwrap();
                for (ci, det) in alt_rows[b].iter().enumerate() {
                    if *det == 0.0 {
                        continue;
                    }
                    for (mi, p) in poly.iter().enumerate() {
                        if *p != 0.0 {
                            out.coeffs[(mi, ci)] += c * p * det;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// L² inner product over a cell whose chart this form lives on. The
    /// orthonormal coframe makes alternators orthonormal pointwise, so this
    /// reduces to monomial moments.
    pub fn inner_product(&self, other: &PolyForm, cell: &CellGeometry) -> Result<f64> {
        self.check_chart(other)?;
        if self.degree != other.degree {
            return Err(Error::InvalidDegree(format!(
                "inner product of a {}-form with a {}-form",
                self.degree, other.degree
            )));
        }
        if cell.dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "form on a {}-dimensional chart integrated over a {}-cell",
                self.dim, cell.dim
            )));
        }
        let monos1 = self.monomials();
        let monos2 = other.monomials();
        let big = MonomialBasis::get(self.dim, self.poly_deg + other.poly_deg);
        let moments = cell.moments(self.poly_deg + other.poly_deg);
        let mut acc = 0.0;
        for b in 0..self.coeffs.ncols() {
            for m1 in 0..monos1.len() {
                let c1 = self.coeffs[(m1, b)];
                if c1 == 0.0 {
                    continue;
                }
                let a1 = monos1.exponent(m1);
                for m2 in 0..monos2.len() {
                    let c2 = other.coeffs[(m2, b)];
                    if c2 == 0.0 {
                        continue;
                    }
                    let a2 = monos2.exponent(m2);
                    let sum: Vec<u8> = a1.iter().zip(a2).map(|(x, y)| x + y).collect();
                    let pos = big.position(&sum).expect("sum within degree bound");
                    acc += c1 * c2 * moments[pos];
                }
            }
        }
        Ok(acc)
    }

    pub fn norm(&self, cell: &CellGeometry) -> Result<f64> {
        Ok(self.inner_product(self, cell)?.max(0.0).sqrt())
    }

    /// Integral over the cell; requires a top-degree form on the cell's chart
    /// (for 0-cells this is evaluation at the point).
    pub fn integral(&self, cell: &CellGeometry) -> Result<f64> {
        if self.degree != self.dim || cell.dim != self.dim {
            return Err(Error::InvalidDegree(format!(
                "integral of a {}-form over a {}-cell on a {}-dimensional chart",
                self.degree, cell.dim, self.dim
            )));
        }
        let moments = cell.moments(self.poly_deg);
        let mut acc = 0.0;
        for m in 0..self.coeffs.nrows() {
            acc += self.coeffs[(m, 0)] * moments[m];
        }
        Ok(acc)
    }

    /// Evaluates the coefficient functions at a point in scaled coordinates,
    /// returning one value per alternator.
    pub fn eval(&self, yhat: &DVector<f64>) -> DVector<f64> {
        let monos = self.monomials();
        let mono_vals: Vec<f64> = (0..monos.len())
            .map(|m| {
                monos
                    .exponent(m)
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| yhat[i].powi(i32::from(e)))
                    .product()
            })
            .collect();
        DVector::from_fn(self.coeffs.ncols(), |b, _| {
            (0..monos.len()).map(|m| self.coeffs[(m, b)] * mono_vals[m]).sum()
        })
    }
}

/// Expands `ŷ_parent^α` under `ŷ_parent = shift + linear·ŷ_child` into a
/// dense coefficient vector over the child monomial basis.
fn substitute_affine(alpha: &[u8], embed: &AffineEmbed, out_monos: &MonomialBasis) -> Vec<f64> {
    let cd = embed.child_dim();
    let mut poly = vec![0.0; out_monos.len()];
    poly[0] = 1.0;
    for (i, &ai) in alpha.iter().enumerate() {
        for _ in 0..ai {
            let mut next = vec![0.0; out_monos.len()];
            for (idx, coef) in poly.iter().enumerate() {
                if *coef == 0.0 {
                    continue;
                }
                let gamma = out_monos.exponent(idx);
                if embed.shift[i] != 0.0 {
                    next[idx] += coef * embed.shift[i];
                }
                for j in 0..cd {
                    let lin = embed.linear[(i, j)];
                    if lin == 0.0 {
                        continue;
                    }
                    let mut g = gamma.to_vec();
                    g[j] += 1;
                    let pos = out_monos
                        .position(&g)
                        .expect("affine substitution preserves total degree");
                    next[pos] += coef * lin;
                }
            }
            poly = next;
        }
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::geometry::{Frame, MemberSimplex};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn chart_form(dim: usize, degree: usize, poly_deg: usize, scale: f64, seed: u64) -> PolyForm {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut form = PolyForm::zero(dim, degree, poly_deg, scale).unwrap();
        for c in form.coeffs_mut().iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        form
    }

    fn square_cell(scale: f64) -> CellGeometry {
        // unit square [0,1]² as two triangles, chart scale as given
        let frame =
            Frame { origin: DVector::zeros(2), basis: DMatrix::identity(2, 2), scale };
        let t1 = DMatrix::from_column_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0]) / scale;
        let t2 = DMatrix::from_column_slice(2, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0]) / scale;
        let members = vec![
            MemberSimplex { verts: t1, measure: 0.5, orientation: 1 },
            MemberSimplex { verts: t2, measure: 0.5, orientation: 1 },
        ];
        CellGeometry::new(frame, 2f64.sqrt(), members)
    }

    #[test]
    fn derivative_of_linear_0_form() {
        // f = ŷ₀ on a chart with scale h: df = (1/h) dy⁰
        let mut f = PolyForm::zero(2, 0, 1, 2.0).unwrap();
        let monos = f.monomials();
        let i = monos.position(&[1, 0]).unwrap();
        f.coeffs_mut()[(i, 0)] = 1.0;
        let df = f.d().unwrap();
        assert_eq!(df.degree(), 1);
        assert_relative_eq!(df.coeffs()[(0, 0)], 0.5);
        assert_relative_eq!(df.coeffs()[(0, 1)], 0.0);
    }

    #[test]
    fn d_squared_is_zero() {
        for dim in 2usize..=3 {
            for degree in 0..dim.saturating_sub(1) {
                let f = chart_form(dim, degree, 3, 0.7, 42 + degree as u64);
                let ddf = f.d().unwrap().d().unwrap();
                assert!(ddf.max_abs() <= 1e-12, "dd ≠ 0 at dim {dim} degree {degree}");
            }
        }
    }

    #[test]
    fn koszul_squared_is_zero() {
        for dim in 2..=3 {
            for degree in 2..=dim {
                let f = chart_form(dim, degree, 3, 1.3, 7 + degree as u64);
                let kkf = f.koszul().unwrap().koszul().unwrap();
                assert!(kkf.max_abs() <= 1e-12, "κκ ≠ 0 at dim {dim} degree {degree}");
            }
        }
    }

    #[test]
    fn homotopy_identity_on_homogeneous_forms() {
        // (dκ + κd) ŷ^α dy^β = (|α| + k) ŷ^α dy^β
        for dim in 1..=3usize {
            for degree in 0..=dim {
                let monos = MonomialBasis::get(dim, 3);
                let alts = AlternatorSet::get(dim, degree);
                for m in 0..monos.len() {
                    for b in 0..alts.len() {
                        let f = PolyForm::basis_element(dim, degree, 3, 0.8, m, b).unwrap();
                        let t = monos.degree_of(m) + degree;
                        let mut acc = PolyForm::zero(dim, degree, 4, 0.8).unwrap();
                        if degree > 0 {
                            acc = acc.add(&f.koszul().unwrap().d().unwrap()).unwrap();
                        }
                        if degree < dim {
                            acc = acc.add(&f.d().unwrap().koszul().unwrap()).unwrap();
                        }
                        let expect = f.scaled(t as f64).promoted(acc.poly_deg());
                        assert!(
                            acc.sub(&expect).unwrap().max_abs() <= 1e-12,
                            "homotopy fails at dim {dim} degree {degree} mono {m}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hodge_inverts_and_preserves_norm() {
        let cell = square_cell(1.0);
        for degree in 0..=2usize {
            let f = chart_form(2, degree, 2, 1.0, 99 + degree as u64);
            let roundtrip = f.hodge_inv().hodge();
            assert!(f.sub(&roundtrip).unwrap().max_abs() <= 1e-13);
            // star is a pointwise isometry
            let starred = f.hodge();
            assert_relative_eq!(
                f.norm(&cell).unwrap(),
                starred.norm(&cell).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn wedge_against_pointwise_oracle() {
        // (a dy⁰ + b ŷ₀ dy¹) ∧ (c ŷ₁ dy⁰ + e dy¹)
        //   = (a e − b c ŷ₀ ŷ₁) dy⁰∧dy¹
        let mut f = PolyForm::zero(2, 1, 1, 1.0).unwrap();
        let monos = MonomialBasis::get(2, 1);
        f.coeffs_mut()[(0, 0)] = 2.0; // a = 2
        f.coeffs_mut()[(monos.position(&[1, 0]).unwrap(), 1)] = 3.0; // b = 3
        let mut g = PolyForm::zero(2, 1, 1, 1.0).unwrap();
        g.coeffs_mut()[(monos.position(&[0, 1]).unwrap(), 0)] = 5.0; // c = 5
        g.coeffs_mut()[(0, 1)] = 7.0; // e = 7
        let w = f.wedge(&g).unwrap();
        let big = w.monomials();
        assert_relative_eq!(w.coeffs()[(0, 0)], 14.0);
        assert_relative_eq!(w.coeffs()[(big.position(&[1, 1]).unwrap(), 0)], -15.0);
        // antisymmetry of the 1-form wedge
        let wr = g.wedge(&f).unwrap();
        assert!(w.add(&wr).unwrap().max_abs() <= 1e-13);
    }

    #[test]
    fn trace_commutes_with_d() {
        // pullback along an affine inclusion of a line into the plane
        let parent = Frame {
            origin: DVector::from_column_slice(&[0.3, -0.1]),
            basis: DMatrix::identity(2, 2),
            scale: 2.0,
        };
        let dir = DVector::from_column_slice(&[3.0, 4.0]) / 5.0;
        let child = Frame {
            origin: DVector::from_column_slice(&[1.0, 0.5]),
            basis: DMatrix::from_column_slice(2, 1, dir.as_slice()),
            scale: 0.5,
        };
        let embed = parent.embed(&child);
        let f = chart_form(2, 0, 3, 2.0, 5);
        let lhs = f.d().unwrap().trace(&embed).unwrap();
        let rhs = f.trace(&embed).unwrap().d().unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12, "trace does not commute with d");
    }

    #[test]
    fn trace_composes_along_nested_charts() {
        let parent = Frame {
            origin: DVector::from_column_slice(&[0.1, 0.2, -0.3]),
            basis: DMatrix::identity(3, 3),
            scale: 1.5,
        };
        let mid_basis = crate::mesh::geometry::orthonormal_frame(&DMatrix::from_column_slice(
            3,
            2,
            &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
        ))
        .unwrap();
        let mid = Frame {
            origin: DVector::from_column_slice(&[0.5, 0.5, 0.0]),
            basis: mid_basis.clone(),
            scale: 0.9,
        };
        let leaf_dir = mid_basis.column(0) * 0.6 + mid_basis.column(1) * 0.8;
        let leaf_origin = &mid.origin + mid_basis.column(0) * 0.2 + mid_basis.column(1) * 0.3;
        let leaf = Frame {
            origin: leaf_origin,
            basis: DMatrix::from_column_slice(3, 1, leaf_dir.as_slice()),
            scale: 0.4,
        };
        let f = chart_form(3, 1, 2, 1.5, 11);
        let direct = f.trace(&parent.embed(&leaf)).unwrap();
        let nested =
            f.trace(&parent.embed(&mid)).unwrap().trace(&mid.embed(&leaf)).unwrap();
        assert!(direct.sub(&nested).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn integral_of_volume_form_is_measure() {
        let cell = square_cell(2.0);
        // vol = dy⁰∧dy¹ (physical coframe): ∫ = area
        let mut vol = PolyForm::zero(2, 2, 0, 2.0).unwrap();
        vol.coeffs_mut()[(0, 0)] = 1.0;
        assert_relative_eq!(vol.integral(&cell).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn inner_product_matches_hand_computation() {
        // on the unit square with scale 1: ⟨ŷ₀ dy⁰, ŷ₁ dy⁰⟩ = ∫ xy = 1/4
        let cell = square_cell(1.0);
        let monos = MonomialBasis::get(2, 1);
        let mut f = PolyForm::zero(2, 1, 1, 1.0).unwrap();
        f.coeffs_mut()[(monos.position(&[1, 0]).unwrap(), 0)] = 1.0;
        let mut g = PolyForm::zero(2, 1, 1, 1.0).unwrap();
        g.coeffs_mut()[(monos.position(&[0, 1]).unwrap(), 0)] = 1.0;
        assert_relative_eq!(f.inner_product(&g, &cell).unwrap(), 0.25, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn wedge_graded_antisymmetry(seed1 in 0u64..500, seed2 in 0u64..500) {
            let f = chart_form(3, 1, 2, 1.0, seed1);
            let g = chart_form(3, 2, 2, 1.0, seed2);
            let fg = f.wedge(&g).unwrap();
            let gf = g.wedge(&f).unwrap();
            // (−1)^{1·2} = +1
            prop_assert!(fg.sub(&gf).unwrap().max_abs() <= 1e-12);
        }

        #[test]
        fn leibniz_rule(seed1 in 0u64..500, seed2 in 0u64..500) {
            let f = chart_form(3, 1, 2, 0.8, seed1);
            let g = chart_form(3, 1, 2, 0.8, seed2);
            let lhs = f.wedge(&g).unwrap().d().unwrap();
            let rhs = f.d().unwrap().wedge(&g).unwrap()
                .sub(&f.wedge(&g.d().unwrap()).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-11);
        }
    }
}
