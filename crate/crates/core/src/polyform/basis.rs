//! Full and trimmed polynomial form spaces on a cell chart.
//!
//! [`FullBasis`] is the tensor basis `{ŷ^α dy^β}` of `P_rΛ^k`; its L² Gram
//! on a cell is block diagonal (one monomial moment block per alternator).
//! [`TrimmedBasis`] realizes the reduced space `P_rΛ^0` (for `k = 0`) or
//! `d P_rΛ^{k−1} + κ P_{r−1}Λ^{k+1}` (for `k ≥ 1`), selecting an independent
//! generator set by greedy pivoted-Cholesky against the cell's Gram — the
//! derivative block first, then the Koszul block — so every basis knows which
//! of its generators are exact.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::{binomial, AlternatorSet};
use crate::linalg::cholesky_spd;
use crate::mesh::geometry::CellGeometry;
use crate::polyform::form::PolyForm;
use crate::polyform::monomial::MonomialBasis;
use crate::RANK_TOL;

/// Cross-moment matrix `∫ ŷ^{α+α'} dx` between monomial bases of degrees
/// `r1` and `r2` on a cell.
pub fn mono_moment_matrix(cell: &CellGeometry, r1: usize, r2: usize) -> DMatrix<f64> {
    let b1 = MonomialBasis::get(cell.dim, r1);
    let b2 = MonomialBasis::get(cell.dim, r2);
    let big = MonomialBasis::get(cell.dim, r1 + r2);
    let moments = cell.moments(r1 + r2);
    DMatrix::from_fn(b1.len(), b2.len(), |i, j| {
        let sum: Vec<u8> =
            b1.exponent(i).iter().zip(b2.exponent(j)).map(|(a, b)| a + b).collect();
        moments[big.position(&sum).expect("sum within combined degree bound")]
    })
}

/// The monomial × alternator tensor basis of `P_rΛ^k` on a chart.
///
/// Coefficient vectors are alternator-major: index `i = a·n_mono + m`.
#[derive(Debug, Clone)]
pub struct FullBasis {
    dim: usize,
    degree: usize,
    poly_deg: usize,
    scale: f64,
    n_mono: usize,
    n_alt: usize,
}

impl FullBasis {
    pub fn new(dim: usize, degree: usize, poly_deg: usize, scale: f64) -> Result<FullBasis> {
        if degree > dim {
            return Err(Error::InvalidDegree(format!(
                "{degree}-forms on a {dim}-dimensional chart"
            )));
        }
        let n_mono = MonomialBasis::get(dim, poly_deg).len();
        let n_alt = AlternatorSet::get(dim, degree).len();
        Ok(FullBasis { dim, degree, poly_deg, scale, n_mono, n_alt })
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

    pub fn len(&self) -> usize {
        self.n_mono * self.n_alt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self, i: usize) -> PolyForm {
        PolyForm::basis_element(
            self.dim,
            self.degree,
            self.poly_deg,
            self.scale,
            i % self.n_mono,
            i / self.n_mono,
        )
        .expect("index within basis")
    }

    pub fn form_from_vec(&self, v: &DVector<f64>) -> PolyForm {
        let coeffs = DMatrix::from_column_slice(self.n_mono, self.n_alt, v.as_slice());
        PolyForm::from_coeffs(self.dim, self.degree, self.poly_deg, self.scale, coeffs)
            .expect("shape by construction")
    }

    /// Coefficient vector of a form of the same degree with `poly_deg` not
    /// exceeding this basis's bound.
    pub fn vec_from_form(&self, f: &PolyForm) -> Result<DVector<f64>> {
        if f.dim() != self.dim || f.degree() != self.degree {
            return Err(Error::DimensionMismatch(format!(
                "form of degree {} on dimension {} against a basis of degree {} on dimension {}",
                f.degree(),
                f.dim(),
                self.degree,
                self.dim
            )));
        }
        if f.poly_deg() > self.poly_deg {
            return Err(Error::DimensionMismatch(format!(
                "form of polynomial order {} exceeds basis order {}",
                f.poly_deg(),
                self.poly_deg
            )));
        }
        Ok(f.promoted(self.poly_deg).coeff_vector())
    }

    /// L² Gram on the cell: `I_{n_alt} ⊗ M` with `M` the monomial moments.
    pub fn gram(&self, cell: &CellGeometry) -> DMatrix<f64> {
        let m = mono_moment_matrix(cell, self.poly_deg, self.poly_deg);
        let nm = self.n_mono;
        DMatrix::from_fn(self.len(), self.len(), |i, j| {
            if i / nm == j / nm {
                m[(i % nm, j % nm)]
            } else {
                0.0
            }
        })
    }

    /// Inner products of every basis element with a form of the same degree.
    pub fn inner_with(&self, f: &PolyForm, cell: &CellGeometry) -> Result<DVector<f64>> {
        if f.dim() != self.dim || f.degree() != self.degree || cell.dim != self.dim {
            return Err(Error::DimensionMismatch(
                "inner products need matching chart dimension and form degree".into(),
            ));
        }
        let m_cross = mono_moment_matrix(cell, self.poly_deg, f.poly_deg());
        let mut w = DVector::zeros(self.len());
        for a in 0..self.n_alt {
            let block = &m_cross * f.coeffs().column(a);
            w.rows_mut(a * self.n_mono, self.n_mono).copy_from(&block);
        }
        Ok(w)
    }

    /// Matrix of the exterior derivative into `P_{r−1}Λ^{k+1}`.
    pub fn d_matrix(&self) -> Result<(FullBasis, DMatrix<f64>)> {
        let cod =
            FullBasis::new(self.dim, self.degree + 1, self.poly_deg.saturating_sub(1), self.scale)?;
        let mut mat = DMatrix::zeros(cod.len(), self.len());
        for i in 0..self.len() {
            mat.set_column(i, &cod.vec_from_form(&self.element(i).d()?)?);
        }
        Ok((cod, mat))
    }

    /// Matrix of the Koszul contraction into `P_{r+1}Λ^{k−1}`.
    pub fn koszul_matrix(&self) -> Result<(FullBasis, DMatrix<f64>)> {
        if self.degree == 0 {
            return Err(Error::InvalidDegree("Koszul contraction of 0-forms".into()));
        }
        let cod = FullBasis::new(self.dim, self.degree - 1, self.poly_deg + 1, self.scale)?;
        let mut mat = DMatrix::zeros(cod.len(), self.len());
        for i in 0..self.len() {
            mat.set_column(i, &cod.vec_from_form(&self.element(i).koszul()?)?);
        }
        Ok((cod, mat))
    }
}

/// Dimension of the trimmed space of `k`-forms of order `r` on a
/// `d`-dimensional chart.
pub fn trimmed_dim(d: usize, k: usize, r: usize) -> usize {
    if r == 0 {
        return usize::from(k == 0);
    }
    binomial(r + d, d - k) * binomial(r + k - 1, k)
}

/// A basis of the trimmed space on one cell: `P_rΛ^0` for `k = 0`, otherwise
/// `d P_rΛ^{k−1} + κ P_{r−1}Λ^{k+1}` with generators selected greedily
/// against the cell's L² Gram, derivative block first.
#[derive(Debug, Clone)]
pub struct TrimmedBasis {
    full: FullBasis,
    /// Generator coefficients in the full basis, one column per generator.
    coeffs: DMatrix<f64>,
    /// Number of leading generators drawn from the derivative block.
    d_count: usize,
    /// L² Gram of the generators on the construction cell.
    gram: DMatrix<f64>,
}

impl TrimmedBasis {
    pub fn new(cell: &CellGeometry, degree: usize, poly_deg: usize) -> Result<TrimmedBasis> {
        let dim = cell.dim;
        let scale = cell.frame.scale;
        let full = FullBasis::new(dim, degree, poly_deg, scale)?;
        if degree == 0 {
            let n = full.len();
            let gram = full.gram(cell);
            return Ok(TrimmedBasis { full, coeffs: DMatrix::identity(n, n), d_count: n, gram });
        }
        if poly_deg == 0 {
            let n = full.len();
            return Ok(TrimmedBasis {
                full,
                coeffs: DMatrix::zeros(n, 0),
                d_count: 0,
                gram: DMatrix::zeros(0, 0),
            });
        }
        // Candidate generators: derivatives first, then Koszul images.
        let pre = FullBasis::new(dim, degree - 1, poly_deg, scale)?;
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for i in 0..pre.len() {
            cols.push(full.vec_from_form(&pre.element(i).d()?)?);
        }
        let n_d_cand = cols.len();
        if degree < dim {
            let post = FullBasis::new(dim, degree + 1, poly_deg - 1, scale)?;
            for i in 0..post.len() {
                cols.push(full.vec_from_form(&post.element(i).koszul()?)?);
            }
        }
        let ncand = cols.len();
        let mut cmat = DMatrix::zeros(full.len(), ncand);
        for (j, c) in cols.iter().enumerate() {
            cmat.set_column(j, c);
        }
        let gfull = full.gram(cell);
        let mut gcand = cmat.transpose() * &gfull * &cmat;
        // normalize candidates so pivoting compares like with like
        for j in 0..ncand {
            let dj = gcand[(j, j)];
            if dj > 0.0 {
                let s = 1.0 / dj.sqrt();
                let col = cmat.column(j) * s;
                cmat.set_column(j, &col);
            }
        }
        gcand = cmat.transpose() * &gfull * &cmat;
        let (selected, d_count) =
            pivoted_selection(&gcand, n_d_cand, RANK_TOL);
        let expected = trimmed_dim(dim, degree, poly_deg);
        if selected.len() != expected {
            return Err(Error::IllConditioned(format!(
                "trimmed basis selection found {} generators, expected {} \
                 (degree {degree}, order {poly_deg}, dimension {dim})",
                selected.len(),
                expected
            )));
        }
        let mut coeffs = DMatrix::zeros(full.len(), selected.len());
        for (i, &s) in selected.iter().enumerate() {
            coeffs.set_column(i, &cmat.column(s));
        }
        let gram =
            DMatrix::from_fn(selected.len(), selected.len(), |i, j| gcand[(selected[i], selected[j])]);
        Ok(TrimmedBasis { full, coeffs, d_count, gram })
    }

    pub fn full(&self) -> &FullBasis {
        &self.full
    }

    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of leading generators lying in the exact (derivative) block.
    pub fn d_count(&self) -> usize {
        self.d_count
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Generator coefficients over the full basis, one column per generator.
    pub fn generator_coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn element(&self, i: usize) -> PolyForm {
        self.full.form_from_vec(&self.coeffs.column(i).into_owned())
    }

    pub fn form_from_coeffs(&self, v: &DVector<f64>) -> PolyForm {
        self.full.form_from_vec(&(&self.coeffs * v))
    }

    /// L² projection of a form (same degree, any polynomial order up to the
    /// moment data available) onto this space.
    pub fn project(&self, f: &PolyForm, cell: &CellGeometry) -> Result<DVector<f64>> {
        if self.is_empty() {
            return Ok(DVector::zeros(0));
        }
        let w = self.full.inner_with(f, cell)?;
        let b = self.coeffs.transpose() * w;
        let chol = cholesky_spd(&self.gram, "trimmed basis Gram")?;
        Ok(chol.solve(&b))
    }

    /// Norm induced by the stored Gram.
    pub fn coeff_norm(&self, v: &DVector<f64>) -> f64 {
        (v.dot(&(&self.gram * v))).max(0.0).sqrt()
    }
}

/// An L²-selected independent generating set for the image of one operator
/// (derivative or Koszul) inside a full polynomial form space on a cell.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    full: FullBasis,
    coeffs: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl SpanBasis {
    fn select(cell: &CellGeometry, full: FullBasis, cols: Vec<DVector<f64>>) -> SpanBasis {
        let ncand = cols.len();
        let mut cmat = DMatrix::zeros(full.len(), ncand);
        for (j, c) in cols.iter().enumerate() {
            cmat.set_column(j, c);
        }
        let gfull = full.gram(cell);
        let gcand = cmat.transpose() * &gfull * &cmat;
        for j in 0..ncand {
            let dj = gcand[(j, j)];
            if dj > 0.0 {
                let col = cmat.column(j) / dj.sqrt();
                cmat.set_column(j, &col);
            }
        }
        let gcand = cmat.transpose() * &gfull * &cmat;
        let (selected, _) = pivoted_selection(&gcand, ncand, RANK_TOL);
        let mut coeffs = DMatrix::zeros(full.len(), selected.len());
        for (i, &s) in selected.iter().enumerate() {
            coeffs.set_column(i, &cmat.column(s));
        }
        let gram = DMatrix::from_fn(selected.len(), selected.len(), |i, j| {
            gcand[(selected[i], selected[j])]
        });
        SpanBasis { full, coeffs, gram }
    }

    /// Generators of `κ P_{r−1}Λ^{k+1}` inside `P_rΛ^k` — an L²-selected
    /// complement of the closed forms. Needs `k < dim` and `r ≥ 1`.
    pub fn koszul_span(cell: &CellGeometry, degree: usize, poly_deg: usize) -> Result<SpanBasis> {
        if degree >= cell.dim || poly_deg == 0 {
            return Err(Error::InvalidDegree(format!(
                "Koszul span needs degree < dimension and order ≥ 1 \
                 (got degree {degree}, order {poly_deg} on dimension {})",
                cell.dim
            )));
        }
        let scale = cell.frame.scale;
        let src = FullBasis::new(cell.dim, degree + 1, poly_deg - 1, scale)?;
        let full = FullBasis::new(cell.dim, degree, poly_deg, scale)?;
        let cols = (0..src.len())
            .map(|i| full.vec_from_form(&src.element(i).koszul()?))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpanBasis::select(cell, full, cols))
    }

    /// Generators of `d P_rΛ^{k−1}` inside `P_{r−1}Λ^k`, for source order
    /// `r ≥ 1` and `1 ≤ k ≤ dim`.
    pub fn derivative_span(
        cell: &CellGeometry,
        degree: usize,
        src_poly_deg: usize,
    ) -> Result<SpanBasis> {
        if degree == 0 || degree > cell.dim || src_poly_deg == 0 {
            return Err(Error::InvalidDegree(format!(
                "derivative span needs 1 ≤ degree ≤ dimension and source order ≥ 1 \
                 (got degree {degree}, order {src_poly_deg} on dimension {})",
                cell.dim
            )));
        }
        let scale = cell.frame.scale;
        let src = FullBasis::new(cell.dim, degree - 1, src_poly_deg, scale)?;
        let full = FullBasis::new(cell.dim, degree, src_poly_deg - 1, scale)?;
        let cols = (0..src.len())
            .map(|i| full.vec_from_form(&src.element(i).d()?))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpanBasis::select(cell, full, cols))
    }

    pub fn full(&self) -> &FullBasis {
        &self.full
    }

    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn element(&self, i: usize) -> PolyForm {
        self.full.form_from_vec(&self.coeffs.column(i).into_owned())
    }
}

/// Greedy pivoted-Cholesky selection of independent columns of an SPD Gram,
/// exhausting indices `< block_split` before admitting any later ones.
/// Returns selected indices and how many came from the first block.
fn pivoted_selection(gcand: &DMatrix<f64>, block_split: usize, rel_tol: f64) -> (Vec<usize>, usize) {
    let n = gcand.nrows();
    let mut resid: Vec<f64> = (0..n).map(|i| gcand[(i, i)]).collect();
    let max0 = resid.iter().cloned().fold(0.0f64, f64::max);
    if max0 <= 0.0 {
        return (Vec::new(), 0);
    }
    let tol = rel_tol * max0;
    let mut lrows: Vec<DVector<f64>> = Vec::new();
    let mut selected: Vec<usize> = Vec::new();
    let mut taken = vec![false; n];
    let mut d_count = 0;
    for (start, end) in [(0, block_split), (block_split, n)] {
        loop {
            let mut p = usize::MAX;
            let mut best = tol;
            for q in start..end {
                if !taken[q] && resid[q] > best {
                    best = resid[q];
                    p = q;
                }
            }
            if p == usize::MAX {
                break;
            }
            let mut lp = DVector::from_fn(n, |q, _| gcand[(q, p)]);
            for lj in &lrows {
                let f = lj[p];
                if f != 0.0 {
                    lp -= lj * f;
                }
            }
            let piv = resid[p].sqrt();
            lp /= piv;
            for q in 0..n {
                resid[q] = (resid[q] - lp[q] * lp[q]).max(0.0);
            }
            taken[p] = true;
            lrows.push(lp);
            selected.push(p);
        }
        if start == 0 {
            d_count = selected.len();
        }
    }
    (selected, d_count)
}
