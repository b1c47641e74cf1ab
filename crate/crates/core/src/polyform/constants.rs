//! Measured operator norms on a single cell chart.
//!
//! These are the chart-level quantities whose response to a uniform dilation
//! of the cell is an exact power law in the representation used here: the
//! exterior derivative and its inverse on the non-closed block, the Koszul
//! contraction and its inverse on the exact block, and the trace onto a
//! boundary face. All are metric singular values against L² Grams.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{metric_singular_values, pencil_max};
use crate::mesh::geometry::CellGeometry;
use crate::polyform::basis::{FullBasis, SpanBasis, TrimmedBasis};

/// Operator norms measured on one cell (and one boundary face for the trace).
#[derive(Debug, Clone, Copy)]
pub struct ChartConstants {
    /// ‖d‖ on the Koszul block of the trimmed space (exact slope −1).
    pub nd: f64,
    /// ‖κ‖ on the derivative block one degree up (exact slope +1).
    pub nk: f64,
    /// 1/σ_min of d on the Koszul block (exact slope +1).
    pub nd_inv: f64,
    /// 1/σ_min of κ on the derivative block (exact slope −1).
    pub nk_inv: f64,
    /// ‖tr‖ from the cell onto the face (exact slope −1/2).
    pub trace: f64,
}

impl ChartConstants {
    pub fn as_array(&self) -> [f64; 5] {
        [self.nd, self.nk, self.nd_inv, self.nk_inv, self.trace]
    }

    pub const LABELS: [&'static str; 5] = ["nd", "nk", "nd_inv", "nk_inv", "trace"];

    /// The exact dilation exponents of the five constants.
    pub const EXPONENTS: [f64; 5] = [-1.0, 1.0, 1.0, -1.0, -0.5];
}

/// Measures the five chart constants for `k`-forms of order `r` on a cell,
/// using `face` for the trace norm. Requires `r ≥ 1`, `k + 1 ≤ dim`, and
/// `k ≤ face.dim`.
pub fn measure_local_constants(
    cell: &CellGeometry,
    face: &CellGeometry,
    degree: usize,
    poly_deg: usize,
) -> Result<ChartConstants> {
    let d = cell.dim;
    let k = degree;
    let r = poly_deg;
    if r == 0 {
        return Err(Error::InvalidDegree("chart constants need polynomial order ≥ 1".into()));
    }
    if k + 1 > d {
        return Err(Error::InvalidDegree(format!(
            "chart constants need degree + 1 ≤ dimension (got degree {k} on dimension {d})"
        )));
    }
    if k > face.dim {
        return Err(Error::InvalidDegree(format!(
            "trace of {k}-forms onto a {}-dimensional face",
            face.dim
        )));
    }

    // d on the Koszul complement of the closed forms in P⁻ᵣΛᵏ
    let kspan = SpanBasis::koszul_span(cell, k, r)?;
    let cod_d = FullBasis::new(d, k + 1, r - 1, cell.frame.scale)?;
    let mut a_d = DMatrix::zeros(cod_d.len(), kspan.len());
    for j in 0..kspan.len() {
        a_d.set_column(j, &cod_d.vec_from_form(&kspan.element(j).d()?)?);
    }
    let sv_d = metric_singular_values(&a_d, kspan.gram(), &cod_d.gram(cell))?;
    let (nd, nd_min) = (sv_d[0], *sv_d.last().unwrap());

    // κ on the exact forms d PᵣΛᵏ ⊂ P_{r−1}Λᵏ⁺¹
    let dspan = SpanBasis::derivative_span(cell, k + 1, r)?;
    let cod_k = FullBasis::new(d, k, r, cell.frame.scale)?;
    let mut a_k = DMatrix::zeros(cod_k.len(), dspan.len());
    for j in 0..dspan.len() {
        a_k.set_column(j, &cod_k.vec_from_form(&dspan.element(j).koszul()?)?);
    }
    let sv_k = metric_singular_values(&a_k, dspan.gram(), &cod_k.gram(cell))?;
    let (nk, nk_min) = (sv_k[0], *sv_k.last().unwrap());

    // trace of the full space onto the face
    let fb = FullBasis::new(d, k, r, cell.frame.scale)?;
    let fb_face = FullBasis::new(face.dim, k, r, face.frame.scale)?;
    let embed = cell.frame.embed(&face.frame);
    let mut a_t = DMatrix::zeros(fb_face.len(), fb.len());
    for i in 0..fb.len() {
        a_t.set_column(i, &fb_face.vec_from_form(&fb.element(i).trace(&embed)?)?);
    }
    let sv_t = metric_singular_values(&a_t, &fb.gram(cell), &fb_face.gram(face))?;

    if nd_min <= 0.0 || nk_min <= 0.0 {
        return Err(Error::IllConditioned(
            "restricted derivative or Koszul map is singular".into(),
        ));
    }
    Ok(ChartConstants {
        nd,
        nk,
        nd_inv: 1.0 / nd_min,
        nk_inv: 1.0 / nk_min,
        trace: sv_t[0],
    })
}

/// Stability constant of the trimmed decomposition on a cell: the largest
/// ratio ‖exact part‖ / ‖whole‖ over the trimmed space. Equals 1 when either
/// block is trivial; dimensionless and invariant under dilation.
pub fn decomposition_constant(cell: &CellGeometry, degree: usize, poly_deg: usize) -> Result<f64> {
    let t = TrimmedBasis::new(cell, degree, poly_deg)?;
    let m = t.len();
    let dc = t.d_count();
    if m == 0 {
        return Err(Error::InvalidDegree("empty trimmed space has no decomposition".into()));
    }
    if dc == 0 || dc == m {
        return Ok(1.0);
    }
    let mut num = DMatrix::zeros(m, m);
    num.view_mut((0, 0), (dc, dc)).copy_from(&t.gram().view((0, 0), (dc, dc)));
    Ok(pencil_max(&num, t.gram())?.max(0.0).sqrt())
}

/// Least-squares slope of `log v` against `log h`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, v) in samples {
        let x = h.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
