//! Scaling exponents of the chart constants.
//!
//! `formdeck appendix-scalings` dilates a reference cell through a dyadic
//! range of sizes, measures the five chart constants (differential and
//! Koszul norms, their inverses, and the trace norm) at each size, and
//! fits the log–log slope of each against the diameter.  The slopes must
//! reproduce the homogeneity exponents −1, +1, +1, −1, −1/2 of the
//! operators themselves; the trimmed-decomposition stability constant is
//! dimensionless and must not drift at all.

use clap::{Args, ValueEnum};
use formdeck_core::meshgen;
use formdeck_core::polyform::constants::{
    decomposition_constant, fit_exponent, measure_local_constants, ChartConstants,
};

use crate::{check_err, fail, sci, CmdResult, EXIT_CHECK, EXIT_USAGE};

/// Fitted exponents must match the exact homogeneity to this tolerance.
const EXPONENT_TOL: f64 = 1e-6;
/// Relative drift allowed in the scale-free decomposition constant.
const DRIFT_TOL: f64 = 1e-2;

/// Reference shapes the constants are measured on.
#[derive(Clone, Copy, ValueEnum)]
pub enum Shape {
    /// Unit right triangle.
    Triangle,
    /// Unit square.
    Square,
    /// Unit right tetrahedron.
    Tet,
}

impl Shape {
    fn id(self) -> &'static str {
        match self {
            Shape::Triangle => "triangle",
            Shape::Square => "square",
            Shape::Tet => "tet",
        }
    }
}

#[derive(Args)]
pub struct ScalingArgs {
    /// Reference cell to dilate.
    #[arg(long, value_enum)]
    pub shape: Shape,
    /// Number of dyadic sizes to fit across (at least 2).
    #[arg(long, default_value_t = 4)]
    pub levels: u32,
}

pub fn run(args: &ScalingArgs) -> CmdResult {
    if args.levels < 2 {
        return Err(fail(EXIT_USAGE, "an exponent fit needs at least 2 sizes"));
    }
    let mesh = match args.shape {
        Shape::Triangle => meshgen::single_triangle(1.0),
        Shape::Square => meshgen::unit_square(),
        Shape::Tet => meshgen::single_tet(1.0),
    }
    .map_err(check_err)?;
    let dim = mesh.dim();
    let cell = mesh.cells(dim)[0].geometry.clone();
    let face = mesh.cells(dim - 1)[0].geometry.clone();

    // Degree/order pairs within desk scale for the cell dimension.
    let pairs: &[(usize, usize)] =
        if dim == 2 { &[(0, 1), (0, 2), (1, 2)] } else { &[(0, 1), (1, 1)] };
    let scales: Vec<f64> = (0..args.levels).map(|l| 0.5_f64.powi(l as i32)).collect();

    println!("shape,k,r,measure,value,expected,error");
    let mut breaches = Vec::new();
    for &(k, r) in pairs {
        let mut samples: Vec<[(f64, f64); 5]> = Vec::new();
        let mut decomposition = Vec::new();
        for &s in &scales {
            let scaled_cell = cell.rescaled(s);
            let scaled_face = face.rescaled(s);
            let c = measure_local_constants(&scaled_cell, &scaled_face, k, r).map_err(check_err)?;
            let h = scaled_cell.diameter;
            samples.push(c.as_array().map(|v| (h, v)));
            decomposition.push(decomposition_constant(&scaled_cell, k + 1, r).map_err(check_err)?);
        }

        for (i, label) in ChartConstants::LABELS.iter().enumerate() {
            let expected = ChartConstants::EXPONENTS[i];
            let points: Vec<(f64, f64)> = samples.iter().map(|row| row[i]).collect();
            let slope = fit_exponent(&points);
            let error = (slope - expected).abs();
            println!(
                "{},{k},{r},{label},{},{},{}",
                args.shape.id(),
                sci(slope),
                sci(expected),
                sci(error)
            );
            if error > EXPONENT_TOL {
                breaches.push(format!("{label} exponent at (k={k}, r={r}): {}", sci(slope)));
            }
        }

        let base = decomposition[0];
        let drift = decomposition
            .iter()
            .map(|v| (v / base - 1.0).abs())
            .fold(0.0, f64::max);
        println!(
            "{},{k},{r},decomposition_drift,{},{},{}",
            args.shape.id(),
            sci(drift),
            sci(0.0),
            sci(drift)
        );
        if drift > DRIFT_TOL {
            breaches.push(format!("decomposition drift at (k={k}, r={r}): {}", sci(drift)));
        }
    }

    if breaches.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_CHECK, breaches.join("; ")))
    }
}
