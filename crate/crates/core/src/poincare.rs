//! Poincaré laboratory for the discrete complex.
//!
//! Two independent routes to inverse bounds on the discrete derivative:
//!
//! * **Spectral**: singular values of the global derivative measured in the
//!   weighted component norms. The reciprocal of the smallest nonzero value
//!   is the sharpest constant `C` with `‖v‖ ≤ C‖Dv‖` on the orthogonal
//!   complement of the kernel, and the kernel/rank bookkeeping exposes the
//!   dimensions of the harmonic spaces (discrete cohomology).
//!
//! * **Constructive**: given exact data `σ = Dω`, an explicit primitive is
//!   assembled bottom-up — cell integrals of `σ` form a polytopal cochain,
//!   its simplicial minimal-energy primitive is restricted back, fixes the
//!   components on the lowest-dimensional cells, and the higher components
//!   are filled in by Koszul-test solves against the boundary potentials.
//!   The stability ratio of this construction is a computable witness of the
//!   spectral bound.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ddr::{random_ambient_field, DdrSetup, DiscreteForm};
use crate::error::{Error, Result};
use crate::lift::{cochain_primitive, CochainLift};
use crate::linalg::{metric_singular_values, GRAM_SIGMA_FLOOR};
use crate::mesh::{Cell, CellRef, Mesh};
use crate::polyform::{PolyForm, SpanBasis};
use crate::whitney::WhitneySpace;

/// Relative singular-value threshold separating kernel from image.
pub const SPECTRAL_REL_TOL: f64 = 1e-9;

/// Largest diameter of a top-dimensional cell.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.cells(mesh.dim()).iter().map(Cell::diameter).fold(0.0, f64::max)
}

/// Rank, kernel and harmonic dimensions of one degree of the complex, with
/// the Poincaré constant of the derivative when it has any image at all.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub degree: usize,
    pub space_dim: usize,
    /// Rank of the derivative leaving this degree (zero at the top degree).
    pub rank: usize,
    pub kernel_dim: usize,
    /// Rank of the derivative arriving from one degree below.
    pub rank_below: usize,
    /// `kernel_dim − rank_below`: the dimension of the harmonic space.
    pub harmonic_dim: usize,
    /// `1/σ_min` over the nonzero singular values of the derivative, in the
    /// weighted norms; `None` when the derivative is zero or absent.
    pub poincare_constant: Option<f64>,
    /// Separation between kept and discarded singular values: the smallest
    /// kept value over the largest discarded one. `None` when the
    /// derivative is absent or nothing was discarded.
    pub spectral_gap: Option<f64>,
}

/// Splits a descending spectrum at the relative cutoff; returns the kept
/// count, the smallest kept value and the largest discarded one.
fn split_spectrum(sv: &[f64]) -> (usize, Option<f64>, Option<f64>) {
    let Some(&smax) = sv.first() else { return (0, None, None) };
    if smax <= 0.0 {
        return (0, None, None);
    }
    let cutoff = SPECTRAL_REL_TOL.max(GRAM_SIGMA_FLOOR) * smax;
    let kept = sv.iter().take_while(|&&s| s > cutoff).count();
    let min_kept = (kept > 0).then(|| sv[kept - 1]);
    let max_dropped = (kept < sv.len()).then(|| sv[kept]);
    (kept, min_kept, max_dropped)
}

/// Measures the derivative out of degree `k` in the weighted norms.
pub fn spectral_report(mesh: &Mesh, setup: &DdrSetup, k: usize) -> Result<SpectralReport> {
    let n = mesh.dim();
    let space_dim = setup.layout(k).total();

    let rank_below = if k == 0 {
        0
    } else {
        let sv = metric_singular_values(
            setup.derivative(k - 1),
            &setup.norm_gram(mesh, k - 1),
            &setup.norm_gram(mesh, k),
        )?;
        split_spectrum(&sv).0
    };

    let (rank, poincare_constant, spectral_gap) = if k < n {
        let sv = metric_singular_values(
            setup.derivative(k),
            &setup.norm_gram(mesh, k),
            &setup.norm_gram(mesh, k + 1),
        )?;
        let (rank, smin, sdrop) = split_spectrum(&sv);
        let gap = match (smin, sdrop) {
            // A discarded value of exactly zero is a perfect separation.
            (Some(a), Some(b)) => Some(if b > 0.0 { a / b } else { f64::INFINITY }),
            _ => None,
        };
        (rank, smin.map(f64::recip), gap)
    } else {
        (0, None, None)
    };

    let kernel_dim = space_dim - rank;
    debug_assert!(kernel_dim >= rank_below, "image not contained in kernel");
    Ok(SpectralReport {
        degree: k,
        space_dim,
        rank,
        kernel_dim,
        rank_below,
        harmonic_dim: kernel_dim.saturating_sub(rank_below),
        poincare_constant,
        spectral_gap,
    })
}

/// An explicit primitive `τ` with `Dτ = σ`, together with the norms behind
/// its stability constant.
#[derive(Debug, Clone)]
pub struct ConstructedPrimitive {
    pub primitive: DiscreteForm,
    /// Weighted norm of `D(primitive) − σ`.
    pub residual: f64,
    pub primitive_norm: f64,
    pub data_norm: f64,
    /// `primitive_norm / data_norm` (zero for zero data).
    pub constant: f64,
    /// Worst cell-level scaling ratio
    /// `‖τ_f‖² / (h_f²‖σ_f‖² + h_f Σ_{f'∈∂f} |||τ|||²_{f'})`
    /// over the cells above the base dimension — the quantity the
    /// construction keeps bounded by mesh regularity alone.
    pub local_bound_max: f64,
}

fn component_slice(setup: &DdrSetup, k: usize, f: CellRef, form: &DiscreteForm) -> DVector<f64> {
    let range = setup.layout(k).range(f);
    DVector::from_fn(range.len(), |i, _| form.coeffs[range.start + i])
}

/// Builds a primitive of exact data `σ` of degree `k+1` bottom-up.
///
/// Cell integrals of `σ` form a polytopal cochain whose primitive (computed
/// through the simplicial submesh) prescribes the cell averages on `k`-cells.
/// On every higher-dimensional cell the component is sought inside the exact
/// block of the trimmed space — as the derivative of a Koszul-span unknown,
/// through which the derivative map is one-to-one — and solved from the
/// Koszul tests of the derivative relation, with boundary terms taken from
/// the potentials of the already-built lower components. Fails with
/// `NotACoboundary` when the integral cochain has no primitive.
pub fn constructive_primitive(
    mesh: &Mesh,
    setup: &DdrSetup,
    lift: &CochainLift,
    whitney: &WhitneySpace,
    sigma: &DiscreteForm,
) -> Result<ConstructedPrimitive> {
    let n = mesh.dim();
    if sigma.degree == 0 || sigma.degree > n {
        return Err(Error::InvalidDegree(format!(
            "primitive of a degree-{} element of a dimension-{n} complex",
            sigma.degree
        )));
    }
    let k = sigma.degree - 1;
    if whitney.degree() != k {
        return Err(Error::InvalidDegree(format!(
            "simplicial space has degree {}, data needs {k}",
            whitney.degree()
        )));
    }

    // Integrals of the data over its lowest-dimensional carriers.
    let mut xi = DVector::zeros(mesh.cell_count(k + 1));
    for cell in mesh.cells(k + 1) {
        let f = CellRef { dim: k + 1, id: cell.id };
        let comp = setup
            .trimmed_basis(k + 1, f)
            .form_from_coeffs(&component_slice(setup, k + 1, f, sigma));
        let one = PolyForm::constant(k + 1, 1.0, comp.scale());
        xi[cell.id] = comp.inner_product(&one, &cell.geometry)?;
    }

    let cochain = cochain_primitive(mesh, lift, whitney, &xi)?;

    let mut tau = setup.zero_form(k);
    for cell in mesh.cells(k) {
        let f = CellRef { dim: k, id: cell.id };
        let off = setup.layout(k).offset(f);
        tau.coeffs[off] = cochain.potential[cell.id] / cell.measure();
    }

    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    for d in k + 1..=n {
        for cell in mesh.cells(d) {
            let f = CellRef { dim: d, id: cell.id };
            let tb = setup.trimmed_basis(k, f);
            if tb.is_empty() {
                continue;
            }
            let geo = &cell.geometry;
            let span = SpanBasis::koszul_span(geo, d - k - 1, setup.poly_deg())?;
            let mus: Vec<PolyForm> = (0..span.len()).map(|i| span.element(i)).collect();
            let dmus: Vec<PolyForm> = mus.iter().map(PolyForm::d).collect::<Result<_>>()?;

            let sigma_comp = setup
                .trimmed_basis(k + 1, f)
                .form_from_coeffs(&component_slice(setup, k + 1, f, sigma));

            // Unknown in the exact block: the component is Σ_j c_j dμ_j over
            // the Koszul span, so the system is its Gram against the tests.
            let mut lhs = DMatrix::zeros(mus.len(), mus.len());
            let mut rhs = DVector::zeros(mus.len());
            for (i, mu) in mus.iter().enumerate() {
                for (j, dmu) in dmus.iter().enumerate() {
                    lhs[(i, j)] = sign * dmu.inner_product(&dmus[i], geo)?;
                }
                rhs[i] = sigma_comp.inner_product(mu, geo)?;
            }
            for &(bid, bsign) in &cell.boundary {
                let bf = CellRef { dim: d - 1, id: bid };
                let bcell = mesh.cell(bf);
                let pot = setup.star_potential(mesh, k, bf, &tau)?;
                let embed = geo.frame.embed(&bcell.geometry.frame);
                for (i, mu) in mus.iter().enumerate() {
                    rhs[i] -= f64::from(bsign)
                        * pot.inner_product(&mu.trace(&embed)?, &bcell.geometry)?;
                }
            }

            let (c, res) = crate::linalg::pinv_solve(&lhs, &rhs);
            if res > 1e-8 * rhs.norm().max(1.0) {
                return Err(Error::Solve(format!(
                    "primitive relations inconsistent on {d}-cell {} (residual {res:.3e})",
                    cell.id
                )));
            }
            let mut star_tau = PolyForm::zero(d, d - k, 0, geo.frame.scale)?;
            for (j, dmu) in dmus.iter().enumerate() {
                star_tau = star_tau.add(&dmu.scaled(c[j]))?;
            }
            let coeffs = tb.project(&star_tau, geo)?;
            let off = setup.layout(k).offset(f);
            for j in 0..tb.len() {
                tau.coeffs[off + j] = coeffs[j];
            }
        }
    }

    let dtau = setup.apply_derivative(&tau)?;
    let diff =
        DiscreteForm { degree: k + 1, coeffs: &dtau.coeffs - &sigma.coeffs };
    let residual = setup.global_norm(mesh, k + 1, &diff);
    let primitive_norm = setup.global_norm(mesh, k, &tau);
    let data_norm = setup.global_norm(mesh, k + 1, sigma);
    let constant = if data_norm > 0.0 { primitive_norm / data_norm } else { 0.0 };

    let mut local_bound_max = 0.0_f64;
    for d in k + 1..=n {
        for cell in mesh.cells(d) {
            let f = CellRef { dim: d, id: cell.id };
            let h = cell.diameter();
            let num = setup.component_norm(k, f, &tau).powi(2);
            let mut den = h * h * setup.component_norm(k + 1, f, sigma).powi(2);
            for &(bid, _) in &cell.boundary {
                den += h
                    * setup.local_norm(mesh, k, CellRef { dim: d - 1, id: bid }, &tau).powi(2);
            }
            if den > f64::MIN_POSITIVE {
                local_bound_max = local_bound_max.max(num / den);
            }
        }
    }

    Ok(ConstructedPrimitive {
        primitive: tau,
        residual,
        primitive_norm,
        data_norm,
        constant,
        local_bound_max,
    })
}

/// Worst observed behaviour of the constructive primitive over seeded
/// random exact data.
#[derive(Debug, Clone)]
pub struct LiftingProbe {
    pub samples: usize,
    /// Largest `‖τ‖/‖σ‖` seen.
    pub constant: f64,
    /// Largest relative residual `‖Dτ − σ‖/‖σ‖` seen.
    pub max_residual: f64,
    /// Largest cell-level scaling ratio seen (see
    /// [`ConstructedPrimitive::local_bound_max`]).
    pub local_bound_max: f64,
}

/// Feeds `samples` seeded coboundaries `σ = Dω` through
/// [`constructive_primitive`] and records the worst stability ratio and
/// residual.
///
/// Each `ω` interpolates a random polynomial field one degree above the
/// space order, drawn from a generator seeded independently of the mesh: a
/// refinement sweep with a fixed seed therefore feeds the same fields to
/// every level, so the recorded constants are comparable across levels.
pub fn lifting_probe(
    mesh: &Mesh,
    setup: &DdrSetup,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<LiftingProbe> {
    let lift = CochainLift::new(mesh)?;
    let whitney = WhitneySpace::new(mesh, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constant: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    let mut local_bound_max: f64 = 0.0;
    let mut used = 0;
    for _ in 0..samples {
        let field = random_ambient_field(mesh.dim(), k, setup.poly_deg() + 1, &mut rng)?;
        let omega = setup.interpolate(mesh, &field)?;
        let sigma = setup.apply_derivative(&omega)?;
        let data_norm = setup.global_norm(mesh, k + 1, &sigma);
        if data_norm <= 1e-12 {
            continue;
        }
        let out = constructive_primitive(mesh, setup, &lift, &whitney, &sigma)?;
        constant = constant.max(out.constant);
        max_residual = max_residual.max(out.residual / data_norm);
        local_bound_max = local_bound_max.max(out.local_bound_max);
        used += 1;
    }
    Ok(LiftingProbe { samples: used, constant, max_residual, local_bound_max })
}

/// One row of a refinement sweep: both routes to the inverse bound on one
/// (mesh, degree, order) triple, plus bookkeeping.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub mesh_id: String,
    pub level: u32,
    /// Largest top-cell diameter.
    pub h: f64,
    pub degree: usize,
    pub poly_deg: usize,
    pub space_dim: usize,
    pub harmonic_dim: usize,
    pub poincare_constant: Option<f64>,
    pub spectral_gap: Option<f64>,
    /// Worst stability ratio of the constructive route over the samples.
    pub lifting_constant: f64,
    /// Worst relative residual of the constructed primitives.
    pub lifting_residual: f64,
    pub samples: usize,
    pub seed: u64,
    /// Wall-clock milliseconds spent on this row. Not deterministic; keep it
    /// out of byte-reproducible outputs.
    pub wall_ms: f64,
}

/// Runs both routes on one mesh and packages the results as a sweep row.
/// At the top degree there is no outgoing derivative, so the constants are
/// absent and no samples are drawn.
pub fn sweep_entry(
    mesh_id: &str,
    level: u32,
    mesh: &Mesh,
    degree: usize,
    poly_deg: usize,
    samples: usize,
    seed: u64,
) -> Result<SweepRecord> {
    let start = std::time::Instant::now();
    let setup = DdrSetup::new(mesh, poly_deg)?;
    let report = spectral_report(mesh, &setup, degree)?;
    let probe = if degree < mesh.dim() {
        lifting_probe(mesh, &setup, degree, samples, seed)?
    } else {
        LiftingProbe { samples: 0, constant: 0.0, max_residual: 0.0, local_bound_max: 0.0 }
    };
    Ok(SweepRecord {
        mesh_id: mesh_id.to_string(),
        level,
        h: mesh_size(mesh),
        degree,
        poly_deg,
        space_dim: report.space_dim,
        harmonic_dim: report.harmonic_dim,
        poincare_constant: report.poincare_constant,
        spectral_gap: report.spectral_gap,
        lifting_constant: probe.constant,
        lifting_residual: probe.max_residual,
        samples: probe.samples,
        seed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Whether a sequence of constants grows at every refinement step by more
/// than rounding noise — the red flag a sweep is meant to catch.
pub fn monotone_growth(values: &[f64]) -> bool {
    values.len() >= 2 && values.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky_spd, pinv_solve};
    use crate::meshgen;
    use crate::DEFAULT_SEED;

    fn primitive_case(mesh: &Mesh, r: usize, seed: u64) {
        let n = mesh.dim();
        let setup = DdrSetup::new(mesh, r).unwrap();
        let lift = CochainLift::new(mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..n {
            let whitney = WhitneySpace::new(mesh, k).unwrap();
            let omega = setup.random_form(k, &mut rng);
            let sigma = setup.apply_derivative(&omega).unwrap();
            let out = constructive_primitive(mesh, &setup, &lift, &whitney, &sigma).unwrap();
            assert!(
                out.residual <= 1e-9 * out.data_norm.max(1e-12),
                "primitive residual {:.3e} on data of norm {:.3e} at degree {k}, order {r}",
                out.residual,
                out.data_norm
            );
        }
    }

    #[test]
    fn primitive_inverts_the_derivative() {
        primitive_case(&meshgen::unit_square().unwrap(), 0, 3);
        primitive_case(&meshgen::unit_square().unwrap(), 1, 4);
        primitive_case(&meshgen::unit_square().unwrap(), 2, 5);
        primitive_case(&meshgen::agglomerated_square(2, DEFAULT_SEED).unwrap(), 1, 6);
        primitive_case(&meshgen::pyramid().unwrap(), 0, 7);
        primitive_case(&meshgen::pyramid().unwrap(), 1, 8);
    }

    #[test]
    fn circulation_data_has_no_primitive() {
        let mesh = meshgen::annulus(1).unwrap();
        let setup = DdrSetup::new(&mesh, 1).unwrap();
        let lift = CochainLift::new(&mesh).unwrap();
        let whitney = WhitneySpace::new(&mesh, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = setup.random_form(1, &mut rng);
        let err = constructive_primitive(&mesh, &setup, &lift, &whitney, &sigma).unwrap_err();
        assert!(matches!(err, Error::NotACoboundary { .. }), "got {err}");
    }

    #[test]
    fn harmonic_dimensions_match_topology() {
        // (mesh, expected harmonic dims per degree)
        let cases: Vec<(Mesh, Vec<usize>)> = vec![
            (meshgen::unit_square().unwrap(), vec![1, 0, 0]),
            (meshgen::annulus(1).unwrap(), vec![1, 1, 0]),
            (meshgen::pyramid().unwrap(), vec![1, 0, 0, 0]),
        ];
        for (mesh, betti) in cases {
            for r in [0, 1] {
                let setup = DdrSetup::new(&mesh, r).unwrap();
                for k in 0..=mesh.dim() {
                    let report = spectral_report(&mesh, &setup, k).unwrap();
                    assert_eq!(
                        report.harmonic_dim, betti[k],
                        "harmonic dimension at degree {k}, order {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn spectral_constant_matches_dense_pencil_oracle() {
        // Independent route: symmetric square root of the domain Gram via an
        // eigendecomposition, then an ordinary symmetric eigenproblem.
        let mesh = meshgen::single_triangle(1.0).unwrap();
        let setup = DdrSetup::new(&mesh, 1).unwrap();
        let report = spectral_report(&mesh, &setup, 0).unwrap();

        let d0 = setup.derivative(0);
        let m0 = setup.norm_gram(&mesh, 0);
        let m1 = setup.norm_gram(&mesh, 1);
        let eig = m0.clone().symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let s = &inv_sqrt * d0.transpose() * m1 * d0 * &inv_sqrt;
        let s = (&s + s.transpose()) * 0.5;
        let mut lambda: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
        lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let lmax = lambda[0];
        let smallest = lambda
            .iter()
            .copied()
            .filter(|&l| l > (SPECTRAL_REL_TOL.max(GRAM_SIGMA_FLOOR)).powi(2) * lmax)
            .last()
            .unwrap();
        let oracle = 1.0 / smallest.sqrt();

        let got = report.poincare_constant.unwrap();
        assert!(
            (got - oracle).abs() <= 1e-8 * oracle,
            "spectral constant {got:.12e} vs dense oracle {oracle:.12e}"
        );
    }

    #[test]
    fn constants_are_stable_under_refinement() {
        let mut spectral = Vec::new();
        let mut lifting = Vec::new();
        for level in 2..=4 {
            let mesh = meshgen::cartesian_square(level).unwrap();
            let setup = DdrSetup::new(&mesh, 0).unwrap();
            let report = spectral_report(&mesh, &setup, 0).unwrap();
            spectral.push(report.poincare_constant.unwrap());
            let probe = lifting_probe(&mesh, &setup, 0, 5, DEFAULT_SEED).unwrap();
            assert!(probe.max_residual <= 1e-9);
            lifting.push(probe.constant);
        }
        let ratio = |v: &[f64]| {
            v.iter().fold(0.0_f64, |a, &b| a.max(b)) / v.iter().fold(f64::MAX, |a, &b| a.min(b))
        };
        assert!(ratio(&spectral) < 1.5, "spectral constants {spectral:?}");
        assert!(ratio(&lifting) < 2.0, "lifting constants {lifting:?}");
        assert!(!monotone_growth(&spectral), "spectral constants grow: {spectral:?}");
    }

    #[test]
    fn primitive_components_live_in_the_exact_block() {
        // On cells above the base dimension the constructed component is a
        // derivative, so its coefficients on the Koszul generators of the
        // trimmed basis must vanish.
        let cases: Vec<(Mesh, usize, u64)> = vec![
            (meshgen::unit_square().unwrap(), 2, 17),
            (meshgen::pyramid().unwrap(), 1, 19),
        ];
        for (mesh, r, seed) in cases {
            let setup = DdrSetup::new(&mesh, r).unwrap();
            let lift = CochainLift::new(&mesh).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for k in 0..mesh.dim() {
                let whitney = WhitneySpace::new(&mesh, k).unwrap();
                let omega = setup.random_form(k, &mut rng);
                let sigma = setup.apply_derivative(&omega).unwrap();
                let out =
                    constructive_primitive(&mesh, &setup, &lift, &whitney, &sigma).unwrap();
                for d in k + 1..=mesh.dim() {
                    for cell in mesh.cells(d) {
                        let f = CellRef { dim: d, id: cell.id };
                        let tb = setup.trimmed_basis(k, f);
                        let comp = component_slice(&setup, k, f, &out.primitive);
                        let scale = comp.amax().max(1.0);
                        for j in tb.d_count()..tb.len() {
                            assert!(
                                comp[j].abs() <= 1e-9 * scale,
                                "Koszul coefficient {:.3e} on {d}-cell {} at degree {k}",
                                comp[j],
                                cell.id
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constructed_primitive_dominates_the_minimum_norm() {
        // The minimum-norm primitive in the weighted metric lower-bounds any
        // primitive; the construction should also stay within a modest
        // factor of it.
        let cases: Vec<(Mesh, usize, u64)> = vec![
            (meshgen::unit_square().unwrap(), 1, 23),
            (meshgen::agglomerated_square(2, DEFAULT_SEED).unwrap(), 1, 29),
            (meshgen::pyramid().unwrap(), 1, 31),
        ];
        for (mesh, r, seed) in cases {
            let setup = DdrSetup::new(&mesh, r).unwrap();
            let lift = CochainLift::new(&mesh).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for k in 0..mesh.dim() {
                let whitney = WhitneySpace::new(&mesh, k).unwrap();
                let omega = setup.random_form(k, &mut rng);
                let sigma = setup.apply_derivative(&omega).unwrap();
                if setup.global_norm(&mesh, k + 1, &sigma) <= 1e-12 {
                    continue;
                }
                let out =
                    constructive_primitive(&mesh, &setup, &lift, &whitney, &sigma).unwrap();

                let chol =
                    cholesky_spd(&setup.norm_gram(&mesh, k), "weighted norm Gram").unwrap();
                let xt = chol
                    .l()
                    .solve_lower_triangular(&setup.derivative(k).transpose())
                    .unwrap();
                let (z, res) = pinv_solve(&xt.transpose(), &sigma.coeffs);
                assert!(res <= 1e-8 * sigma.coeffs.norm().max(1.0));
                let min_norm = z.norm();

                assert!(
                    min_norm <= out.primitive_norm * (1.0 + 1e-9) + 1e-12,
                    "minimum norm {min_norm:.6e} exceeds constructed {:.6e} at degree {k}",
                    out.primitive_norm
                );
                assert!(
                    out.primitive_norm <= 50.0 * min_norm.max(1e-12),
                    "construction {:.6e} far above minimum {min_norm:.6e} at degree {k}",
                    out.primitive_norm
                );
            }
        }
    }

    #[test]
    fn worst_mode_lifting_dominates_the_spectral_constant() {
        // Feeding the datum that attains the spectral constant through the
        // construction must give a ratio at least that constant: the
        // construction can only be worse than the optimal primitive.
        let cases: Vec<(Mesh, usize)> =
            vec![(meshgen::unit_square().unwrap(), 1), (meshgen::pyramid().unwrap(), 0)];
        for (mesh, r) in cases {
            let setup = DdrSetup::new(&mesh, r).unwrap();
            let lift = CochainLift::new(&mesh).unwrap();
            for k in 0..mesh.dim() {
                let report = spectral_report(&mesh, &setup, k).unwrap();
                let c_p = report.poincare_constant.unwrap();

                // Worst singular vector of the derivative in the metrics.
                let m_dom = setup.norm_gram(&mesh, k);
                let m_cod = setup.norm_gram(&mesh, k + 1);
                let l_dom = cholesky_spd(&m_dom, "domain Gram").unwrap();
                let l_cod = cholesky_spd(&m_cod, "codomain Gram").unwrap();
                let xt = l_dom
                    .l()
                    .solve_lower_triangular(&setup.derivative(k).transpose())
                    .unwrap();
                let b = l_cod.l().transpose() * xt.transpose();
                let btb = b.transpose() * &b;
                let btb = (&btb + btb.transpose()) * 0.5;
                let eig = btb.symmetric_eigen();
                let lmax = eig.eigenvalues.max();
                let cut = (SPECTRAL_REL_TOL.max(GRAM_SIGMA_FLOOR)).powi(2) * lmax;
                let mut idx = None;
                for i in 0..eig.eigenvalues.len() {
                    if eig.eigenvalues[i] > cut
                        && idx.map_or(true, |j: usize| eig.eigenvalues[i] < eig.eigenvalues[j])
                    {
                        idx = Some(i);
                    }
                }
                let z = eig.eigenvectors.column(idx.unwrap()).into_owned();
                let omega_star = l_dom
                    .l()
                    .transpose()
                    .solve_upper_triangular(&z)
                    .unwrap();
                let omega = DiscreteForm { degree: k, coeffs: omega_star };
                let sigma = setup.apply_derivative(&omega).unwrap();

                let whitney = WhitneySpace::new(&mesh, k).unwrap();
                let out =
                    constructive_primitive(&mesh, &setup, &lift, &whitney, &sigma).unwrap();
                assert!(
                    c_p <= out.constant * (1.0 + 1e-8) + 1e-12,
                    "spectral constant {c_p:.6e} above constructed ratio {:.6e} at degree {k}",
                    out.constant
                );
                assert!(
                    out.constant <= 50.0 * c_p,
                    "constructed ratio {:.6e} far above spectral constant {c_p:.6e} at \
                     degree {k}",
                    out.constant
                );
            }
        }
    }

    #[test]
    fn local_scaling_bound_stays_moderate() {
        // The per-cell bound behind the construction's stability carries
        // only mesh-regularity constants, so its measured value must not
        // drift across a refinement family.
        let mut worst = Vec::new();
        for level in 2..=4 {
            let mesh = meshgen::cartesian_square(level).unwrap();
            let setup = DdrSetup::new(&mesh, 1).unwrap();
            let mut level_worst = 0.0_f64;
            for k in 0..mesh.dim() {
                let probe = lifting_probe(&mesh, &setup, k, 3, DEFAULT_SEED).unwrap();
                level_worst = level_worst.max(probe.local_bound_max);
            }
            worst.push(level_worst);
        }
        for &w in &worst {
            assert!(w.is_finite() && w > 0.0);
        }
        let spread = worst.iter().fold(0.0_f64, |a, &b| a.max(b))
            / worst.iter().fold(f64::MAX, |a, &b| a.min(b));
        assert!(spread < 4.0, "local scaling ratios drift: {worst:?}");
    }

    #[test]
    fn spectral_gap_separates_kernel_from_image() {
        let mesh = meshgen::unit_square().unwrap();
        let setup = DdrSetup::new(&mesh, 1).unwrap();
        // Constants are in the kernel of the gradient: one value is dropped
        // and the reported gap must be a clean separation.
        let grad = spectral_report(&mesh, &setup, 0).unwrap();
        assert!(grad.spectral_gap.unwrap() > 1e6, "gap {:?}", grad.spectral_gap);
        // The last derivative is onto, so nothing is discarded.
        let last = spectral_report(&mesh, &setup, 1).unwrap();
        assert!(last.spectral_gap.is_none(), "gap {:?}", last.spectral_gap);
    }

    #[test]
    fn growth_flag_only_fires_on_steady_increase() {
        assert!(monotone_growth(&[1.0, 1.1, 1.3]));
        assert!(!monotone_growth(&[1.0, 0.9, 0.8]));
        assert!(!monotone_growth(&[1.0, 1.1, 1.05]));
        assert!(!monotone_growth(&[1.0]));
    }

    #[test]
    fn sweep_entry_collects_both_routes() {
        let mesh = meshgen::cartesian_square(2).unwrap();
        let rec = sweep_entry("square", 2, &mesh, 0, 1, 3, DEFAULT_SEED).unwrap();
        assert_eq!(rec.mesh_id, "square");
        assert_eq!(rec.harmonic_dim, 1);
        assert!(rec.poincare_constant.unwrap() > 0.0);
        assert!(rec.lifting_constant > 0.0);
        assert!(rec.lifting_residual <= 1e-9);
        assert_eq!(rec.samples, 3);
        assert!((rec.h - 2.0_f64.sqrt() / 2.0).abs() <= 1e-12);

        let top = sweep_entry("square", 2, &mesh, 2, 1, 3, DEFAULT_SEED).unwrap();
        assert!(top.poincare_constant.is_none());
        assert_eq!(top.samples, 0);
    }
}
