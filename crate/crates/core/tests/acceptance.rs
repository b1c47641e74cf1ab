//! Acceptance suite: one test per shipping criterion.
//!
//! Each test aggregates its measurements over the fixture set and prints a
//! single `[PASS]`/`[FAIL]` line with the measured extremes before
//! asserting, so `--nocapture` (or any failure) shows the whole scoreboard.
//! Tolerances are pinned here and nowhere else; the library's own unit
//! tests probe the same machinery piecewise, while this suite replays the
//! shipping claims end to end on seeded data.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use formdeck_core::ddr::{random_ambient_field, DdrSetup};
use formdeck_core::lift::{cochain_primitive, CochainLift};
use formdeck_core::mesh::{CellRef, Mesh};
use formdeck_core::poincare::{lifting_probe, spectral_report};
use formdeck_core::polyform::constants::{
    decomposition_constant, fit_exponent, measure_local_constants, ChartConstants,
};
use formdeck_core::topology::{
    construct_spanning_set, polytopal_complex, simplicial_complex, SpanningSet,
};
use formdeck_core::whitney::WhitneySpace;
use formdeck_core::{meshgen, DEFAULT_SEED};

/// Prints the scoreboard line for one criterion and asserts it.
fn verdict(criterion: usize, label: &str, pass: bool, detail: &str) {
    let tag = if pass { "[PASS]" } else { "[FAIL]" };
    println!("{tag} criterion {criterion:02}: {label} — {detail}");
    assert!(pass, "criterion {criterion:02} ({label}): {detail}");
}

/// Two-dimensional fixture set exercising quads, agglomerated polygons,
/// and a non-trivial topology.
fn planar_fixtures() -> Vec<(&'static str, Mesh)> {
    vec![
        ("square", meshgen::cartesian_square(2).unwrap()),
        ("agglomerated", meshgen::agglomerated_square(2, DEFAULT_SEED).unwrap()),
        ("annulus", meshgen::annulus(2).unwrap()),
    ]
}

fn volume_fixtures() -> Vec<(&'static str, Mesh)> {
    vec![
        ("pyramid", meshgen::pyramid().unwrap()),
        ("cube", meshgen::cartesian_cube(1).unwrap()),
    ]
}

#[test]
fn c01_complex_compositions_vanish() {
    let mut fixtures = planar_fixtures();
    fixtures.extend(volume_fixtures());

    // Boundary-of-boundary and coboundary-of-coboundary, exactly over the
    // integers, on both the polytopal and the simplicial complex.
    let mut chain_ok = true;
    for (_, mesh) in &fixtures {
        for complex in [polytopal_complex(mesh), simplicial_complex(mesh)] {
            chain_ok &= complex.boundary_squares().iter().all(|m| m.is_zero());
            for k in 0..complex.counts.len().saturating_sub(2) {
                let double = complex.boundary[k + 2]
                    .transpose()
                    .compose(&complex.boundary[k + 1].transpose());
                chain_ok &= double.is_zero();
            }
        }
    }

    // d∘d and κ∘κ on random polynomial forms.
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst_form = 0.0_f64;
    for dim in [2usize, 3] {
        let degs: &[usize] = if dim == 2 { &[0, 1, 2] } else { &[0, 1] };
        for &poly_deg in degs {
            for k in 0..=dim {
                for _ in 0..10 {
                    let omega = random_ambient_field(dim, k, poly_deg, &mut rng).unwrap();
                    let scale = omega.coeffs().amax().max(1.0);
                    if k + 2 <= dim {
                        let dd = omega.d().unwrap().d().unwrap();
                        worst_form = worst_form.max(dd.coeffs().amax() / scale);
                    }
                    if k >= 2 {
                        let kk = omega.koszul().unwrap().koszul().unwrap();
                        worst_form = worst_form.max(kk.coeffs().amax() / scale);
                    }
                }
            }
        }
    }

    // Global discrete derivative composed with itself on seeded elements.
    let mut worst_global = 0.0_f64;
    for (_, mesh) in &fixtures {
        let degs: &[usize] = if mesh.dim() == 2 { &[0, 1, 2] } else { &[0, 1] };
        for &poly_deg in degs {
            let setup = DdrSetup::new(mesh, poly_deg).unwrap();
            for k in 0..mesh.dim().saturating_sub(1) {
                let second = setup.derivative(k + 1) * setup.derivative(k);
                let norm = (setup.derivative(k + 1).amax() * setup.derivative(k).amax()).max(1.0);
                for _ in 0..100 {
                    let x = setup.random_form(k, &mut rng);
                    let image = &second * &x.coeffs;
                    worst_global =
                        worst_global.max(image.amax() / (norm * x.coeffs.amax().max(1.0)));
                }
            }
        }
    }

    let pass = chain_ok && worst_form <= 1e-10 && worst_global <= 1e-10;
    verdict(
        1,
        "chain, polynomial, and discrete compositions vanish",
        pass,
        &format!(
            "integer compositions {}, worst d∘d/κ∘κ {worst_form:.3e}, worst global d∘d {worst_global:.3e}",
            if chain_ok { "exact" } else { "NONZERO" }
        ),
    );
}

#[test]
fn c02_lift_is_a_cochain_map() {
    let mut worst = 0.0_f64;
    for (_, mesh) in fixtures_for_lift() {
        let lift = CochainLift::new(&mesh).unwrap();
        for k in 0..mesh.dim() {
            let residual = (lift.simplex_coboundary(k) * lift.lift_matrix(k)
                - lift.lift_matrix(k + 1) * lift.cell_coboundary(k))
            .amax();
            worst = worst.max(residual);
        }
    }
    verdict(
        2,
        "polytopal-to-simplicial lift commutes with the coboundaries",
        worst <= 1e-9,
        &format!("worst matrix residual {worst:.3e}"),
    );
}

#[test]
fn c03_restriction_left_inverts_the_lift() {
    let mut worst_inverse = 0.0_f64;
    let mut worst_cochain = 0.0_f64;
    for (_, mesh) in fixtures_for_lift() {
        let lift = CochainLift::new(&mesh).unwrap();
        for k in 0..=mesh.dim() {
            let lift_k = lift.lift_matrix(k);
            let identity = DMatrix::identity(lift_k.ncols(), lift_k.ncols());
            worst_inverse =
                worst_inverse.max((lift.restriction_matrix(k) * lift_k - identity).amax());
            if k < mesh.dim() {
                let residual = (lift.cell_coboundary(k) * lift.restriction_matrix(k)
                    - lift.restriction_matrix(k + 1) * lift.simplex_coboundary(k))
                .amax();
                worst_cochain = worst_cochain.max(residual);
            }
        }
    }
    verdict(
        3,
        "restriction is a left inverse and a cochain map",
        worst_inverse <= 1e-12 && worst_cochain <= 1e-10,
        &format!("worst inverse residual {worst_inverse:.3e}, worst cochain residual {worst_cochain:.3e}"),
    );
}

/// Square, agglomerated polygons, annulus, and the pyramid: the four lift
/// fixtures.
fn fixtures_for_lift() -> Vec<(&'static str, Mesh)> {
    let mut fixtures = planar_fixtures();
    fixtures.push(("pyramid", meshgen::pyramid().unwrap()));
    fixtures
}

#[test]
fn c04_spanning_sets_are_dual_and_complete() {
    let mut fixtures = planar_fixtures();
    fixtures.extend(volume_fixtures());

    let mut worst_duality = 0.0_f64;
    let mut dims_ok = true;
    for (_, mesh) in &fixtures {
        for d in 1..=mesh.dim() {
            for cell in mesh.cells(d) {
                for k in 0..d {
                    let set = construct_spanning_set(mesh, cell, k).unwrap();
                    dims_ok &= set.elements.len() == SpanningSet::expected_len(mesh, cell, k);
                    let row = |simplex: usize| {
                        cell.closure_simplices[k].binary_search(&simplex).unwrap()
                    };
                    for (i, fi) in set.elements.iter().enumerate() {
                        for (j, ej) in set.elements.iter().enumerate() {
                            let pairing = ej.z[row(fi.simplex)];
                            let expected = if i == j { 1.0 } else { 0.0 };
                            worst_duality = worst_duality.max((pairing - expected).abs());
                        }
                    }
                }
            }
        }
    }

    // The unit square's single interior edge: its cycle carries unit weight
    // on the diagonal and half weights on the rim, from a half-half split
    // over the two triangles.
    let square = meshgen::unit_square().unwrap();
    let quad = &square.cells(2)[0];
    let set = construct_spanning_set(&square, quad, 1).unwrap();
    let mut square_ok = set.elements.len() == 1;
    if let Some(el) = set.elements.first() {
        square_ok &= el.w.len() == 2 && el.w.iter().all(|&v| (v.abs() - 0.5).abs() <= 1e-12);
        let diag = quad.closure_simplices[1].binary_search(&el.simplex).unwrap();
        for (r, &v) in el.z.iter().enumerate() {
            let expected = if r == diag { 1.0 } else { 0.5 };
            square_ok &= (v.abs() - expected).abs() <= 1e-12;
        }
    }

    verdict(
        4,
        "cell spanning sets hit their dimension counts with dual cycles",
        dims_ok && worst_duality <= 1e-10 && square_ok,
        &format!(
            "dimension identity {}, worst duality residual {worst_duality:.3e}, square half-weights {}",
            if dims_ok { "exact" } else { "VIOLATED" },
            if square_ok { "recovered" } else { "WRONG" }
        ),
    );
}

#[test]
fn c05_cochain_primitives_exist_with_stable_constants() {
    let families: [(&str, fn(u32) -> Mesh, [u32; 3]); 3] = [
        ("square", |l| meshgen::cartesian_square(l).unwrap(), [2, 3, 4]),
        ("lshape", |l| meshgen::lshape(l).unwrap(), [2, 3, 4]),
        ("annulus", |l| meshgen::annulus(l).unwrap(), [1, 2, 3]),
    ];
    let mut worst_residual = 0.0_f64;
    let mut worst_spread = 0.0_f64;
    for (fi, (_, build, levels)) in families.iter().enumerate() {
        for k in 0..=1usize {
            let mut level_constants = Vec::new();
            for &level in levels {
                let mesh = build(level);
                let lift = CochainLift::new(&mesh).unwrap();
                let space = WhitneySpace::new(&mesh, k).unwrap();
                let coboundary = lift.cell_coboundary(k).clone();
                // Comparing the constant across levels needs the same data
                // at every level: each seed cochain integrates a fixed
                // random polynomial field over the cells, with the field
                // sequence restarted per level so all levels see the same
                // twenty fields.
                let mut rng =
                    ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 5 ^ ((fi as u64) << 8 | k as u64));
                let ambient = formdeck_core::ddr::ambient_frame(mesh.dim());
                let mut constant = 0.0_f64;
                for _ in 0..20 {
                    let field = random_ambient_field(mesh.dim(), k, 1, &mut rng).unwrap();
                    let forms: Vec<_> = (0..mesh.simplex_count(mesh.dim()))
                        .map(|t| field.trace(&ambient.embed(&space.chart(t).frame)).unwrap())
                        .collect();
                    let simplicial = space.de_rham(&forms).unwrap();
                    let seed_cochain = lift.restrict(k, &simplicial);
                    let data = &coboundary * seed_cochain;
                    if data.amax() <= 1e-12 {
                        continue;
                    }
                    let out = cochain_primitive(&mesh, &lift, &space, &data).unwrap();
                    let residual = (&coboundary * &out.potential - &data).amax();
                    worst_residual = worst_residual.max(residual / data.amax().max(1.0));
                    constant = constant.max(out.constant);
                }
                level_constants.push(constant);
            }
            let spread = level_constants.iter().fold(0.0, |a: f64, &b| a.max(b))
                / level_constants.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            worst_spread = worst_spread.max(spread);
        }
    }
    verdict(
        5,
        "coboundary data admits primitives with refinement-stable constants",
        worst_residual <= 1e-9 && worst_spread < 2.0,
        &format!("worst relative residual {worst_residual:.3e}, worst constant spread {worst_spread:.3}x over 3 levels"),
    );
}

#[test]
fn c06_whitney_basis_is_dual_normalized_and_scales() {
    let meshes = [
        meshgen::single_triangle(1.0).unwrap(),
        meshgen::single_tet(1.0).unwrap(),
        meshgen::cartesian_square(2).unwrap(),
        meshgen::pyramid().unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 6);
    let mut worst_off = 0.0_f64;
    let mut worst_diag = 0.0_f64;
    let mut worst_inverse = 0.0_f64;
    for mesh in &meshes {
        for k in 0..=mesh.dim() {
            let space = WhitneySpace::new(mesh, k).unwrap();
            for j in 0..space.len() {
                let mut unit = DVector::zeros(space.len());
                unit[j] = 1.0;
                let column = space.de_rham(&space.whitney_map(&unit).unwrap()).unwrap();
                for i in 0..space.len() {
                    if i == j {
                        worst_diag = worst_diag.max((column[i] - space.diagonal()).abs());
                    } else {
                        worst_off = worst_off.max(column[i].abs());
                    }
                }
            }
            for _ in 0..10 {
                let cochain =
                    DVector::from_fn(space.len(), |_, _| rng.gen_range(-1.0..=1.0_f64));
                let back = space.de_rham(&space.whitney_map(&cochain).unwrap()).unwrap();
                worst_inverse = worst_inverse.max((back - cochain).amax());
            }
        }
    }

    // Uniform scaling: every squared basis norm times h^(2k − n) is a
    // scale invariant of the shape.
    let mut worst_scaling = 0.0_f64;
    for dim in [2usize, 3] {
        let build = |s: f64| {
            if dim == 2 { meshgen::single_triangle(s) } else { meshgen::single_tet(s) }
        };
        for k in 0..=dim {
            let reference: Vec<f64> = {
                let mesh = build(1.0).unwrap();
                let space = WhitneySpace::new(&mesh, k).unwrap();
                let h = mesh.mesh_size();
                (0..space.len())
                    .map(|j| space.gram()[(j, j)] * h.powi(2 * k as i32 - dim as i32))
                    .collect()
            };
            for s in [0.5, 2.0, 5.0] {
                let mesh = build(s).unwrap();
                let space = WhitneySpace::new(&mesh, k).unwrap();
                let h = mesh.mesh_size();
                for (j, &r) in reference.iter().enumerate() {
                    let v = space.gram()[(j, j)] * h.powi(2 * k as i32 - dim as i32);
                    worst_scaling = worst_scaling.max((v / r - 1.0).abs());
                }
            }
        }
    }

    verdict(
        6,
        "basis forms integrate to a dual basis and scale homogeneously",
        worst_off <= 1e-12 && worst_diag <= 1e-10 && worst_inverse <= 1e-10
            && worst_scaling <= 1e-8,
        &format!(
            "worst off-diagonal {worst_off:.3e}, diagonal spread {worst_diag:.3e}, inverse residual {worst_inverse:.3e}, scaling drift {worst_scaling:.3e}"
        ),
    );
}

#[test]
fn c07_reconstructions_are_consistent() {
    let fixtures: Vec<(Mesh, Vec<usize>)> = vec![
        (meshgen::cartesian_square(2).unwrap(), vec![0, 1, 2]),
        (meshgen::agglomerated_square(2, DEFAULT_SEED).unwrap(), vec![1]),
        (meshgen::pyramid().unwrap(), vec![0, 1]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 7);
    let mut worst_projection = 0.0_f64;
    let mut worst_relation = 0.0_f64;
    let mut worst_commutation = 0.0_f64;
    for (mesh, degrees) in &fixtures {
        let n = mesh.dim();
        for &poly_deg in degrees {
            let setup = DdrSetup::new(mesh, poly_deg).unwrap();
            for k in 0..=n {
                for _ in 0..5 {
                    let form = setup.random_form(k, &mut rng);
                    for d in k..=n {
                        for id in 0..mesh.cell_count(d) {
                            let f = CellRef { dim: d, id };
                            worst_projection = worst_projection
                                .max(setup.potential_projection_residual(mesh, k, f, &form).unwrap());
                            if d > k {
                                worst_relation = worst_relation.max(
                                    setup.derivative_relation_residual(mesh, k, f, &form).unwrap(),
                                );
                            }
                        }
                    }
                }
                // Interpolating then differentiating equals differentiating
                // then interpolating, for ambient polynomial fields within
                // the space's degree.
                if k < n {
                    for deg in 0..=poly_deg {
                        for _ in 0..5 {
                            let field = random_ambient_field(n, k, deg, &mut rng).unwrap();
                            let through = setup
                                .apply_derivative(&setup.interpolate(mesh, &field).unwrap())
                                .unwrap();
                            let direct = setup.interpolate(mesh, &field.d().unwrap()).unwrap();
                            let scale = direct.coeffs.amax().max(1.0);
                            worst_commutation = worst_commutation
                                .max((through.coeffs - direct.coeffs).amax() / scale);
                        }
                    }
                }
            }
        }
    }
    verdict(
        7,
        "potentials project back, satisfy the boundary identity, and commute",
        worst_projection <= 1e-10 && worst_relation <= 1e-10 && worst_commutation <= 1e-9,
        &format!(
            "worst projection {worst_projection:.3e}, worst boundary identity {worst_relation:.3e}, worst commutation {worst_commutation:.3e}"
        ),
    );
}

#[test]
fn c08_constructed_primitives_invert_the_derivative_stably() {
    let families: [(&str, fn(u32) -> Mesh, Vec<usize>); 2] = [
        ("square", |l| meshgen::cartesian_square(l).unwrap(), vec![0, 1]),
        ("agglomerated", |l| meshgen::agglomerated_square(l, DEFAULT_SEED).unwrap(), vec![1]),
    ];
    let mut worst_residual = 0.0_f64;
    let mut worst_spread = 0.0_f64;
    for (_, build, poly_degs) in &families {
        for &poly_deg in poly_degs {
            for k in 0..=1usize {
                let mut constants = Vec::new();
                for level in 2..=4u32 {
                    let mesh = build(level);
                    let setup = DdrSetup::new(&mesh, poly_deg).unwrap();
                    let probe = lifting_probe(&mesh, &setup, k, 20, DEFAULT_SEED).unwrap();
                    worst_residual = worst_residual.max(probe.max_residual);
                    constants.push(probe.constant);
                }
                let spread = constants.iter().fold(0.0, |a: f64, &b| a.max(b))
                    / constants.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                worst_spread = worst_spread.max(spread);
            }
        }
    }
    verdict(
        8,
        "derivative data lifts to primitives with refinement-stable ratios",
        worst_residual <= 1e-9 && worst_spread < 2.0,
        &format!(
            "worst relative residual {worst_residual:.3e}, worst ratio spread {worst_spread:.3}x over levels 2-4"
        ),
    );
}

#[test]
fn c09_spectral_constants_are_stable_and_topology_aware() {
    // Stability window on the planar cartesian family: three levels inside
    // the asymptotic regime.
    let mut worst_square_spread = 0.0_f64;
    for poly_deg in 0..=1usize {
        for k in 0..=1usize {
            let mut constants = Vec::new();
            for level in 2..=4u32 {
                let mesh = meshgen::cartesian_square(level).unwrap();
                let setup = DdrSetup::new(&mesh, poly_deg).unwrap();
                let report = spectral_report(&mesh, &setup, k).unwrap();
                constants.push(report.poincare_constant.unwrap());
            }
            let spread = constants.iter().fold(0.0, |a: f64, &b| a.max(b))
                / constants.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            worst_square_spread = worst_square_spread.max(spread);
        }
    }

    // The cube family only reaches three levels at desk scale and its first
    // level is the single cell, still approaching the limit from above: the
    // constants must never grow, and the refined pair must sit in the same
    // stability window.
    let mut cube_monotone = true;
    let mut worst_cube_pair = 0.0_f64;
    for k in 0..=2usize {
        let mut constants = Vec::new();
        for level in 1..=3u32 {
            let mesh = meshgen::cartesian_cube(level).unwrap();
            let setup = DdrSetup::new(&mesh, 0).unwrap();
            let report = spectral_report(&mesh, &setup, k).unwrap();
            constants.push(report.poincare_constant.unwrap());
        }
        cube_monotone &= constants.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-3));
        worst_cube_pair = worst_cube_pair.max(constants[1] / constants[2]);
    }

    // Harmonic dimensions: trivial on contractible fixtures, one detected
    // hole on the annulus at degree one.
    let mut harmonics_ok = true;
    let contractible = [
        meshgen::cartesian_square(2).unwrap(),
        meshgen::lshape(2).unwrap(),
        meshgen::pyramid().unwrap(),
        meshgen::cartesian_cube(1).unwrap(),
    ];
    for mesh in &contractible {
        let degs: &[usize] = if mesh.dim() == 2 { &[0, 1] } else { &[0] };
        for &poly_deg in degs {
            let setup = DdrSetup::new(mesh, poly_deg).unwrap();
            for k in 0..=mesh.dim() {
                let report = spectral_report(mesh, &setup, k).unwrap();
                let expected = usize::from(k == 0);
                harmonics_ok &= report.harmonic_dim == expected;
            }
        }
    }
    let annulus = meshgen::annulus(2).unwrap();
    for poly_deg in 0..=1usize {
        let setup = DdrSetup::new(&annulus, poly_deg).unwrap();
        for (k, expected) in [(0usize, 1usize), (1, 1), (2, 0)] {
            let report = spectral_report(&annulus, &setup, k).unwrap();
            harmonics_ok &= report.harmonic_dim == expected;
        }
    }

    // Single-cell constants against a brute-force oracle: explicit metric
    // factorization and a full singular value decomposition.
    let mut worst_oracle = 0.0_f64;
    let single = meshgen::single_triangle(1.0).unwrap();
    for poly_deg in 0..=2usize {
        let setup = DdrSetup::new(&single, poly_deg).unwrap();
        for k in 0..=1usize {
            let report = spectral_report(&single, &setup, k).unwrap();
            let oracle = dense_oracle_constant(&single, &setup, k);
            if let (Some(measured), Some(reference)) = (report.poincare_constant, oracle) {
                worst_oracle = worst_oracle.max((measured / reference - 1.0).abs());
            } else {
                harmonics_ok = false;
            }
        }
    }

    verdict(
        9,
        "spectral constants are refinement-stable, topological, and oracle-exact",
        worst_square_spread < 1.5
            && cube_monotone
            && worst_cube_pair < 1.5
            && harmonics_ok
            && worst_oracle <= 1e-8,
        &format!(
            "square spread {worst_square_spread:.3}x, cube non-growing {cube_monotone} (refined pair {worst_cube_pair:.3}x), harmonic dims {}, oracle deviation {worst_oracle:.3e}",
            if harmonics_ok { "correct" } else { "WRONG" }
        ),
    );
}

/// Brute-force generalized singular values: factor both norms, invert the
/// domain factor densely, and run a full SVD on the resulting matrix.
fn dense_oracle_constant(mesh: &Mesh, setup: &DdrSetup, k: usize) -> Option<f64> {
    let domain = setup.norm_gram(mesh, k);
    let codomain = setup.norm_gram(mesh, k + 1);
    let l_dom = domain.cholesky()?.l();
    let l_cod = codomain.cholesky()?.l();
    let b = l_cod.transpose() * setup.derivative(k) * l_dom.transpose().try_inverse()?;
    let mut sv: Vec<f64> = b.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cutoff = sv.first().copied().unwrap_or(0.0) * 1e-7;
    let min_kept = sv.iter().copied().take_while(|&s| s > cutoff).last()?;
    Some(1.0 / min_kept)
}

#[test]
fn c10_chart_constants_scale_with_their_exponents() {
    let shapes: [(&str, Mesh); 3] = [
        ("triangle", meshgen::single_triangle(1.0).unwrap()),
        ("square", meshgen::unit_square().unwrap()),
        ("tet", meshgen::single_tet(1.0).unwrap()),
    ];
    let mut worst_exponent = 0.0_f64;
    let mut worst_drift = 0.0_f64;
    for (_, mesh) in &shapes {
        let dim = mesh.dim();
        let cell = mesh.cells(dim)[0].geometry.clone();
        let face = mesh.cells(dim - 1)[0].geometry.clone();
        let pairs: &[(usize, usize)] =
            if dim == 2 { &[(0, 1), (0, 2), (1, 2)] } else { &[(0, 1), (1, 1)] };
        for &(k, r) in pairs {
            let mut samples: Vec<[(f64, f64); 5]> = Vec::new();
            let mut decomposition = Vec::new();
            for l in 0..4 {
                let s = 0.5_f64.powi(l);
                let scaled = cell.rescaled(s);
                let constants =
                    measure_local_constants(&scaled, &face.rescaled(s), k, r).unwrap();
                samples.push(constants.as_array().map(|v| (scaled.diameter, v)));
                decomposition.push(decomposition_constant(&scaled, k + 1, r).unwrap());
            }
            for i in 0..5 {
                let points: Vec<(f64, f64)> = samples.iter().map(|row| row[i]).collect();
                let slope = fit_exponent(&points);
                worst_exponent = worst_exponent.max((slope - ChartConstants::EXPONENTS[i]).abs());
            }
            let base = decomposition[0];
            for v in &decomposition {
                worst_drift = worst_drift.max((v / base - 1.0).abs());
            }
        }
    }
    verdict(
        10,
        "chart constants scale by their exponents; the split constant does not",
        worst_exponent <= 1e-6 && worst_drift <= 1e-2,
        &format!("worst exponent error {worst_exponent:.3e}, worst decomposition drift {worst_drift:.3e}"),
    );
}
