//! Validation and residual reports.
//!
//! These subcommands read a mesh file and either confirm its invariants
//! (`validate`), compare the polytopal and simplicial Betti numbers
//! (`topology betti`), verify the cochain-lift identities at matrix level
//! (`lift check`), or exercise the discrete complex on seeded random
//! inputs (`ddr check`).  Reports print CSV to stdout; any violated
//! threshold turns into a non-zero exit after the full table is printed,
//! so a failing run still shows every number it measured.

use std::path::Path;

use clap::Args;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use formdeck_core::ddr::DdrSetup;
use formdeck_core::lift::CochainLift;
use formdeck_core::mesh::CellRef;
use formdeck_core::topology::{polytopal_complex, simplicial_complex};

use crate::{check_err, fail, load_mesh, resolve_seed, sci, CmdResult, EXIT_CHECK};

/// Residual tolerance for identities that are exact up to round-off.
const TOL_EXACT: f64 = 1e-10;
/// Residual tolerance for the left-inverse identity, which involves no
/// cancellation at all.
const TOL_INVERSE: f64 = 1e-12;
/// Residual tolerance for the lifted coboundary comparison, which sums
/// signed simplex integrals.
const TOL_COCHAIN: f64 = 1e-9;

pub fn validate(path: &Path) -> CmdResult {
    let mesh = load_mesh(path)?;
    let counts: Vec<usize> = (0..=mesh.dim()).map(|k| mesh.cell_count(k)).collect();
    println!(
        "ok: dim {}, cells {:?}, h {}",
        mesh.dim(),
        counts,
        sci(mesh.mesh_size())
    );
    Ok(())
}

pub fn betti(path: &Path) -> CmdResult {
    let mesh = load_mesh(path)?;
    let poly = polytopal_complex(&mesh).betti();
    let simp = simplicial_complex(&mesh).betti();
    println!("k,betti");
    for (k, b) in poly.iter().enumerate() {
        println!("{k},{b}");
    }
    if poly != simp {
        return Err(fail(
            EXIT_CHECK,
            format!("polytopal Betti numbers {poly:?} disagree with simplicial {simp:?}"),
        ));
    }
    Ok(())
}

pub fn lift_check(path: &Path) -> CmdResult {
    let mesh = load_mesh(path)?;
    let lift = CochainLift::new(&mesh).map_err(check_err)?;
    let n = mesh.dim();

    println!("k,lift_cochain,left_inverse,restriction_cochain");
    let mut breaches = Vec::new();
    for k in 0..=n {
        let lift_k = lift.lift_matrix(k);
        let restrict_k = lift.restriction_matrix(k);
        let inverse =
            (restrict_k * lift_k - DMatrix::identity(lift_k.ncols(), lift_k.ncols())).amax();

        let (lift_cochain, restriction_cochain) = if k < n {
            let lifted = lift.simplex_coboundary(k) * lift_k
                - lift.lift_matrix(k + 1) * lift.cell_coboundary(k);
            let restricted = lift.cell_coboundary(k) * restrict_k
                - lift.restriction_matrix(k + 1) * lift.simplex_coboundary(k);
            (Some(lifted.amax()), Some(restricted.amax()))
        } else {
            (None, None)
        };

        println!(
            "{k},{},{},{}",
            crate::sci_opt(lift_cochain),
            sci(inverse),
            crate::sci_opt(restriction_cochain)
        );

        if inverse > TOL_INVERSE {
            breaches.push(format!("left inverse at degree {k}: {}", sci(inverse)));
        }
        if let Some(r) = lift_cochain {
            if r > TOL_COCHAIN {
                breaches.push(format!("lift cochain map at degree {k}: {}", sci(r)));
            }
        }
        if let Some(r) = restriction_cochain {
            if r > TOL_EXACT {
                breaches.push(format!("restriction cochain map at degree {k}: {}", sci(r)));
            }
        }
    }

    if breaches.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_CHECK, breaches.join("; ")))
    }
}

#[derive(Args)]
pub struct DdrCheckArgs {
    /// Mesh file (JSON).
    pub mesh: std::path::PathBuf,
    /// Polynomial degree of the discrete spaces.
    #[arg(long)]
    pub r: usize,
    /// Random inputs drawn per form degree.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    /// Seed override (falls back to FORMDECK_SEED, then the default).
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn ddr_check(args: &DdrCheckArgs) -> CmdResult {
    let mesh = load_mesh(&args.mesh)?;
    let seed = resolve_seed(args.seed)?;
    let n = mesh.dim();
    // Local basis construction grows steeply with the polynomial degree;
    // stay at desk scale instead of letting a typo run unbounded.
    let max_poly = if n >= 3 { 1 } else { 2 };
    if args.r > max_poly {
        return Err(fail(
            crate::EXIT_USAGE,
            format!(
                "polynomial degree {} exceeds the desk-scale cap {max_poly} in dimension {n}",
                args.r
            ),
        ));
    }
    let setup = DdrSetup::new(&mesh, args.r).map_err(check_err)?;

    println!("k,cell_dim,check,worst");
    let mut breaches = Vec::new();
    for k in 0..=n {
        if k + 1 < n {
            // The composed coboundary matrix should vanish identically;
            // normalise by the factor magnitudes so fine meshes (whose
            // coboundary entries grow with surface-to-volume ratios) are
            // judged on the same scale as coarse ones.
            let second = setup.derivative(k + 1) * setup.derivative(k);
            let scale = (setup.derivative(k + 1).amax() * setup.derivative(k).amax()).max(1.0);
            let worst = second.amax() / scale;
            println!("{k},,composition,{}", sci(worst));
            if worst > TOL_EXACT {
                breaches.push(format!("composition at degree {k}: {}", sci(worst)));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64));
        let forms: Vec<_> = (0..args.samples.max(1)).map(|_| setup.random_form(k, &mut rng)).collect();

        let mut norm_ratio = 0.0_f64;
        for form in &forms {
            let explicit = setup.global_norm(&mesh, k, form);
            if explicit > 0.0 {
                norm_ratio = norm_ratio.max(setup.recursive_global_norm(&mesh, k, form) / explicit);
            }
        }
        println!("{k},,norm_ratio,{}", sci(norm_ratio));

        for d in k..=n {
            let mut projection = 0.0_f64;
            let mut relation = 0.0_f64;
            let mut bound = 0.0_f64;
            for form in &forms {
                for id in 0..mesh.cell_count(d) {
                    let f = CellRef { dim: d, id };
                    projection = projection
                        .max(setup.potential_projection_residual(&mesh, k, f, form).map_err(check_err)?);
                    bound = bound
                        .max(setup.potential_bound_ratio(&mesh, k, f, form).map_err(check_err)?);
                    if d > k {
                        relation = relation
                            .max(setup.derivative_relation_residual(&mesh, k, f, form).map_err(check_err)?);
                    }
                }
            }
            println!("{k},{d},projection,{}", sci(projection));
            if projection > TOL_EXACT {
                breaches.push(format!("projection at (k={k}, d={d}): {}", sci(projection)));
            }
            if d > k {
                println!("{k},{d},derivative_relation,{}", sci(relation));
                if relation > TOL_EXACT {
                    breaches.push(format!("derivative relation at (k={k}, d={d}): {}", sci(relation)));
                }
            }
            // Boundedness of the potential is measured, not thresholded:
            // its constant depends on mesh regularity, so the report logs
            // the worst ratio and leaves judgement to the sweep tooling.
            println!("{k},{d},potential_bound,{}", sci(bound));
        }
    }

    if breaches.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_CHECK, breaches.join("; ")))
    }
}
