//! Mesh fixture generation.
//!
//! `formdeck gen` materialises one refinement family as a sequence of mesh
//! files, one per level, and prints a CSV manifest (file, level, dimension,
//! top-cell count, mesh size) to stdout.  Generated meshes are re-read and
//! re-validated before they are reported, and the annulus family also has
//! its first Betti number checked so a broken generator cannot silently
//! produce a contractible ring.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use formdeck_core::mesh::Mesh;
use formdeck_core::topology::polytopal_complex;
use formdeck_core::{meshgen, Error};

use crate::{check_err, fail, io_err, resolve_seed, sci, CmdResult, EXIT_CHECK, EXIT_USAGE};

/// Mesh families known to the generator.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Cartesian grid on the unit square.
    Square,
    /// Cartesian grid on the unit cube.
    Cube,
    /// L-shaped domain (three quadrants of the unit square).
    Lshape,
    /// Square annulus (square with a concentric square hole).
    Annulus,
    /// Agglomerated polygonal cells grown over a triangulated square.
    Agglomerated,
    /// Single square-based pyramid (one level only).
    Pyramid,
}

impl Family {
    /// Stable identifier used in file names and reports.
    pub fn id(self) -> &'static str {
        match self {
            Family::Square => "square",
            Family::Cube => "cube",
            Family::Lshape => "lshape",
            Family::Annulus => "annulus",
            Family::Agglomerated => "agglomerated",
            Family::Pyramid => "pyramid",
        }
    }

    /// Builds the mesh at a refinement level (1 is the coarsest).
    pub fn build(self, level: u32, seed: u64) -> Result<Mesh, Error> {
        match self {
            Family::Square => meshgen::cartesian_square(level),
            Family::Cube => meshgen::cartesian_cube(level),
            Family::Lshape => meshgen::lshape(level),
            Family::Annulus => meshgen::annulus(level),
            Family::Agglomerated => meshgen::agglomerated_square(level, seed),
            Family::Pyramid => meshgen::pyramid(),
        }
    }

    /// Whether the family has a single fixed mesh instead of a refinement
    /// hierarchy.
    pub fn single_level(self) -> bool {
        self == Family::Pyramid
    }

    /// Finest level this binary will generate; keeps cell counts at desk
    /// scale (a few thousand top cells).
    pub fn max_level(self) -> u32 {
        match self {
            Family::Square | Family::Lshape | Family::Agglomerated => 7,
            Family::Annulus => 5,
            Family::Cube => 4,
            Family::Pyramid => 1,
        }
    }
}

#[derive(Args)]
pub struct GenArgs {
    /// Family to generate.
    #[arg(long, value_enum)]
    pub family: Family,
    /// Number of refinement levels, starting at the coarsest.
    #[arg(long, default_value_t = 1)]
    pub levels: u32,
    /// Seed for randomised families (agglomerated).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory the mesh files are written to.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn run(args: &GenArgs) -> CmdResult {
    let seed = resolve_seed(args.seed)?;
    let levels = if args.family.single_level() { 1 } else { args.levels.max(1) };
    if levels > args.family.max_level() {
        return Err(fail(
            EXIT_USAGE,
            format!("{} generation stops at level {}", args.family.id(), args.family.max_level()),
        ));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|err| io_err(&args.out_dir.display().to_string(), err))?;

    println!("file,level,dim,cells,h");
    for level in 1..=levels {
        let mesh = args.family.build(level, seed).map_err(check_err)?;
        let name = format!("{}-l{level}.mesh.json", args.family.id());
        let path = args.out_dir.join(&name);
        mesh.save(&path)
            .map_err(|err| fail(1, format!("{}: {err}", path.display())))?;

        // Read back what was written: the file on disk is the product, so
        // it is the file on disk that gets validated.
        let reread = crate::load_mesh(&path)?;
        if args.family == Family::Annulus {
            let betti = polytopal_complex(&reread).betti();
            if betti.get(1) != Some(&1) {
                return Err(fail(
                    EXIT_CHECK,
                    format!("{name}: annulus has Betti numbers {betti:?}, expected one hole"),
                ));
            }
        }
        println!(
            "{},{level},{},{},{}",
            path.display(),
            reread.dim(),
            reread.cell_count(reread.dim()),
            sci(reread.mesh_size()),
        );
    }
    Ok(())
}
