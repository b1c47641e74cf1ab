//! Poincaré-constant refinement sweeps.
//!
//! `formdeck poincare sweep` measures both routes to the Poincaré constant
//! (spectral pencil and constructive lifting) on every level of a
//! refinement family and writes one CSV row per level.  Level entries are
//! independent, so they run concurrently on a small worker pool; results
//! are committed back in level order, which keeps the CSV byte-identical
//! across runs regardless of worker count.  The CSV carries only
//! deterministic columns; wall-clock timings and the growth diagnostic go
//! to a JSON sidecar next to it.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, ValueEnum};
use formdeck_core::mesh::Mesh;
use formdeck_core::poincare::{monotone_growth, sweep_entry, SweepRecord};
use formdeck_core::{meshgen, Error};
use serde_json::json;

use crate::{fail, io_err, resolve_seed, sci, sci_opt, CmdResult, EXIT_CHECK, EXIT_USAGE};

/// Refinement families the sweep accepts.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    /// Cartesian grid on the unit square.
    Square,
    /// L-shaped domain (three quadrants of the unit square).
    Lshape,
    /// Square annulus with one hole.
    Annulus,
    /// Cartesian grid on the unit cube.
    Cube,
}

impl SweepFamily {
    fn id(self) -> &'static str {
        match self {
            SweepFamily::Square => "square",
            SweepFamily::Lshape => "lshape",
            SweepFamily::Annulus => "annulus",
            SweepFamily::Cube => "cube",
        }
    }

    fn dim(self) -> usize {
        match self {
            SweepFamily::Cube => 3,
            _ => 2,
        }
    }

    /// Highest level (and polynomial degree) this binary will run; dense
    /// spectral decompositions grow fast, so the CLI refuses sizes beyond
    /// desk scale instead of hanging.
    fn caps(self) -> (u32, usize) {
        match self {
            SweepFamily::Square | SweepFamily::Lshape => (6, 2),
            SweepFamily::Annulus => (4, 2),
            SweepFamily::Cube => (3, 1),
        }
    }

    fn build(self, level: u32) -> Result<Mesh, Error> {
        match self {
            SweepFamily::Square => meshgen::cartesian_square(level),
            SweepFamily::Lshape => meshgen::lshape(level),
            SweepFamily::Annulus => meshgen::annulus(level),
            SweepFamily::Cube => meshgen::cartesian_cube(level),
        }
    }
}

#[derive(Args)]
pub struct SweepArgs {
    /// Refinement family to sweep.
    #[arg(long, value_enum)]
    pub family: SweepFamily,
    /// Last refinement level (inclusive).
    #[arg(long)]
    pub levels: u32,
    /// First refinement level (inclusive).
    #[arg(long, default_value_t = 1)]
    pub min_level: u32,
    /// Form degree whose Poincaré constant is measured.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Polynomial degree of the discrete spaces.
    #[arg(long, default_value_t = 0)]
    pub r: usize,
    /// Random data samples per level for the constructive route.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    /// Seed override (falls back to FORMDECK_SEED, then the default).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output CSV path; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SweepArgs) -> CmdResult {
    let seed = resolve_seed(args.seed)?;
    let family = args.family;
    let (max_level, max_poly) = family.caps();
    if args.min_level < 1 || args.min_level > args.levels {
        return Err(fail(
            EXIT_USAGE,
            format!("level range {}..={} is empty", args.min_level, args.levels),
        ));
    }
    if args.levels > max_level {
        return Err(fail(
            EXIT_USAGE,
            format!("{} sweeps stop at level {max_level}", family.id()),
        ));
    }
    if args.k > family.dim() {
        return Err(fail(
            EXIT_USAGE,
            format!("degree {} exceeds the {} dimension {}", args.k, family.id(), family.dim()),
        ));
    }
    if args.r > max_poly {
        return Err(fail(
            EXIT_USAGE,
            format!("{} sweeps stop at polynomial degree {max_poly}", family.id()),
        ));
    }

    let levels: Vec<u32> = (args.min_level..=args.levels).collect();
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, levels.len().max(1));

    // Worker pool: a shared counter hands out level indices, and each
    // worker writes its result into the slot for that index, so the final
    // order is the level order no matter which thread finished first.
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<SweepRecord, String>>>> =
        Mutex::new((0..levels.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&level) = levels.get(i) else { break };
                let outcome = family
                    .build(level)
                    .and_then(|mesh| {
                        sweep_entry(family.id(), level, &mesh, args.k, args.r, args.samples, seed)
                    })
                    .map_err(|e| e.to_string());
                slots.lock().expect("sweep slot lock")[i] = Some(outcome);
            });
        }
    });

    let mut records = Vec::with_capacity(levels.len());
    for (i, slot) in slots.into_inner().expect("sweep slot lock").into_iter().enumerate() {
        match slot.expect("every level index was claimed") {
            Ok(record) => records.push(record),
            Err(message) => {
                return Err(fail(EXIT_CHECK, format!("level {}: {message}", levels[i])))
            }
        }
    }

    write_csv(&args.out, &records)?;
    let sidecar = args.out.with_extension("json");
    write_sidecar(&sidecar, args, seed, &records)?;
    println!("wrote {}", args.out.display());
    println!("wrote {}", sidecar.display());
    Ok(())
}

/// Deterministic columns of a sweep row; `wall_ms` stays in the sidecar.
const CSV_HEADER: [&str; 13] = [
    "mesh_id",
    "level",
    "h",
    "degree",
    "poly_deg",
    "space_dim",
    "harmonic_dim",
    "poincare_constant",
    "spectral_gap",
    "lifting_constant",
    "lifting_residual",
    "samples",
    "seed",
];

fn write_csv(path: &PathBuf, records: &[SweepRecord]) -> CmdResult {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| fail(1, format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| fail(1, format!("{}: {e}", path.display()));
    writer.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        writer
            .write_record([
                r.mesh_id.clone(),
                r.level.to_string(),
                sci(r.h),
                r.degree.to_string(),
                r.poly_deg.to_string(),
                r.space_dim.to_string(),
                r.harmonic_dim.to_string(),
                sci_opt(r.poincare_constant),
                sci_opt(r.spectral_gap),
                sci(r.lifting_constant),
                sci(r.lifting_residual),
                r.samples.to_string(),
                r.seed.to_string(),
            ])
            .map_err(io)?;
    }
    writer.flush().map_err(|e| io_err(&path.display().to_string(), e))
}

/// JSON numbers cannot carry infinities, so unbounded gaps are encoded as
/// the string `"inf"`.
fn json_opt(x: Option<f64>) -> serde_json::Value {
    match x {
        None => serde_json::Value::Null,
        Some(v) if v.is_finite() => json!(v),
        Some(_) => json!("inf"),
    }
}

fn write_sidecar(
    path: &PathBuf,
    args: &SweepArgs,
    seed: u64,
    records: &[SweepRecord],
) -> CmdResult {
    let constants: Vec<f64> = records.iter().filter_map(|r| r.poincare_constant).collect();
    let rows: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            json!({
                "mesh_id": r.mesh_id,
                "level": r.level,
                "h": r.h,
                "degree": r.degree,
                "poly_deg": r.poly_deg,
                "space_dim": r.space_dim,
                "harmonic_dim": r.harmonic_dim,
                "poincare_constant": json_opt(r.poincare_constant),
                "spectral_gap": json_opt(r.spectral_gap),
                "lifting_constant": r.lifting_constant,
                "lifting_residual": r.lifting_residual,
                "samples": r.samples,
                "seed": r.seed,
                "wall_ms": r.wall_ms,
            })
        })
        .collect();
    let doc = json!({
        "family": args.family.id(),
        "degree": args.k,
        "poly_deg": args.r,
        "seed": seed,
        "samples": args.samples,
        "min_level": args.min_level,
        "max_level": args.levels,
        "poincare_constant_growing": monotone_growth(&constants),
        "records": rows,
    });
    let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes") + "\n";
    std::fs::write(path, text).map_err(|e| io_err(&path.display().to_string(), e))
}
