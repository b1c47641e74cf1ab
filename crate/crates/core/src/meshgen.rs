//! Generators for the built-in mesh families.
//!
//! Levels follow a dyadic convention: the square families use a
//! `2^(level−1)` grid per side, the L-shape uses a `2^level` grid minus its
//! upper-right quadrant, and the annulus a `3·2^(level−1)` grid minus the
//! middle ninth. All generators are deterministic; the agglomerated family
//! takes an explicit seed for its random domino matching.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mesh::{CellSpec, Mesh, MeshInput};

/// Grid cells per side for the dyadic square families at `level ≥ 1`.
pub fn grid_side(level: u32) -> usize {
    1 << level.saturating_sub(1).min(20)
}

/// One unit quad split along its diagonal.
pub fn unit_square() -> Result<Mesh> {
    cartesian_square(1)
}

/// `[0,1]²` as an `m×m` quad grid, `m = 2^(level−1)`.
pub fn cartesian_square(level: u32) -> Result<Mesh> {
    let m = grid_side(level);
    quad_grid(m, m, |_, _| true)
}

/// `[0,1]²` minus its upper-right quadrant, on a `2^level` grid.
pub fn lshape(level: u32) -> Result<Mesh> {
    let n = 2 * grid_side(level);
    quad_grid(n, n, move |i, j| !(i >= n / 2 && j >= n / 2))
}

/// `[0,1]²` minus the middle ninth, on a `3·2^(level−1)` grid. The smallest
/// level is a ring of 8 quads; every level has one hole (first Betti number 1).
pub fn annulus(level: u32) -> Result<Mesh> {
    let n = 3 * grid_side(level);
    let (lo, hi) = (n / 3, 2 * n / 3);
    quad_grid(n, n, move |i, j| !(lo..hi).contains(&i) || !(lo..hi).contains(&j))
}

/// `[0,1]³` as an `m×m×m` hex grid, `m = 2^(level−1)`, each hex cut into the
/// six path tetrahedra so neighboring hexes match on shared faces.
pub fn cartesian_cube(level: u32) -> Result<Mesh> {
    let m = grid_side(level);
    hex_grid(m)
}

/// A unit-square-based pyramid: apex over the base center, base quad split
/// at its center into four triangles, volume filled by four tetrahedra. The
/// base center vertex is interior to the base face, not a mesh vertex.
pub fn pyramid() -> Result<Mesh> {
    let vertices = vec![
        DVector::from_column_slice(&[0.0, 0.0, 0.0]),
        DVector::from_column_slice(&[1.0, 0.0, 0.0]),
        DVector::from_column_slice(&[1.0, 1.0, 0.0]),
        DVector::from_column_slice(&[0.0, 1.0, 0.0]),
        DVector::from_column_slice(&[0.5, 0.5, 1.0]), // apex
        DVector::from_column_slice(&[0.5, 0.5, 0.0]), // base center
    ];
    let corners = [0usize, 1, 2, 3];
    let ring = |i: usize| corners[(i + 1) % 4];
    let tets: Vec<Vec<usize>> = (0..4).map(|i| vec![5, corners[i], ring(i), 4]).collect();
    let mut triangles: Vec<Vec<usize>> = (0..4).map(|i| vec![5, corners[i], ring(i)]).collect();
    triangles.extend((0..4).map(|i| vec![corners[i], ring(i), 4]));
    let mut edges: Vec<Vec<usize>> = (0..4).map(|i| vec![corners[i], ring(i)]).collect();
    edges.extend((0..4).map(|i| vec![corners[i], 4]));
    let mut faces = vec![CellSpec::new(vec![0, 1, 2, 3])];
    faces.extend((4..8).map(|i| CellSpec::new(vec![i])));
    Mesh::assemble(MeshInput {
        ambient_dim: 3,
        vertices,
        simplices: vec![Vec::new(), edges, triangles, tets],
        cells: vec![
            (0..5).map(|i| CellSpec::new(vec![i])).collect(),
            (0..8).map(|i| CellSpec::new(vec![i])).collect(),
            faces,
            vec![CellSpec::new(vec![0, 1, 2, 3])],
        ],
    })
}

/// Cartesian grid agglomerated by a seeded greedy domino matching: matched
/// neighbor quads merge into one rectangular cell whose shared edge becomes
/// interior. Unmatched quads stay as they are.
pub fn agglomerated_square(level: u32, seed: u64) -> Result<Mesh> {
    let m = grid_side(level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quad = |i: usize, j: usize| j * m + i;
    let mut partner: Vec<Option<usize>> = vec![None; m * m];
    let mut order: Vec<usize> = (0..m * m).collect();
    order.shuffle(&mut rng);
    for q in order {
        if partner[q].is_some() {
            continue;
        }
        let (i, j) = (q % m, q / m);
        let mut free: Vec<usize> = Vec::new();
        if i + 1 < m && partner[quad(i + 1, j)].is_none() {
            free.push(quad(i + 1, j));
        }
        if i > 0 && partner[quad(i - 1, j)].is_none() {
            free.push(quad(i - 1, j));
        }
        if j + 1 < m && partner[quad(i, j + 1)].is_none() {
            free.push(quad(i, j + 1));
        }
        if j > 0 && partner[quad(i, j - 1)].is_none() {
            free.push(quad(i, j - 1));
        }
        if let Some(&p) = free.choose(&mut rng) {
            partner[q] = Some(p);
            partner[p] = Some(q);
        }
    }
    // group quads into cells: a matched pair forms one cell led by the
    // smaller index
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for q in 0..m * m {
        match partner[q] {
            Some(p) if p < q => {}
            Some(p) => groups.push(vec![q, p]),
            None => groups.push(vec![q]),
        }
    }
    // shared edges of matched pairs are interior, not 1-cells
    let mut interior_rim: BTreeSet<(usize, usize)> = BTreeSet::new();
    let vid = |i: usize, j: usize| j * (m + 1) + i;
    for group in &groups {
        if let [a, b] = group[..] {
            let (ia, ja) = (a % m, a / m);
            let (ib, jb) = (b % m, b / m);
            if ia == ib {
                // vertical neighbors: shared horizontal edge
                let j = ja.max(jb);
                interior_rim.insert((vid(ia, j), vid(ia + 1, j)));
            } else {
                let i = ia.max(ib);
                interior_rim.insert((vid(i, ja), vid(i, ja + 1)));
            }
        }
    }
    quad_grid_grouped(m, m, |_, _| true, &groups, &interior_rim)
}

/// One quad with one corner squashed to height `eps`: a near-degenerate
/// member triangle. Small `eps` fails assembly outright; moderate `eps`
/// assembles but is flagged by the regularity survey.
pub fn sliver(eps: f64) -> Result<Mesh> {
    let vertices = vec![
        DVector::from_column_slice(&[0.0, 0.0]),
        DVector::from_column_slice(&[1.0, 0.0]),
        DVector::from_column_slice(&[1.0, eps]),
        DVector::from_column_slice(&[0.0, 1.0]),
    ];
    let edges = vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0], vec![0, 2]];
    let triangles = vec![vec![0, 1, 2], vec![0, 2, 3]];
    Mesh::assemble(MeshInput {
        ambient_dim: 2,
        vertices,
        simplices: vec![Vec::new(), edges, triangles],
        cells: vec![
            (0..4).map(|i| CellSpec::new(vec![i])).collect(),
            (0..4).map(|i| CellSpec::new(vec![i])).collect(),
            vec![CellSpec::new(vec![0, 1])],
        ],
    })
}

/// A single triangle cell with legs of length `scale`.
pub fn single_triangle(scale: f64) -> Result<Mesh> {
    let vertices = vec![
        DVector::from_column_slice(&[0.0, 0.0]),
        DVector::from_column_slice(&[scale, 0.0]),
        DVector::from_column_slice(&[0.0, scale]),
    ];
    let edges = vec![vec![0, 1], vec![1, 2], vec![2, 0]];
    Mesh::assemble(MeshInput {
        ambient_dim: 2,
        vertices,
        simplices: vec![Vec::new(), edges, vec![vec![0, 1, 2]]],
        cells: vec![
            (0..3).map(|i| CellSpec::new(vec![i])).collect(),
            (0..3).map(|i| CellSpec::new(vec![i])).collect(),
            vec![CellSpec::new(vec![0])],
        ],
    })
}

/// A single tetrahedron cell with legs of length `scale`.
pub fn single_tet(scale: f64) -> Result<Mesh> {
    let vertices = vec![
        DVector::from_column_slice(&[0.0, 0.0, 0.0]),
        DVector::from_column_slice(&[scale, 0.0, 0.0]),
        DVector::from_column_slice(&[0.0, scale, 0.0]),
        DVector::from_column_slice(&[0.0, 0.0, scale]),
    ];
    let edges = vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]];
    let triangles = vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]];
    Mesh::assemble(MeshInput {
        ambient_dim: 3,
        vertices,
        simplices: vec![Vec::new(), edges, triangles, vec![vec![0, 1, 2, 3]]],
        cells: vec![
            (0..4).map(|i| CellSpec::new(vec![i])).collect(),
            (0..6).map(|i| CellSpec::new(vec![i])).collect(),
            (0..4).map(|i| CellSpec::new(vec![i])).collect(),
            vec![CellSpec::new(vec![0])],
        ],
    })
}

/// Quad grid on `[0,1]²` with an arbitrary keep-mask; one cell per quad.
fn quad_grid(nx: usize, ny: usize, keep: impl Fn(usize, usize) -> bool) -> Result<Mesh> {
    let kept: Vec<Vec<usize>> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| keep(i, j))
        .enumerate()
        .map(|(q, _)| vec![q])
        .collect();
    quad_grid_grouped(nx, ny, keep, &kept, &BTreeSet::new())
}

/// Quad grid where `groups` partitions the kept quads (indexed in scan order)
/// into cells, and `interior_rim` lists grid edges interior to some group.
fn quad_grid_grouped(
    nx: usize,
    ny: usize,
    keep: impl Fn(usize, usize) -> bool,
    groups: &[Vec<usize>],
    interior_rim: &BTreeSet<(usize, usize)>,
) -> Result<Mesh> {
    let h = 1.0 / nx.max(ny) as f64;
    let gid = |i: usize, j: usize| j * (nx + 1) + i;
    let kept: Vec<(usize, usize)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| keep(i, j))
        .collect();
    // compact the used grid vertices
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for &(i, j) in &kept {
        for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
            used.insert(gid(i + di, j + dj));
        }
    }
    let compact: BTreeMap<usize, usize> =
        used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let vertices: Vec<DVector<f64>> = used
        .iter()
        .map(|&g| {
            let (i, j) = (g % (nx + 1), g / (nx + 1));
            DVector::from_column_slice(&[i as f64 * h, j as f64 * h])
        })
        .collect();
    // two triangles per kept quad, diagonal corner-to-corner
    let mut triangles: Vec<Vec<usize>> = Vec::new();
    let mut quad_tris: Vec<(usize, usize)> = Vec::new();
    let mut rim: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(i, j) in &kept {
        let a = compact[&gid(i, j)];
        let b = compact[&gid(i + 1, j)];
        let c = compact[&gid(i + 1, j + 1)];
        let d = compact[&gid(i, j + 1)];
        quad_tris.push((triangles.len(), triangles.len() + 1));
        triangles.push(vec![a, b, c]);
        triangles.push(vec![a, c, d]);
        for (u, v) in [(a, b), (b, c), (d, c), (a, d)] {
            rim.insert((u.min(v), u.max(v)));
        }
    }
    // drop rim edges interior to a group (expressed in original grid ids)
    let interior: BTreeSet<(usize, usize)> = interior_rim
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (compact[&u], compact[&v]);
            (u.min(v), u.max(v))
        })
        .collect();
    let edge_cells: Vec<(usize, usize)> = rim.difference(&interior).copied().collect();
    let edges: Vec<Vec<usize>> = edge_cells.iter().map(|&(u, v)| vec![u, v]).collect();
    let cells2: Vec<CellSpec> = groups
        .iter()
        .map(|group| {
            let mut members = Vec::with_capacity(2 * group.len());
            for &q in group {
                let (t1, t2) = quad_tris[q];
                members.push(t1);
                members.push(t2);
            }
            CellSpec::new(members)
        })
        .collect();
    Mesh::assemble(MeshInput {
        ambient_dim: 2,
        vertices,
        simplices: vec![Vec::new(), edges, triangles],
        cells: vec![
            (0..used.len()).map(|v| CellSpec::new(vec![v])).collect(),
            (0..edge_cells.len()).map(|e| CellSpec::new(vec![e])).collect(),
            cells2,
        ],
    })
}

/// Hex grid split into path tetrahedra; every grid face is a quad 2-cell of
/// the two triangles cut by its corner-to-corner diagonal.
fn hex_grid(m: usize) -> Result<Mesh> {
    let h = 1.0 / m as f64;
    let s = m + 1;
    let vid = |i: usize, j: usize, k: usize| (k * s + j) * s + i;
    let vertices: Vec<DVector<f64>> = (0..s * s * s)
        .map(|g| {
            let (i, j, k) = (g % s, (g / s) % s, g / (s * s));
            DVector::from_column_slice(&[i as f64 * h, j as f64 * h, k as f64 * h])
        })
        .collect();
    // the six axis permutations with their signs
    const PERMS: [([usize; 3], i8); 6] = [
        ([0, 1, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([0, 2, 1], -1),
        ([1, 0, 2], -1),
        ([2, 1, 0], -1),
    ];
    let mut tets: Vec<Vec<usize>> = Vec::new();
    let mut hex_tets: Vec<Vec<usize>> = Vec::new();
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let mut ids = Vec::with_capacity(6);
                for (perm, sign) in PERMS {
                    let mut p = [i, j, k];
                    let mut verts = vec![vid(p[0], p[1], p[2])];
                    for &axis in &perm {
                        p[axis] += 1;
                        verts.push(vid(p[0], p[1], p[2]));
                    }
                    if sign < 0 {
                        verts.swap(2, 3);
                    }
                    ids.push(tets.len());
                    tets.push(verts);
                }
                hex_tets.push(ids);
            }
        }
    }
    // grid faces: axis a constant, spanned by the cyclic pair (b, c)
    let mut triangles: Vec<Vec<usize>> = Vec::new();
    let mut face_cells: Vec<CellSpec> = Vec::new();
    for a in 0..3usize {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for slab in 0..=m {
            for v in 0..m {
                for u in 0..m {
                    let point = |du: usize, dv: usize| {
                        let mut p = [0usize; 3];
                        p[a] = slab;
                        p[b] = u + du;
                        p[c] = v + dv;
                        vid(p[0], p[1], p[2])
                    };
                    let (p00, p10, p11, p01) = (point(0, 0), point(1, 0), point(1, 1), point(0, 1));
                    let t = triangles.len();
                    triangles.push(vec![p00, p10, p11]);
                    triangles.push(vec![p00, p11, p01]);
                    face_cells.push(CellSpec::new(vec![t, t + 1]));
                }
            }
        }
    }
    // grid edges along each axis
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for a in 0..3usize {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for w in 0..=m {
            for v in 0..=m {
                for u in 0..m {
                    let mut p = [0usize; 3];
                    p[a] = u;
                    p[b] = v;
                    p[c] = w;
                    let from = vid(p[0], p[1], p[2]);
                    p[a] += 1;
                    edges.push(vec![from, vid(p[0], p[1], p[2])]);
                }
            }
        }
    }
    let nv = vertices.len();
    let ne = edges.len();
    Mesh::assemble(MeshInput {
        ambient_dim: 3,
        vertices,
        simplices: vec![Vec::new(), edges, triangles, tets],
        cells: vec![
            (0..nv).map(|v| CellSpec::new(vec![v])).collect(),
            (0..ne).map(|e| CellSpec::new(vec![e])).collect(),
            face_cells,
            hex_tets.into_iter().map(CellSpec::new).collect(),
        ],
    })
}
