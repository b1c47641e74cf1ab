//! Polytopal meshes assembled from conforming simplicial submeshes.
//!
//! A mesh is a simplicial complex (face-complete) together with a partition
//! of its simplices into polytopal cells: each `k`-cell owns the member
//! `k`-simplices whose union it is. The boundary relation between cells and
//! its ±1 incidence signs are *derived* from simplicial boundary chains
//! rather than declared, so a mesh that assembles is automatically a chain
//! complex. Assembly further validates membership uniqueness, orientation
//! coherence of members in each cell frame, the ball topology of every cell
//! closure, and that every simplex is interior to exactly one cell.

pub mod format;
pub mod geometry;

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, InvariantKind, Result};
use crate::linalg::rank;
use geometry::{diameter, orthonormal_frame, simplex_measure, CellGeometry, Frame, MemberSimplex};

/// Relative tolerance below which a member simplex counts as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

/// A simplex stored as an ordered vertex tuple; the order fixes its
/// orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub verts: Vec<usize>,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.verts.len() - 1
    }

    pub fn sorted_key(&self) -> Vec<usize> {
        let mut key = self.verts.clone();
        key.sort_unstable();
        key
    }
}

/// Reference to a cell by dimension and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub dim: usize,
    pub id: usize,
}

/// One polytopal cell: members, derived boundary, chart geometry, and the
/// simplicial structure of its closure.
#[derive(Debug, Clone)]
pub struct Cell {
    pub dim: usize,
    pub id: usize,
    /// Member `dim`-simplices (ids into the mesh's simplex list of that dim).
    pub members: Vec<usize>,
    /// Boundary cells one dimension down with their incidence signs.
    pub boundary: Vec<(usize, i8)>,
    pub geometry: CellGeometry,
    /// Cells of the closure per dimension (`closure_cells[dim] == [id]`).
    pub closure_cells: Vec<Vec<usize>>,
    /// Simplices of the closure submesh per dimension.
    pub closure_simplices: Vec<Vec<usize>>,
    /// Simplices of the boundary submesh per dimension (length `dim`).
    pub boundary_simplices: Vec<Vec<usize>>,
    /// Closure simplices not on the boundary, per dimension.
    pub interior_simplices: Vec<Vec<usize>>,
}

impl Cell {
    pub fn diameter(&self) -> f64 {
        self.geometry.diameter
    }

    pub fn measure(&self) -> f64 {
        self.geometry.measure
    }

    pub fn star_point(&self) -> &DVector<f64> {
        &self.geometry.frame.origin
    }
}

/// Input to mesh assembly: vertices, simplices (0-simplices implicit), and
/// cell membership lists per dimension.
#[derive(Debug, Clone, Default)]
pub struct MeshInput {
    pub ambient_dim: usize,
    pub vertices: Vec<DVector<f64>>,
    /// `simplices[k]` lists vertex tuples of the `k`-simplices, `k ≥ 1`.
    pub simplices: Vec<Vec<Vec<usize>>>,
    /// `cells[k]` lists the `k`-cells.
    pub cells: Vec<Vec<CellSpec>>,
}

/// Specification of one cell before assembly.
#[derive(Debug, Clone)]
pub struct CellSpec {
    /// Member simplex ids (for 0-cells, the single vertex id).
    pub members: Vec<usize>,
    /// Optional star point; defaults to the measure-weighted barycenter.
    pub star_point: Option<DVector<f64>>,
}

impl CellSpec {
    pub fn new(members: Vec<usize>) -> CellSpec {
        CellSpec { members, star_point: None }
    }
}

/// A validated polytopal mesh.
#[derive(Debug, Clone)]
pub struct Mesh {
    ambient_dim: usize,
    vertices: Vec<DVector<f64>>,
    /// `simplices[k]`: all `k`-simplices. Index 0 mirrors the vertex list.
    simplices: Vec<Vec<Simplex>>,
    /// `simplex_boundary[k][s]`: signed (k−1)-faces of simplex `s`, `k ≥ 1`.
    simplex_boundary: Vec<Vec<Vec<(usize, i8)>>>,
    /// `cells[k]`: all `k`-cells.
    cells: Vec<Vec<Cell>>,
    /// `interior_owner[j][s]`: the unique cell having simplex `s` interior.
    interior_owner: Vec<Vec<CellRef>>,
    /// Sorted-vertex-key lookup per dimension.
    key_maps: KeyMaps,
}

impl Mesh {
    /// Highest cell dimension.
    pub fn dim(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn simplices(&self, k: usize) -> &[Simplex] {
        &self.simplices[k]
    }

    pub fn simplex_count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    /// Signed (k−1)-faces of a k-simplex (`k ≥ 1`).
    pub fn simplex_boundary(&self, k: usize, s: usize) -> &[(usize, i8)] {
        &self.simplex_boundary[k][s]
    }

    pub fn cells(&self, k: usize) -> &[Cell] {
        &self.cells[k]
    }

    pub fn cell_count(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, Vec::len)
    }

    pub fn cell(&self, r: CellRef) -> &Cell {
        &self.cells[r.dim][r.id]
    }

    /// The unique cell whose relative interior contains simplex `s` of dim `j`.
    pub fn interior_owner(&self, j: usize, s: usize) -> CellRef {
        self.interior_owner[j][s]
    }

    /// Looks up a simplex by its vertex set (any order).
    pub fn simplex_by_verts(&self, k: usize, verts: &[usize]) -> Option<usize> {
        let mut key = verts.to_vec();
        key.sort_unstable();
        self.key_maps.get(k)?.get(&key).copied()
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.cells
            .iter()
            .flatten()
            .map(|c| c.geometry.diameter)
            .fold(0.0, f64::max)
    }

    /// Ambient coordinates of a simplex's vertices, one column per vertex.
    pub fn simplex_coords(&self, k: usize, s: usize) -> DMatrix<f64> {
        let verts = &self.simplices[k][s].verts;
        let mut m = DMatrix::zeros(self.ambient_dim, verts.len());
        for (j, &v) in verts.iter().enumerate() {
            m.set_column(j, &self.vertices[v]);
        }
        m
    }

    pub fn assemble(input: MeshInput) -> Result<Mesh> {
        let n = input.ambient_dim;
        for (i, v) in input.vertices.iter().enumerate() {
            if v.len() != n {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("vertex {i} has {} coordinates, ambient dimension is {n}", v.len()),
                ));
            }
        }
        let max_dim = input.cells.len().saturating_sub(1);
        if input.cells.is_empty() {
            return Err(Error::invariant(InvariantKind::Conformity, "mesh has no cells"));
        }
        if max_dim > n {
            return Err(Error::invariant(
                InvariantKind::Conformity,
                format!("cells of dimension {max_dim} in ambient dimension {n}"),
            ));
        }

        let (simplices, key_maps) = build_simplices(&input, max_dim)?;
        let simplex_boundary = build_simplex_boundaries(&simplices, &key_maps)?;
        let mut cells = build_cells(&input, &simplices)?;
        derive_boundaries(&mut cells, &simplices, &simplex_boundary)?;
        build_closures(&mut cells, &simplices, &key_maps)?;
        let interior_owner = check_selection(&cells, &simplices)?;
        check_boundary_of_boundary(&cells)?;
        check_ball_topology(&cells, &simplex_boundary)?;

        Ok(Mesh {
            ambient_dim: n,
            vertices: input.vertices,
            simplices,
            simplex_boundary,
            cells,
            interior_owner,
            key_maps,
        })
    }
}

/// Parity (+1/−1) of the permutation mapping tuple `a` onto tuple `b`
/// (distinct entries, same set).
fn relative_parity(a: &[usize], b: &[usize]) -> i8 {
    let perm: Vec<usize> =
        b.iter().map(|v| a.iter().position(|w| w == v).expect("same vertex set")).collect();
    let mut sign = 1i8;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

type KeyMaps = Vec<HashMap<Vec<usize>, usize>>;

/// Builds the face-complete simplex lists: listed simplices keep their input
/// ids; missing faces are appended with ascending vertex order.
fn build_simplices(input: &MeshInput, max_dim: usize) -> Result<(Vec<Vec<Simplex>>, KeyMaps)> {
    let nverts = input.vertices.len();
    let mut simplices: Vec<Vec<Simplex>> = vec![Vec::new(); max_dim + 1];
    let mut key_maps: KeyMaps = vec![HashMap::new(); max_dim + 1];
    simplices[0] = (0..nverts).map(|i| Simplex { verts: vec![i] }).collect();
    for i in 0..nverts {
        key_maps[0].insert(vec![i], i);
    }
    for k in 1..=max_dim {
        let listed = input.simplices.get(k).map_or(&[][..], Vec::as_slice);
        for (i, verts) in listed.iter().enumerate() {
            if verts.len() != k + 1 {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("{k}-simplex {i} has {} vertices", verts.len()),
                ));
            }
            if verts.iter().any(|&v| v >= nverts) {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("{k}-simplex {i} references a missing vertex"),
                ));
            }
            let s = Simplex { verts: verts.clone() };
            let key = s.sorted_key();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invariant(
                    InvariantKind::Degenerate,
                    format!("{k}-simplex {i} repeats a vertex"),
                ));
            }
            if key_maps[k].insert(key, i).is_some() {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("duplicate {k}-simplex {i}"),
                ));
            }
            simplices[k].push(s);
        }
    }
    // complete faces top-down; vertex faces of edges always exist already
    for k in (2..=max_dim).rev() {
        let parents: Vec<Vec<usize>> = simplices[k].iter().map(|s| s.verts.clone()).collect();
        for verts in parents {
            for omit in 0..verts.len() {
                let mut key: Vec<usize> = verts.clone();
                key.remove(omit);
                key.sort_unstable();
                if !key_maps[k - 1].contains_key(&key) {
                    let id = simplices[k - 1].len();
                    simplices[k - 1].push(Simplex { verts: key.clone() });
                    key_maps[k - 1].insert(key, id);
                }
            }
        }
    }
    Ok((simplices, key_maps))
}

/// Signed boundary faces of every simplex of dimension ≥ 1.
fn build_simplex_boundaries(
    simplices: &[Vec<Simplex>],
    key_maps: &KeyMaps,
) -> Result<Vec<Vec<Vec<(usize, i8)>>>> {
    let mut out: Vec<Vec<Vec<(usize, i8)>>> = vec![Vec::new(); simplices.len()];
    for k in 1..simplices.len() {
        for s in &simplices[k] {
            let mut faces = Vec::with_capacity(k + 1);
            for omit in 0..=k {
                let mut tuple = s.verts.clone();
                tuple.remove(omit);
                let mut key = tuple.clone();
                key.sort_unstable();
                let id = *key_maps[k - 1].get(&key).ok_or_else(|| {
                    Error::invariant(InvariantKind::Conformity, "missing face after completion")
                })?;
                let stored = &simplices[k - 1][id];
                let sign = if omit % 2 == 0 { 1 } else { -1 };
                faces.push((id, sign * relative_parity(&tuple, &stored.verts)));
            }
            out[k].push(faces);
        }
    }
    Ok(out)
}

/// Constructs cell geometry and validates member orientation coherence.
fn build_cells(input: &MeshInput, simplices: &[Vec<Simplex>]) -> Result<Vec<Vec<Cell>>> {
    let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); input.cells.len()];
    for (k, specs) in input.cells.iter().enumerate() {
        for (id, spec) in specs.iter().enumerate() {
            let label = format!("{k}-cell {id}");
            if spec.members.is_empty() {
                return Err(Error::invariant(InvariantKind::Conformity, format!("{label} is empty")));
            }
            if spec.members.iter().any(|&m| m >= simplices[k].len()) {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("{label} references a missing simplex"),
                ));
            }
            {
                let mut seen = spec.members.clone();
                seen.sort_unstable();
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::invariant(
                        InvariantKind::Selection,
                        format!("{label} repeats a member"),
                    ));
                }
            }
            let geometry = if k == 0 {
                if spec.members.len() != 1 {
                    return Err(Error::invariant(
                        InvariantKind::Conformity,
                        format!("{label} must have exactly one vertex"),
                    ));
                }
                CellGeometry::point(input.vertices[simplices[0][spec.members[0]].verts[0]].clone())
            } else {
                cell_geometry(input, simplices, k, spec, &label)?
            };
            cells[k].push(Cell {
                dim: k,
                id,
                members: spec.members.clone(),
                boundary: Vec::new(),
                geometry,
                closure_cells: Vec::new(),
                closure_simplices: Vec::new(),
                boundary_simplices: Vec::new(),
                interior_simplices: Vec::new(),
            });
        }
    }
    Ok(cells)
}

fn cell_geometry(
    input: &MeshInput,
    simplices: &[Vec<Simplex>],
    k: usize,
    spec: &CellSpec,
    label: &str,
) -> Result<CellGeometry> {
    let verts_of = |m: usize| -> Vec<DVector<f64>> {
        simplices[k][m].verts.iter().map(|&v| input.vertices[v].clone()).collect()
    };
    // collect all vertices of the cell
    let mut all_points: Vec<DVector<f64>> = Vec::new();
    let mut seen = HashSet::new();
    for &m in &spec.members {
        for &v in &simplices[k][m].verts {
            if seen.insert(v) {
                all_points.push(input.vertices[v].clone());
            }
        }
    }
    let h = diameter(&all_points);
    if h <= 0.0 {
        return Err(Error::invariant(InvariantKind::Degenerate, format!("{label} has zero diameter")));
    }
    // frame from the first member's edges, orientation fixed to it
    let first = verts_of(spec.members[0]);
    let mut edges = DMatrix::zeros(input.ambient_dim, k);
    for j in 0..k {
        edges.set_column(j, &(&first[j + 1] - &first[0]));
    }
    let mut basis = orthonormal_frame(&edges)
        .map_err(|e| Error::invariant(InvariantKind::Degenerate, format!("{label}: {e}")))?;
    {
        let local_edges = basis.transpose() * &edges;
        if local_edges.determinant() < 0.0 {
            let flipped = -basis.column(k - 1).into_owned();
            basis.set_column(k - 1, &flipped);
        }
    }
    // star point: provided or measure-weighted barycenter of the members
    let star = match &spec.star_point {
        Some(p) => {
            if p.len() != input.ambient_dim {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("{label} star point has wrong dimension"),
                ));
            }
            p.clone()
        }
        None => {
            let mut acc = DVector::zeros(input.ambient_dim);
            let mut total = 0.0;
            for &m in &spec.members {
                let vs = verts_of(m);
                let mut centroid = DVector::zeros(input.ambient_dim);
                for v in &vs {
                    centroid += v;
                }
                centroid /= vs.len() as f64;
                let mut coords = DMatrix::zeros(input.ambient_dim, vs.len());
                for (j, v) in vs.iter().enumerate() {
                    coords.set_column(j, v);
                }
                let w = simplex_measure(&coords);
                acc += centroid * w;
                total += w;
            }
            if total <= 0.0 {
                return Err(Error::invariant(
                    InvariantKind::Degenerate,
                    format!("{label} has zero measure"),
                ));
            }
            acc / total
        }
    };
    let frame = Frame { origin: star.clone(), basis: basis.clone(), scale: h };
    // members in scaled coordinates, with orientation and planarity checks
    let mut members = Vec::with_capacity(spec.members.len());
    for &m in &spec.members {
        let vs = verts_of(m);
        let mut ambient = DMatrix::zeros(input.ambient_dim, vs.len());
        let mut local = DMatrix::zeros(k, vs.len());
        for (j, v) in vs.iter().enumerate() {
            ambient.set_column(j, v);
            let lv = frame.local(v);
            // planarity: the point must be reproduced by the chart
            let back = &frame.origin + &frame.basis * &lv * frame.scale;
            if (v - back).norm() > 1e-9 * h {
                return Err(Error::invariant(
                    InvariantKind::Conformity,
                    format!("{label}: member {m} leaves the cell's affine span"),
                ));
            }
            local.set_column(j, &lv);
        }
        let measure = simplex_measure(&ambient);
        if measure <= DEGENERACY_TOL * h.powi(k as i32) {
            return Err(Error::invariant(
                InvariantKind::Degenerate,
                format!("{label}: member {m} is degenerate (measure {measure:.3e})"),
            ));
        }
        let mut e = DMatrix::zeros(k, k);
        for j in 0..k {
            e.set_column(j, &(local.column(j + 1) - local.column(0)));
        }
        if e.determinant() <= 0.0 {
            return Err(Error::invariant(
                InvariantKind::Orientation,
                format!("{label}: member {m} is negatively oriented in the cell frame"),
            ));
        }
        members.push(MemberSimplex { verts: local, measure, orientation: 1 });
    }
    Ok(CellGeometry::new(frame, h, members))
}

/// Derives each cell's boundary cells and signs from simplicial chains.
fn derive_boundaries(
    cells: &mut [Vec<Cell>],
    simplices: &[Vec<Simplex>],
    simplex_boundary: &[Vec<Vec<(usize, i8)>>],
) -> Result<()> {
    let max_dim = cells.len() - 1;
    // member ownership one dimension down
    for k in 1..=max_dim {
        let mut owner: Vec<Option<usize>> = vec![None; simplices[k - 1].len()];
        for cell in &cells[k - 1] {
            for &m in &cell.members {
                if owner[m].replace(cell.id).is_some() {
                    return Err(Error::invariant(
                        InvariantKind::Selection,
                        format!("{}-simplex {m} is a member of two cells", k - 1),
                    ));
                }
            }
        }
        let cells_below: Vec<Vec<usize>> = cells[k - 1].iter().map(|c| c.members.clone()).collect();
        for cell in &mut cells[k] {
            let mut chain: HashMap<usize, i64> = HashMap::new();
            for &m in &cell.members {
                for &(face, sign) in &simplex_boundary[k][m] {
                    *chain.entry(face).or_insert(0) += i64::from(sign);
                }
            }
            chain.retain(|_, c| *c != 0);
            // group by owning (k−1)-cell and check uniform signs
            let mut by_cell: HashMap<usize, i64> = HashMap::new();
            for (&face, &coeff) in &chain {
                if coeff.abs() != 1 {
                    return Err(Error::invariant(
                        InvariantKind::Conformity,
                        format!(
                            "{}-cell {}: boundary chain has coefficient {} on a face",
                            k, cell.id, coeff
                        ),
                    ));
                }
                let Some(owner_id) = owner[face] else {
                    return Err(Error::invariant(
                        InvariantKind::Conformity,
                        format!(
                            "{}-cell {}: boundary face simplex {} belongs to no {}-cell",
                            k,
                            cell.id,
                            face,
                            k - 1
                        ),
                    ));
                };
                match by_cell.insert(owner_id, coeff) {
                    Some(prev) if prev != coeff => {
                        return Err(Error::invariant(
                            InvariantKind::Orientation,
                            format!(
                                "{}-cell {}: boundary cell {} appears with mixed signs",
                                k, cell.id, owner_id
                            ),
                        ));
                    }
                    _ => {}
                }
            }
            // every member of a claimed boundary cell must appear
            for (&owner_id, &sign) in &by_cell {
                for &m in &cells_below[owner_id] {
                    if chain.get(&m).copied().unwrap_or(0) != sign {
                        return Err(Error::invariant(
                            InvariantKind::Conformity,
                            format!(
                                "{}-cell {}: boundary covers only part of {}-cell {}",
                                k,
                                cell.id,
                                k - 1,
                                owner_id
                            ),
                        ));
                    }
                }
            }
            let mut boundary: Vec<(usize, i8)> =
                by_cell.into_iter().map(|(c, s)| (c, s as i8)).collect();
            boundary.sort_unstable();
            cell.boundary = boundary;
        }
    }
    Ok(())
}

/// All faces (every dimension, including itself) of a simplex, by id.
fn simplex_faces(
    simplices: &[Vec<Simplex>],
    key_maps: &KeyMaps,
    k: usize,
    s: usize,
) -> Vec<Vec<usize>> {
    let verts = &simplices[k][s].verts;
    let mut faces: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    let count = 1usize << verts.len();
    for mask in 1..count {
        let subset: Vec<usize> =
            verts.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &v)| v).collect();
        let j = subset.len() - 1;
        let mut key = subset;
        key.sort_unstable();
        let id = key_maps[j][&key];
        faces[j].push(id);
    }
    for list in &mut faces {
        list.sort_unstable();
        list.dedup();
    }
    faces
}

/// Fills closure cells/simplices, boundary submeshes, and interior lists.
fn build_closures(
    cells: &mut [Vec<Cell>],
    simplices: &[Vec<Simplex>],
    key_maps: &KeyMaps,
) -> Result<()> {
    for k in 0..cells.len() {
        for id in 0..cells[k].len() {
            // closure cells: self plus closures of boundary cells (already built)
            let mut closure_cells: Vec<HashSet<usize>> = vec![HashSet::new(); k + 1];
            closure_cells[k].insert(id);
            for &(b, _) in &cells[k][id].boundary.clone() {
                for (j, set) in cells[k - 1][b].closure_cells.iter().enumerate() {
                    closure_cells[j].extend(set.iter().copied());
                }
            }
            // closure simplices: all faces of members
            let mut closure: Vec<HashSet<usize>> = vec![HashSet::new(); k + 1];
            for &m in &cells[k][id].members.clone() {
                for (j, faces) in simplex_faces(simplices, key_maps, k, m).into_iter().enumerate() {
                    closure[j].extend(faces);
                }
            }
            // boundary simplices: union of boundary cells' closures
            let mut boundary: Vec<HashSet<usize>> = vec![HashSet::new(); k];
            for &(b, _) in &cells[k][id].boundary.clone() {
                for (j, list) in cells[k - 1][b].closure_simplices.iter().enumerate() {
                    boundary[j].extend(list.iter().copied());
                }
            }
            // conformity: the boundary submesh must lie inside the closure
            for j in 0..k {
                if !boundary[j].is_subset(&closure[j]) {
                    return Err(Error::invariant(
                        InvariantKind::Conformity,
                        format!("{k}-cell {id}: boundary cells are not faces of its members"),
                    ));
                }
            }
            let cell = &mut cells[k][id];
            cell.closure_cells = closure_cells
                .into_iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.into_iter().collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            cell.closure_simplices = closure
                .iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.iter().copied().collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            cell.boundary_simplices = boundary
                .iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.iter().copied().collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            cell.interior_simplices = (0..=k)
                .map(|j| {
                    let mut v: Vec<usize> = closure[j]
                        .iter()
                        .copied()
                        .filter(|s| boundary.get(j).map_or(true, |set| !set.contains(s)))
                        .collect();
                    v.sort_unstable();
                    v
                })
                .collect();
        }
    }
    Ok(())
}

/// Every simplex must be interior to exactly one cell.
fn check_selection(cells: &[Vec<Cell>], simplices: &[Vec<Simplex>]) -> Result<Vec<Vec<CellRef>>> {
    let mut owner: Vec<Vec<Option<CellRef>>> =
        simplices.iter().map(|list| vec![None; list.len()]).collect();
    for dim_cells in cells {
        for cell in dim_cells {
            for (j, list) in cell.interior_simplices.iter().enumerate() {
                for &s in list {
                    let r = CellRef { dim: cell.dim, id: cell.id };
                    if let Some(prev) = owner[j][s].replace(r) {
                        return Err(Error::invariant(
                            InvariantKind::Selection,
                            format!(
                                "{j}-simplex {s} is interior to both {}-cell {} and {}-cell {}",
                                prev.dim, prev.id, r.dim, r.id
                            ),
                        ));
                    }
                }
            }
        }
    }
    owner
        .into_iter()
        .enumerate()
        .map(|(j, list)| {
            list.into_iter()
                .enumerate()
                .map(|(s, o)| {
                    o.ok_or_else(|| {
                        Error::invariant(
                            InvariantKind::Selection,
                            format!("{j}-simplex {s} is interior to no cell"),
                        )
                    })
                })
                .collect::<Result<Vec<CellRef>>>()
        })
        .collect()
}

/// The derived incidence must square to zero over the integers.
fn check_boundary_of_boundary(cells: &[Vec<Cell>]) -> Result<()> {
    for k in 2..cells.len() {
        for cell in &cells[k] {
            let mut acc: HashMap<usize, i64> = HashMap::new();
            for &(b, s1) in &cell.boundary {
                for &(bb, s2) in &cells[k - 1][b].boundary {
                    *acc.entry(bb).or_insert(0) += i64::from(s1) * i64::from(s2);
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(Error::invariant(
                    InvariantKind::BoundaryOfBoundary,
                    format!("{}-cell {}: ∂∂ ≠ 0", k, cell.id),
                ));
            }
        }
    }
    Ok(())
}

/// Every cell closure must have the homology of a ball.
fn check_ball_topology(
    cells: &[Vec<Cell>],
    simplex_boundary: &[Vec<Vec<(usize, i8)>>],
) -> Result<()> {
    for dim_cells in cells.iter().skip(1) {
        for cell in dim_cells {
            let counts: Vec<usize> = cell.closure_simplices.iter().map(Vec::len).collect();
            let mut ranks = vec![0usize; cell.dim + 1]; // ranks[j] = rank ∂_j, j ≥ 1
            for j in 1..=cell.dim {
                let rows = counts[j - 1];
                let cols = counts[j];
                if rows == 0 || cols == 0 {
                    continue;
                }
                let row_pos: HashMap<usize, usize> = cell.closure_simplices[j - 1]
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| (s, i))
                    .collect();
                let mut mat = DMatrix::zeros(rows, cols);
                for (c, &s) in cell.closure_simplices[j].iter().enumerate() {
                    for &(face, sign) in &simplex_boundary[j][s] {
                        mat[(row_pos[&face], c)] = f64::from(sign);
                    }
                }
                ranks[j] = rank(&mat, 1e-9);
            }
            // betti numbers of the closure
            for j in 0..=cell.dim {
                let kernel = if j == 0 { counts[0] as i64 } else { (counts[j] - ranks[j]) as i64 };
                let image = if j + 1 <= cell.dim { ranks[j + 1] as i64 } else { 0 };
                let expected = i64::from(j == 0);
                if kernel - image != expected {
                    return Err(Error::invariant(
                        InvariantKind::BallHomology,
                        format!(
                            "{}-cell {}: b_{j} = {} (closure is not a ball)",
                            cell.dim,
                            cell.id,
                            kernel - image
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Shape-regularity survey: for every cell, the worst member ratio
/// `min(r_F/h_F, h_F/h_f)` with `r_F` the member inradius.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// Worst ratio over the whole mesh.
    pub min_ratio: f64,
    /// Cells whose ratio falls below the flag threshold.
    pub flagged: Vec<(CellRef, f64)>,
    pub threshold: f64,
}

/// Inradius of a full-dimensional simplex given local vertex columns
/// (`d × (d+1)`): `d·V / Σ facet areas`.
pub fn simplex_inradius(verts: &DMatrix<f64>) -> f64 {
    let d = verts.nrows();
    let vol = simplex_measure(verts);
    let mut area = 0.0;
    for omit in 0..=d {
        let facet: Vec<usize> = (0..=d).filter(|&j| j != omit).collect();
        let mut f = DMatrix::zeros(d, d);
        for (c, &j) in facet.iter().enumerate() {
            f.set_column(c, &verts.column(j));
        }
        area += simplex_measure(&f);
    }
    if area == 0.0 {
        return 0.0;
    }
    d as f64 * vol / area
}

impl Mesh {
    /// Measures shape regularity of every cell's member simplices.
    pub fn regularity(&self, threshold: f64) -> RegularityReport {
        let mut min_ratio = f64::INFINITY;
        let mut flagged = Vec::new();
        for dim_cells in self.cells.iter().skip(1) {
            for cell in dim_cells {
                let h_cell = cell.geometry.diameter;
                let mut worst = f64::INFINITY;
                for member in &cell.geometry.members {
                    // member verts are in scaled chart coordinates
                    let phys = &member.verts * cell.geometry.frame.scale;
                    let pts: Vec<DVector<f64>> =
                        phys.column_iter().map(|c| c.into_owned()).collect();
                    let h_f = diameter(&pts);
                    let r_f = simplex_inradius(&phys);
                    worst = worst.min((r_f / h_f).min(h_f / h_cell));
                }
                if worst < min_ratio {
                    min_ratio = worst;
                }
                if worst < threshold {
                    flagged.push((CellRef { dim: cell.dim, id: cell.id }, worst));
                }
            }
        }
        flagged.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        RegularityReport { min_ratio, flagged, threshold }
    }
}
