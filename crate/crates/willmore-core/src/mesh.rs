//! Closed oriented triangle meshes immersed in R³ or R⁴.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::geom::{self, Vec4};

/// Relative area threshold below which a face counts as degenerate.
pub const DEGENERATE_FACE_REL: f64 = 1e-14;

/// An immutable triangulated surface with derived adjacency.
///
/// Faces are counterclockwise with respect to the surface orientation.
/// Every edge of a closed mesh is shared by exactly two faces with
/// opposite directions. Positions always hold four coordinates; R³
/// meshes carry a zero fourth component.
#[derive(Debug, Clone)]
pub struct TriMesh {
    ambient_dim: usize,
    positions: Vec<Vec4>,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    /// Faces incident to each edge; `usize::MAX` marks a boundary slot.
    edge_faces: Vec<[usize; 2]>,
    /// Neighbor of face `f` across the edge (f[k], f[k+1]); `usize::MAX` on boundary.
    face_neighbors: Vec<[usize; 3]>,
    /// Edge id of (f[k], f[k+1]) for each face.
    face_edges: Vec<[usize; 3]>,
    vertex_face_offsets: Vec<usize>,
    vertex_face_data: Vec<usize>,
    closed: bool,
}

impl TriMesh {
    /// Build and validate a closed mesh.
    pub fn new(
        ambient_dim: usize,
        positions: Vec<Vec4>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, Error> {
        Self::build(ambient_dim, positions, faces, true)
    }

    /// Build a mesh that may have boundary (used for analytic test patches).
    /// Interior manifoldness and orientation are still enforced.
    pub fn new_patch(
        ambient_dim: usize,
        positions: Vec<Vec4>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, Error> {
        Self::build(ambient_dim, positions, faces, false)
    }

    fn build(
        ambient_dim: usize,
        positions: Vec<Vec4>,
        faces: Vec<[usize; 3]>,
        require_closed: bool,
    ) -> Result<Self, Error> {
        if ambient_dim != 3 && ambient_dim != 4 {
            return Err(Error::AmbientDim(ambient_dim));
        }
        let nv = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            if f[0] >= nv || f[1] >= nv || f[2] >= nv || f[0] == f[1] || f[1] == f[2] || f[2] == f[0]
            {
                return Err(Error::InvalidIndex { face: fi });
            }
        }

        // Directed edges: (min, max, direction, face, slot). Each undirected
        // edge of a closed oriented mesh appears exactly once per direction.
        let mut directed: Vec<(usize, usize, bool, usize, usize)> =
            Vec::with_capacity(3 * faces.len());
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let (lo, hi, fwd) = if a < b { (a, b, true) } else { (b, a, false) };
                directed.push((lo, hi, fwd, fi, k));
            }
        }
        directed.sort_unstable();

        let mut edges = Vec::new();
        let mut edge_faces: Vec<[usize; 2]> = Vec::new();
        let mut face_neighbors = vec![[usize::MAX; 3]; faces.len()];
        let mut face_edge = vec![[usize::MAX; 3]; faces.len()];
        let mut i = 0;
        while i < directed.len() {
            let (lo, hi, _, _, _) = directed[i];
            let mut j = i;
            while j < directed.len() && directed[j].0 == lo && directed[j].1 == hi {
                j += 1;
            }
            let group = &directed[i..j];
            if group.len() > 2 {
                return Err(Error::OpenSurface {
                    edge: (lo, hi),
                    faces: group.len(),
                });
            }
            if group.len() == 2 && group[0].2 == group[1].2 {
                return Err(Error::InconsistentOrientation { edge: (lo, hi) });
            }
            if group.len() == 1 && require_closed {
                return Err(Error::OpenSurface {
                    edge: (lo, hi),
                    faces: 1,
                });
            }
            let eid = edges.len();
            edges.push((lo, hi));
            let mut ef = [usize::MAX; 2];
            for (slot, &(_, _, _, fi, k)) in group.iter().enumerate() {
                ef[slot] = fi;
                face_edge[fi][k] = eid;
            }
            if group.len() == 2 {
                let (f0, k0) = (group[0].3, group[0].4);
                let (f1, k1) = (group[1].3, group[1].4);
                face_neighbors[f0][k0] = f1;
                face_neighbors[f1][k1] = f0;
            }
            edge_faces.push(ef);
            i = j;
        }

        let closed = edge_faces.iter().all(|ef| ef[1] != usize::MAX);

        // Vertex -> incident faces (CSR).
        let mut counts = vec![0usize; nv];
        for f in &faces {
            for &v in f {
                counts[v] += 1;
            }
        }
        let mut offsets = vec![0usize; nv + 1];
        for v in 0..nv {
            offsets[v + 1] = offsets[v] + counts[v];
        }
        let mut data = vec![0usize; offsets[nv]];
        let mut cursor = offsets.clone();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                data[cursor[v]] = fi;
                cursor[v] += 1;
            }
        }

        let mesh = Self {
            ambient_dim,
            positions,
            faces,
            edges,
            edge_faces,
            face_neighbors,
            face_edges: face_edge,
            vertex_face_offsets: offsets,
            vertex_face_data: data,
            closed,
        };

        if require_closed {
            // Euler characteristic of a closed oriented surface is even.
            let chi = mesh.euler_characteristic();
            if chi % 2 != 0 {
                return Err(Error::InvalidSpec(alloc::format!(
                    "odd Euler characteristic {chi}"
                )));
            }
        }

        let thresh = DEGENERATE_FACE_REL * mesh.diameter() * mesh.diameter();
        for fi in 0..mesh.faces.len() {
            if mesh.face_area(fi) <= thresh {
                return Err(Error::DegenerateFace { face: fi });
            }
        }

        Ok(mesh)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn positions(&self) -> &[Vec4] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_faces(&self) -> &[[usize; 2]] {
        &self.edge_faces
    }

    pub fn face_neighbors(&self) -> &[[usize; 3]] {
        &self.face_neighbors
    }

    /// Edge ids per face; slot k is the edge (f[k], f[k+1]).
    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    /// Embedded edge lengths in edge-id order.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(a, b)| geom::dist(self.positions[a], self.positions[b]))
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Faces incident to vertex `v`.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_face_data[self.vertex_face_offsets[v]..self.vertex_face_offsets[v + 1]]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.positions.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Genus p = 1 - chi/2 of a closed surface.
    pub fn genus(&self) -> usize {
        let chi = self.euler_characteristic();
        ((2 - chi) / 2).max(0) as usize
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        geom::triangle_area(self.positions[a], self.positions[b], self.positions[c])
    }

    pub fn face_centroid(&self, f: usize) -> Vec4 {
        let [a, b, c] = self.faces[f];
        geom::scale(
            geom::add(self.positions[a], geom::add(self.positions[b], self.positions[c])),
            1.0 / 3.0,
        )
    }

    /// Bounding-box diagonal; used as the mesh scale for thresholds.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for p in &self.positions {
            for k in 0..4 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let d = geom::sub(hi, lo);
        geom::norm(d)
    }

    /// Total surface area, compensated fixed-order sum.
    pub fn total_area(&self) -> f64 {
        geom::ksum((0..self.faces.len()).map(|f| self.face_area(f)))
    }

    /// Mean edge length.
    pub fn mean_edge_length(&self) -> f64 {
        let s = geom::ksum(
            self.edges
                .iter()
                .map(|&(a, b)| geom::dist(self.positions[a], self.positions[b])),
        );
        s / self.edges.len() as f64
    }

    /// Same connectivity with new positions; revalidates face quality.
    pub fn with_positions(&self, positions: Vec<Vec4>) -> Result<Self, Error> {
        assert_eq!(positions.len(), self.positions.len());
        let mut m = self.clone();
        m.positions = positions;
        let thresh = DEGENERATE_FACE_REL * m.diameter() * m.diameter();
        for fi in 0..m.faces.len() {
            if m.face_area(fi) <= thresh {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        Ok(m)
    }

    /// Index of the vertex nearest to `p`.
    pub fn nearest_vertex(&self, p: Vec4) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.positions.iter().enumerate() {
            let d = geom::norm_sq(geom::sub(*q, p));
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> TriMesh {
        let positions = vec![
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        TriMesh::new(3, positions, faces).unwrap()
    }

    #[test]
    fn tetrahedron_is_closed_genus_zero() {
        let m = tetrahedron();
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), 0);
        assert_eq!(m.edge_count(), 6);
    }

    #[test]
    fn open_patch_rejected_when_closed_required() {
        let positions = vec![
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ];
        let err = TriMesh::new(3, positions.clone(), vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::OpenSurface { .. }));
        let patch = TriMesh::new_patch(3, positions, vec![[0, 1, 2]]).unwrap();
        assert!(!patch.is_closed());
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let positions = vec![
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        // second face flipped relative to tetrahedron orientation
        let faces = vec![[0, 2, 1], [0, 3, 1], [1, 2, 3], [0, 3, 2]];
        let err = TriMesh::new(3, positions, faces).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }));
    }

    #[test]
    fn degenerate_face_rejected() {
        let positions = vec![
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [2.0, 1e-18, 0.0, 0.0],
        ];
        let err = TriMesh::new_patch(3, positions, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { .. }));
    }
}
