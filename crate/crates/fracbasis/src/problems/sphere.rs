//! P1 surface FEM for the Laplace–Beltrami operator on the unit sphere.
//!
//! The mesh starts from the inscribed octahedron and is red-refined, with
//! every new edge midpoint pushed out radially onto the sphere. Stiffness and
//! consistent mass are assembled on the flat triangles. The operator kernel
//! contains the constants, so solutions are pinned by a zero-mean shift.

use std::collections::HashMap;
use std::sync::Arc;

use super::{DiscreteProblem, Family};
use crate::error::{Error, Result};
use crate::precond::ProblemStructure;
use crate::sparse::{CsrMatrix, MassMatrix, NormDescriptor};

pub const MAX_LEVEL: usize = 7;

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
}

fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cx = ab[1] * ac[2] - ab[2] * ac[1];
    let cy = ab[2] * ac[0] - ab[0] * ac[2];
    let cz = ab[0] * ac[1] - ab[1] * ac[0];
    0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
}

impl SurfaceMesh {
    fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Self {
        let areas = triangles
            .iter()
            .map(|t| triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect();
        SurfaceMesh {
            vertices,
            triangles,
            areas,
        }
    }

    pub fn octahedron() -> Self {
        let vertices = vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let triangles = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        SurfaceMesh::new(vertices, triangles)
    }

    /// One uniform red refinement; new midpoints are projected to the sphere.
    pub fn refined(&self) -> SurfaceMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&idx) = midpoints.get(&key) {
                return idx;
            }
            let va = vertices[a];
            let vb = vertices[b];
            let mut m = [
                0.5 * (va[0] + vb[0]),
                0.5 * (va[1] + vb[1]),
                0.5 * (va[2] + vb[2]),
            ];
            let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
            m = [m[0] / norm, m[1] / norm, m[2] / norm];
            let idx = vertices.len();
            vertices.push(m);
            midpoints.insert(key, idx);
            idx
        };

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let mab = midpoint(a, b, &mut vertices);
            let mbc = midpoint(b, c, &mut vertices);
            let mca = midpoint(c, a, &mut vertices);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }
        SurfaceMesh::new(vertices, triangles)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn min_area(&self) -> f64 {
        self.areas.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts.values().all(|&c| c == 2)
    }
}

pub fn build_sphere_mesh(level: usize) -> SurfaceMesh {
    let mut mesh = SurfaceMesh::octahedron();
    for _ in 0..level {
        mesh = mesh.refined();
    }
    mesh
}

pub fn sphere_fem(level: usize) -> Result<DiscreteProblem> {
    if level > MAX_LEVEL {
        return Err(Error::invalid(format!(
            "sphere level must not exceed {MAX_LEVEL}, got {level}"
        )));
    }
    let mesh = build_sphere_mesh(level);
    let nv = mesh.n_vertices();

    let mut stiff = Vec::with_capacity(9 * mesh.n_triangles());
    let mut mass = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [v0, v1, v2] = [
            mesh.vertices()[tri[0]],
            mesh.vertices()[tri[1]],
            mesh.vertices()[tri[2]],
        ];
        let area = mesh.areas()[t];
        // Edge vector opposite each vertex; the P1 stiffness on a flat
        // triangle is e_i · e_j / (4|T|).
        let edges = [
            [v2[0] - v1[0], v2[1] - v1[1], v2[2] - v1[2]],
            [v0[0] - v2[0], v0[1] - v2[1], v0[2] - v2[2]],
            [v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2]],
        ];
        for i in 0..3 {
            for j in 0..3 {
                let dot = edges[i][0] * edges[j][0]
                    + edges[i][1] * edges[j][1]
                    + edges[i][2] * edges[j][2];
                stiff.push((tri[i], tri[j], dot / (4.0 * area)));
                let m = if i == j { 2.0 } else { 1.0 };
                mass.push((tri[i], tri[j], m * area / 12.0));
            }
        }
    }
    let a = CsrMatrix::from_triplets(nv, nv, &stiff)?;
    let m = CsrMatrix::from_triplets(nv, nv, &mass)?;

    let exact: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|v| v[0] + 2.0 * v[1] + 3.0 * v[2])
        .collect();
    let f_i: Vec<f64> = exact.iter().map(|u| 2.0f64.sqrt() * u).collect();
    let rhs = m.spmv(&f_i)?;
    let lambda = 14.0 / mesh.min_area();

    Ok(DiscreteProblem {
        family: Family::Sphere { level },
        a,
        norm: NormDescriptor::MassWeighted {
            m: Arc::new(m.clone()),
        },
        mass: MassMatrix::Matrix(m),
        rhs,
        lambda,
        structure: ProblemStructure::Unstructured,
        exact: Some(exact),
        discrete_exact: None,
    })
}
