//! Structured simplicial background meshes and their face connectivity.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::vec2::{self, Point};

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        let finite = min.iter().chain(max.iter()).all(|c| c.is_finite());
        if !finite || max[0] <= min[0] || max[1] <= min[1] {
            return Err(Error::InvalidMesh(format!("degenerate or inverted box {min:?} .. {max:?}")));
        }
        Ok(Self { min, max })
    }

    /// The square `[-a, a]^2`.
    pub fn centered_square(half_width: f64) -> Result<Self> {
        Self::new([-half_width, -half_width], [half_width, half_width])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// A face shared by two elements. The unit normal points out of `plus` into `minus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorFace {
    /// Vertex indices, sorted ascending.
    pub vertices: [usize; 2],
    /// Lower element index of the two incident elements.
    pub plus: usize,
    pub minus: usize,
    pub normal: Point,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub vertices: [usize; 2],
    pub element: usize,
}

/// Conforming triangulation of a rectangle.
#[derive(Clone, Debug)]
pub struct BackgroundMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Longest edge over the mesh.
    pub h: f64,
    pub bbox: BoundingBox,
    /// Number of square cells per axis; each cell holds two triangles.
    pub cells_per_axis: usize,
}

impl BackgroundMesh {
    /// `n x n` grid of cells, each split into two triangles along the
    /// diagonal running from its lower-right to its upper-left corner.
    pub fn structured(bbox: BoundingBox, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("need at least one subdivision per axis".into()));
        }
        let dx = bbox.width() / n as f64;
        let dy = bbox.height() / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([bbox.min[0] + i as f64 * dx, bbox.min[1] + j as f64 * dy]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                elements.push([v00, v10, v01]);
                elements.push([v10, v11, v01]);
            }
        }
        Self::from_parts(vertices, elements, bbox, n)
    }

    /// Splits every triangle into four self-similar children through its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let p = vec2::scale(vec2::add(vertices[key.0], vertices[key.1]), 0.5);
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        for &[a, b, c] in &self.elements {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            elements.push([a, ab, ca]);
            elements.push([ab, b, bc]);
            elements.push([ca, bc, c]);
            elements.push([ab, bc, ca]);
        }
        Self::from_parts(vertices, elements, self.bbox, 2 * self.cells_per_axis)
    }

    fn from_parts(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        bbox: BoundingBox,
        cells_per_axis: usize,
    ) -> Result<Self> {
        for (e, tri) in elements.iter().enumerate() {
            let area = vec2::signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} has non-positive area {area}")));
            }
        }
        let (interior_faces, boundary_faces) = face_connectivity(&vertices, &elements)?;
        let h = elements
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| vec2::distance(vertices[a], vertices[b]))
            .fold(0.0, f64::max);
        Ok(Self { vertices, elements, interior_faces, boundary_faces, h, bbox, cells_per_axis })
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        self.elements[e].map(|v| self.vertices[v])
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        vec2::signed_area(a, b, c)
    }

    /// Side length of one structured cell along x.
    pub fn cell_width(&self) -> f64 {
        self.bbox.width() / self.cells_per_axis as f64
    }

    /// Ratio of longest to shortest edge over the whole mesh.
    pub fn edge_length_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for t in &self.elements {
            for k in 0..3 {
                let l = vec2::distance(self.vertices[t[k]], self.vertices[t[(k + 1) % 3]]);
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        hi / lo
    }

    /// Plain-text dump: `v x y` lines followed by `e i j k` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for p in &self.vertices {
            writeln!(out, "v {:.17e} {:.17e}", p[0], p[1])?;
        }
        for t in &self.elements {
            writeln!(out, "e {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Pairs up element edges into interior faces (plus = lower element index)
/// and boundary faces.
pub fn face_connectivity(
    vertices: &[Point],
    elements: &[[usize; 3]],
) -> Result<(Vec<InteriorFace>, Vec<BoundaryFace>)> {
    let mut incident: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (e, t) in elements.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            incident.entry((a.min(b), a.max(b))).or_default().push(e);
        }
    }
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for ((a, b), elems) in incident {
        match elems.as_slice() {
            [e] => boundary.push(BoundaryFace { vertices: [a, b], element: *e }),
            [e0, e1] => {
                let (plus, minus) = ((*e0).min(*e1), (*e0).max(*e1));
                let (pa, pb) = (vertices[a], vertices[b]);
                let tangent = vec2::sub(pb, pa);
                let length = vec2::norm(tangent);
                let mut normal = vec2::scale([tangent[1], -tangent[0]], 1.0 / length);
                let opposite = elements[plus]
                    .iter()
                    .copied()
                    .find(|&v| v != a && v != b)
                    .expect("triangle has a vertex off the face");
                if vec2::dot(normal, vec2::sub(vertices[opposite], pa)) > 0.0 {
                    normal = vec2::scale(normal, -1.0);
                }
                interior.push(InteriorFace { vertices: [a, b], plus, minus, normal, length });
            }
            _ => return Err(Error::NonManifoldFace(a, b)),
        }
    }
    Ok((interior, boundary))
}
