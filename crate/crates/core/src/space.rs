//! Element-local P1 spaces on the active meshes and the combined bulk x surface
//! degree-of-freedom map.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::levelset::CutTopology;
use crate::mesh::BackgroundMesh;
use crate::vec2::{self, Point};

/// Affine geometry of one triangle with its barycentric (hat) basis.
#[derive(Clone, Copy, Debug)]
pub struct P1Element {
    pub points: [Point; 3],
    pub area: f64,
    /// Constant gradients of the three barycentric functions.
    pub gradients: [Point; 3],
}

impl P1Element {
    pub fn new(mesh: &BackgroundMesh, e: usize) -> Self {
        Self::from_points(mesh.element_points(e))
    }

    pub fn from_points(points: [Point; 3]) -> Self {
        let area = vec2::signed_area(points[0], points[1], points[2]);
        let gradients = std::array::from_fn(|i| {
            let (pj, pk) = (points[(i + 1) % 3], points[(i + 2) % 3]);
            [(pj[1] - pk[1]) / (2.0 * area), (pk[0] - pj[0]) / (2.0 * area)]
        });
        Self { points, area, gradients }
    }

    /// Barycentric coordinates of `x`.
    pub fn values(&self, x: Point) -> [f64; 3] {
        std::array::from_fn(|i| vec2::signed_area(x, self.points[(i + 1) % 3], self.points[(i + 2) % 3]) / self.area)
    }

    pub fn evaluate(&self, coeffs: [f64; 3], x: Point) -> f64 {
        let v = self.values(x);
        coeffs[0] * v[0] + coeffs[1] * v[1] + coeffs[2] * v[2]
    }

    /// Gradient of the linear function with the given vertex values.
    pub fn interpolant_gradient(&self, coeffs: [f64; 3]) -> Point {
        let g = &self.gradients;
        [
            coeffs[0] * g[0][0] + coeffs[1] * g[1][0] + coeffs[2] * g[2][0],
            coeffs[0] * g[0][1] + coeffs[1] * g[1][1] + coeffs[2] * g[2][1],
        ]
    }
}

/// Discontinuous P1 functions on a list of elements, three unknowns per element
/// ordered as the element's vertices.
#[derive(Clone, Debug)]
pub struct BrokenSpace {
    pub elements: Vec<usize>,
    slot: Vec<Option<usize>>,
    /// Index of the first unknown of this block in the global numbering.
    pub offset: usize,
}

impl BrokenSpace {
    pub fn new(elements: Vec<usize>, n_mesh_elements: usize, offset: usize) -> Self {
        let mut slot = vec![None; n_mesh_elements];
        for (i, &e) in elements.iter().enumerate() {
            slot[e] = Some(i);
        }
        Self { elements, slot, offset }
    }

    pub fn dim(&self) -> usize {
        3 * self.elements.len()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.slot.get(e).is_some_and(|s| s.is_some())
    }

    /// Block-local unknowns of element `e` (without the offset).
    pub fn local_dofs(&self, e: usize) -> Option<[usize; 3]> {
        self.slot[e].map(|s| [3 * s, 3 * s + 1, 3 * s + 2])
    }

    /// Global unknowns of element `e`.
    pub fn dofs(&self, e: usize) -> Option<[usize; 3]> {
        self.local_dofs(e).map(|d| d.map(|i| i + self.offset))
    }

    /// Vertex interpolation of `f` element by element (block-local vector).
    pub fn interpolate_nodal(&self, mesh: &BackgroundMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for &e in &self.elements {
            for v in mesh.elements[e] {
                out.push(f(mesh.vertices[v]));
            }
        }
        out
    }

    /// Coefficients of element `e` from a block-local vector.
    pub fn element_coeffs(&self, e: usize, coeffs: &[f64]) -> Option<[f64; 3]> {
        self.local_dofs(e).map(|d| d.map(|i| coeffs[i]))
    }
}

/// Unknown layout of `V^h = V_bulk x V_surface`: bulk block first, surface block after.
#[derive(Clone, Debug)]
pub struct CombinedDofMap {
    pub bulk: BrokenSpace,
    pub surface: BrokenSpace,
}

impl CombinedDofMap {
    pub fn new(mesh: &BackgroundMesh, topo: &CutTopology) -> Self {
        let n = mesh.elements.len();
        let bulk = BrokenSpace::new(topo.active_bulk.clone(), n, 0);
        let surface = BrokenSpace::new(topo.active_surface.clone(), n, bulk.dim());
        Self { bulk, surface }
    }

    pub fn n_bulk(&self) -> usize {
        self.bulk.dim()
    }

    pub fn n_surface(&self) -> usize {
        self.surface.dim()
    }

    pub fn len(&self) -> usize {
        self.n_bulk() + self.n_surface()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split<'a>(&self, v: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        v.split_at(self.n_bulk())
    }

    pub fn interpolate_nodal(
        &self,
        mesh: &BackgroundMesh,
        bulk: impl Fn(Point) -> f64,
        surface: impl Fn(Point) -> f64,
    ) -> Vec<f64> {
        let mut v = self.bulk.interpolate_nodal(mesh, bulk);
        v.extend(self.surface.interpolate_nodal(mesh, surface));
        v
    }
}

/// Writes one coefficient per line.
pub fn write_coefficients<W: Write>(mut out: W, coeffs: &[f64]) -> io::Result<()> {
    for c in coeffs {
        writeln!(out, "{c:.17e}")?;
    }
    Ok(())
}

pub fn read_coefficients<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::InvalidMesh(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| Error::InvalidMesh(format!("bad coefficient {t:?}")))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{classify_elements, Circle, DiscreteLevelSet};
    use crate::mesh::BoundingBox;
    use proptest::prelude::*;

    #[test]
    fn reference_triangle_basis() {
        let el = P1Element::from_points([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(el.gradients, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(el.values([1.0, 0.0]), [0.0, 1.0, 0.0]);
        let c = el.values([1.0 / 3.0, 1.0 / 3.0]);
        assert!(c.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_linear_reproduction(
            pts in prop::array::uniform6(-2.0f64..2.0),
            bary in prop::array::uniform2(0.0f64..0.5),
            lin in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let points = [[pts[0], pts[1]], [pts[2], pts[3]], [pts[4], pts[5]]];
            let area = vec2::signed_area(points[0], points[1], points[2]);
            prop_assume!(area > 0.05);
            let el = P1Element::from_points(points);
            let x = vec2::add(
                points[0],
                vec2::add(
                    vec2::scale(vec2::sub(points[1], points[0]), bary[0]),
                    vec2::scale(vec2::sub(points[2], points[0]), bary[1]),
                ),
            );
            let v = el.values(x);
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let g = el.interpolant_gradient([1.0, 1.0, 1.0]);
            prop_assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
            let f = |p: Point| lin[0] + lin[1] * p[0] + lin[2] * p[1];
            let coeffs = points.map(f);
            prop_assert!((el.evaluate(coeffs, x) - f(x)).abs() < 1e-10);
            let grad = el.interpolant_gradient(coeffs);
            prop_assert!((grad[0] - lin[1]).abs() < 1e-9 && (grad[1] - lin[2]).abs() < 1e-9);
        }
    }

    fn setup() -> (BackgroundMesh, CutTopology) {
        let mesh = BackgroundMesh::structured(BoundingBox::centered_square(1.1).unwrap(), 8).unwrap();
        let dls = DiscreteLevelSet::interpolate(&Circle::unit(), &mesh);
        let topo = classify_elements(&mesh, &dls).unwrap();
        (mesh, topo)
    }

    #[test]
    fn combined_map_is_a_bijection() {
        let (mesh, topo) = setup();
        let map = CombinedDofMap::new(&mesh, &topo);
        assert_eq!(map.n_bulk(), 3 * topo.active_bulk.len());
        assert_eq!(map.n_surface(), 3 * topo.active_surface.len());
        let mut seen = vec![false; map.len()];
        for (space, elems) in [(&map.bulk, &topo.active_bulk), (&map.surface, &topo.active_surface)] {
            for &e in elems {
                for d in space.dofs(e).unwrap() {
                    assert!(!seen[d]);
                    seen[d] = true;
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert_eq!(map.surface.offset, map.n_bulk());
    }

    /// Jump of the value and of the normal derivative across each face for a
    /// block-local coefficient vector.
    fn face_jumps(mesh: &BackgroundMesh, space: &BrokenSpace, coeffs: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for f in &mesh.interior_faces {
            if !(space.contains(f.plus) && space.contains(f.minus)) {
                continue;
            }
            let mid = vec2::scale(vec2::add(mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]), 0.5);
            let (ep, em) = (P1Element::new(mesh, f.plus), P1Element::new(mesh, f.minus));
            let (cp, cm) =
                (space.element_coeffs(f.plus, coeffs).unwrap(), space.element_coeffs(f.minus, coeffs).unwrap());
            let jump = ep.evaluate(cp, mid) - em.evaluate(cm, mid);
            let gjump = vec2::dot(f.normal, vec2::sub(ep.interpolant_gradient(cp), em.interpolant_gradient(cm)));
            out.push((jump, gjump));
        }
        out
    }

    #[test]
    fn interpolated_constants_and_linears_have_no_jumps() {
        let (mesh, topo) = setup();
        let map = CombinedDofMap::new(&mesh, &topo);
        let c = map.bulk.interpolate_nodal(&mesh, |_| 2.5);
        assert!(c.iter().all(|v| *v == 2.5));
        let lin = map.bulk.interpolate_nodal(&mesh, |p| 1.0 - 2.0 * p[0] + 0.5 * p[1]);
        for (j, g) in face_jumps(&mesh, &map.bulk, &lin) {
            assert!(j.abs() < 1e-13 && g.abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_has_gradient_jumps() {
        let (mesh, topo) = setup();
        let map = CombinedDofMap::new(&mesh, &topo);
        let q = map.bulk.interpolate_nodal(&mesh, |p| p[0] * p[0]);
        // P1 interpolants of x^2 are continuous; across a face with normal n the
        // slope jump equals (dx_plus - dx_minus) n_x, nonzero where n_x != 0.
        let jumps = face_jumps(&mesh, &map.bulk, &q);
        for &(j, _) in &jumps {
            assert!(j.abs() < 1e-13);
        }
        let nonzero = jumps.iter().filter(|(_, g)| g.abs() > 1e-6).count();
        assert!(nonzero > 0);
        // on a horizontal face (n_x = 0) the x-slope jump is invisible
        for f in mesh.interior_faces.iter().filter(|f| f.normal[0] == 0.0) {
            if map.bulk.contains(f.plus) && map.bulk.contains(f.minus) {
                let ep = P1Element::new(&mesh, f.plus);
                let em = P1Element::new(&mesh, f.minus);
                let gp = ep.interpolant_gradient(map.bulk.element_coeffs(f.plus, &q).unwrap());
                let gm = em.interpolant_gradient(map.bulk.element_coeffs(f.minus, &q).unwrap());
                assert!((vec2::dot(f.normal, vec2::sub(gp, gm))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn x_squared_gradient_jump_magnitude() {
        // cells of width d: next to the vertical face x = x0 the interpolant's
        // x-slope is 2 x0 + d on the right and 2 x0 - d on the left, a jump of 2d.
        let mesh = BackgroundMesh::structured(BoundingBox::new([0.0, 0.0], [1.0, 1.0]).unwrap(), 4).unwrap();
        let all: Vec<usize> = (0..mesh.elements.len()).collect();
        let space = BrokenSpace::new(all, mesh.elements.len(), 0);
        let q = space.interpolate_nodal(&mesh, |p| p[0] * p[0]);
        for f in mesh.interior_faces.iter().filter(|f| f.normal[1] == 0.0) {
            let gp = P1Element::new(&mesh, f.plus).interpolant_gradient(space.element_coeffs(f.plus, &q).unwrap());
            let gm = P1Element::new(&mesh, f.minus).interpolant_gradient(space.element_coeffs(f.minus, &q).unwrap());
            let jump = vec2::dot(f.normal, vec2::sub(gp, gm));
            assert!((jump.abs() - 0.5).abs() < 1e-12, "{jump}");
        }
    }

    #[test]
    fn coefficient_text_roundtrip() {
        let v = vec![1.0, -2.5e-17, std::f64::consts::PI];
        let mut buf = Vec::new();
        write_coefficients(&mut buf, &v).unwrap();
        assert_eq!(read_coefficients(&buf[..]).unwrap(), v);
        assert!(read_coefficients(&b"1.0\nabc\n"[..]).is_err());
    }
}
