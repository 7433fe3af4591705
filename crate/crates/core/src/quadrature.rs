//! Quadrature on full and cut entities: `T ∩ Ω^h`, `Γ^h ∩ T`, `F ∩ Ω^h`,
//! full elements and faces, and surface points.

use crate::error::{Error, Result};
use crate::levelset::{DiscreteLevelSet, SurfaceSegment};
use crate::mesh::{BackgroundMesh, InteriorFace};
use crate::vec2::{self, Point};

/// Exactness degree used for the bilinear forms (products of P1 functions).
pub const FORM_DEGREE: usize = 2;

/// Exactness degree used when integrating smooth data and exact solutions.
pub const DATA_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainTag {
    BulkCut,
    SurfaceSegment,
    FaceCut,
    FullElement,
    FullFace,
    SurfacePoint,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub domain: DomainTag,
    pub degree: usize,
}

impl QuadratureRule {
    fn empty(domain: DomainTag, degree: usize) -> Self {
        Self { points: Vec::new(), weights: Vec::new(), domain, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Measure of the integration domain.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    fn push_triangle(&mut self, tri: [Point; 3]) -> Result<()> {
        let area = vec2::signed_area(tri[0], tri[1], tri[2]).abs();
        for (bary, w) in triangle_reference(self.degree)? {
            self.points.push([
                bary[0] * tri[0][0] + bary[1] * tri[1][0] + bary[2] * tri[2][0],
                bary[0] * tri[0][1] + bary[1] * tri[1][1] + bary[2] * tri[2][1],
            ]);
            self.weights.push(w * area);
        }
        Ok(())
    }

    fn push_segment(&mut self, a: Point, b: Point) -> Result<()> {
        let length = vec2::distance(a, b);
        for (t, w) in gauss_reference(self.degree)? {
            self.points.push(vec2::lerp(a, b, t));
            self.weights.push(w * length);
        }
        Ok(())
    }
}

/// Symmetric triangle rules in barycentric form, weights summing to one.
fn triangle_reference(degree: usize) -> Result<Vec<([f64; 3], f64)>> {
    fn orbit(a: f64, b: f64, w: f64) -> [([f64; 3], f64); 3] {
        [([a, a, b], w), ([a, b, a], w), ([b, a, a], w)]
    }
    Ok(match degree {
        0 | 1 => vec![([1.0 / 3.0; 3], 1.0)],
        2 => orbit(1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0).to_vec(),
        3 | 4 => {
            let mut r = orbit(0.445948490915965, 0.108103018168070, 0.223381589678011).to_vec();
            r.extend(orbit(0.091576213509771, 0.816847572980459, 0.109951743655322));
            r
        }
        5 => {
            let s = 15f64.sqrt();
            let (a1, w1) = ((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            let (a2, w2) = ((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
            let mut r = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
            r.extend(orbit(a1, 1.0 - 2.0 * a1, w1));
            r.extend(orbit(a2, 1.0 - 2.0 * a2, w2));
            r
        }
        d => return Err(Error::UnsupportedDegree(d)),
    })
}

/// Gauss-Legendre on `[0, 1]`.
fn gauss_reference(degree: usize) -> Result<Vec<(f64, f64)>> {
    Ok(match degree {
        0 | 1 => vec![(0.5, 1.0)],
        2 | 3 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        4 | 5 => {
            let d = 0.5 * (0.6f64).sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
        d => return Err(Error::UnsupportedDegree(d)),
    })
}

/// Rule on `{x in T : rho^h(x) < 0}` for a triangle with nodal level-set
/// values. `ids` fixes the order in which edge zeros are computed.
pub fn clip_triangle(points: [Point; 3], values: [f64; 3], ids: [usize; 3], degree: usize) -> Result<QuadratureRule> {
    let mut rule = QuadratureRule::empty(DomainTag::BulkCut, degree);
    let zero = |i: usize, j: usize| {
        let (i, j) = if ids[i] < ids[j] { (i, j) } else { (j, i) };
        vec2::lerp(points[i], points[j], values[i] / (values[i] - values[j]))
    };
    let negative: Vec<usize> = (0..3).filter(|&i| values[i] < 0.0).collect();
    match negative.as_slice() {
        [_, _, _] => {
            rule.domain = DomainTag::FullElement;
            rule.push_triangle(points)?;
        }
        [i] => {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            rule.push_triangle([points[*i], zero(*i, j), zero(*i, k)])?;
        }
        [_, _] => {
            let k = (0..3).find(|k| values[*k] >= 0.0).expect("one non-negative vertex");
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let (zjk, zki) = (zero(j, k), zero(k, i));
            rule.push_triangle([points[i], points[j], zjk])?;
            rule.push_triangle([points[i], zjk, zki])?;
        }
        _ => {}
    }
    Ok(rule)
}

/// Rule on `T ∩ Ω^h` for a mesh element.
pub fn clip_element_rule(
    mesh: &BackgroundMesh,
    dls: &DiscreteLevelSet,
    e: usize,
    degree: usize,
) -> Result<QuadratureRule> {
    clip_triangle(mesh.element_points(e), dls.element_values(mesh, e), mesh.elements[e], degree)
}

pub fn surface_segment_rule(seg: &SurfaceSegment, degree: usize) -> Result<QuadratureRule> {
    segment_rule(seg.endpoints[0], seg.endpoints[1], degree)
}

/// Gauss rule on the straight segment `[a, b]`, tagged as a surface segment.
pub fn segment_rule(a: Point, b: Point, degree: usize) -> Result<QuadratureRule> {
    let length = vec2::distance(a, b);
    if !(length > 0.0) {
        return Err(Error::DegenerateSegment { element: usize::MAX, length });
    }
    let mut rule = QuadratureRule::empty(DomainTag::SurfaceSegment, degree);
    rule.push_segment(a, b)?;
    Ok(rule)
}

/// Rule on `F ∩ Ω^h`; empty when the face lies outside.
pub fn cut_face_rule(
    mesh: &BackgroundMesh,
    dls: &DiscreteLevelSet,
    face: &InteriorFace,
    degree: usize,
) -> Result<QuadratureRule> {
    let [a, b] = face.vertices;
    let (fa, fb) = (dls.values[a], dls.values[b]);
    let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
    let mut rule = QuadratureRule::empty(DomainTag::FaceCut, degree);
    match (fa < 0.0, fb < 0.0) {
        (true, true) => rule.push_segment(pa, pb)?,
        (true, false) => rule.push_segment(pa, dls.edge_zero(mesh, a, b))?,
        (false, true) => rule.push_segment(dls.edge_zero(mesh, a, b), pb)?,
        (false, false) => {}
    }
    Ok(rule)
}

pub fn full_element_rule(mesh: &BackgroundMesh, e: usize, degree: usize) -> Result<QuadratureRule> {
    let mut rule = QuadratureRule::empty(DomainTag::FullElement, degree);
    rule.push_triangle(mesh.element_points(e))?;
    Ok(rule)
}

pub fn full_face_rule(mesh: &BackgroundMesh, face: &InteriorFace, degree: usize) -> Result<QuadratureRule> {
    let mut rule = QuadratureRule::empty(DomainTag::FullFace, degree);
    rule.push_segment(mesh.vertices[face.vertices[0]], mesh.vertices[face.vertices[1]])?;
    Ok(rule)
}

/// Unit-weight point evaluation (measure-one "integral" over a surface edge in 2D).
pub fn point_rule(p: Point) -> QuadratureRule {
    QuadratureRule { points: vec![p], weights: vec![1.0], domain: DomainTag::SurfacePoint, degree: usize::MAX }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundingBox;

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
    fn reference_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        for degree in 0..=5usize {
            let mut rule = QuadratureRule::empty(DomainTag::FullElement, degree);
            rule.push_triangle(REF).unwrap();
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let exact = reference_monomial(a, b);
                    assert!((q - exact).abs() < 1e-13, "deg {degree} x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
        assert!(triangle_reference(6).is_err());
    }

    #[test]
    fn gauss_rules_are_exact_to_their_degree() {
        for degree in 0..=5usize {
            let rule = segment_rule([0.0, 0.0], [1.0, 0.0], degree).unwrap();
            for k in 0..=degree as i32 {
                let q = rule.integrate(|p| p[0].powi(k));
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
        assert!(gauss_reference(6).is_err());
    }

    #[test]
    fn clipped_reference_triangle() {
        let full = clip_triangle(REF, [-1.0, -1.0, -1.0], [0, 1, 2], 2).unwrap();
        assert!((full.total_weight() - 0.5).abs() < 1e-15);
        let corner = clip_triangle(REF, [-1.0, 1.0, 1.0], [0, 1, 2], 2).unwrap();
        assert!((corner.total_weight() - 0.125).abs() < 1e-15);
        let rest = clip_triangle(REF, [1.0, -1.0, -1.0], [0, 1, 2], 2).unwrap();
        assert!((rest.total_weight() - 0.375).abs() < 1e-15);
        let none = clip_triangle(REF, [1.0, 1.0, 1.0], [0, 1, 2], 2).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn segment_rules() {
        let r = segment_rule([0.5, 0.0], [0.0, 0.5], 2).unwrap();
        assert!((r.total_weight() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let r = segment_rule([0.0, 0.0], [1.0, 0.0], 2).unwrap();
        assert!((r.integrate(|p| p[0]) - 0.5).abs() < 1e-15);
        assert!((r.integrate(|p| p[0] * p[0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(segment_rule([1.0, 1.0], [1.0, 1.0], 2).is_err());
        assert_eq!(point_rule([0.2, 0.3]).total_weight(), 1.0);
    }

    #[test]
    fn face_rules() {
        let mesh = BackgroundMesh::structured(BoundingBox::new([0.0, 0.0], [1.0, 1.0]).unwrap(), 1).unwrap();
        let face = mesh.interior_faces[0];
        let len = 2f64.sqrt();
        let make = |vals: [f64; 4]| DiscreteLevelSet { values: vals.to_vec(), snap_tolerance: 0.0 };
        // face vertices are 1 = (1,0) and 2 = (0,1)
        let inside = cut_face_rule(&mesh, &make([-1.0; 4]), &face, 2).unwrap();
        assert!((inside.total_weight() - len).abs() < 1e-15);
        let half = cut_face_rule(&mesh, &make([0.0, -1.0, 1.0, 0.0]), &face, 2).unwrap();
        assert!((half.total_weight() - 0.5 * len).abs() < 1e-15);
        let outside = cut_face_rule(&mesh, &make([1.0; 4]), &face, 2).unwrap();
        assert!(outside.is_empty());
        let full = full_face_rule(&mesh, &face, 2).unwrap();
        assert!((full.total_weight() - len).abs() < 1e-15);
        let el = full_element_rule(&mesh, 0, 2).unwrap();
        assert!((el.total_weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unit_area_triangle() {
        let mut rule = QuadratureRule::empty(DomainTag::FullElement, 2);
        rule.push_triangle([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((rule.total_weight() - 1.0).abs() < 1e-15);
    }
}
