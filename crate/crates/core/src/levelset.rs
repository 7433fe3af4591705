//! Exact and discrete level sets, cut classification of the background mesh,
//! and extraction of the polygonal surface approximation.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::mesh::BackgroundMesh;
use crate::space::P1Element;
use crate::vec2::{self, Point};

/// Relative tolerance (times `h`) below which a nodal level-set value is
/// snapped to the inside.
pub const SNAP_RELATIVE: f64 = 1e-10;

/// Signed distance description of a smooth curve (negative inside).
pub trait LevelSet {
    fn distance(&self, x: Point) -> f64;

    /// Closest point on the curve.
    fn closest_point(&self, x: Point) -> Result<Point>;

    /// Exact unit normal at the closest point of `x`.
    fn normal(&self, x: Point) -> Result<Point>;

    /// Width of the tubular neighborhood in which the closest point is unique.
    fn validity_radius(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn unit() -> Self {
        Self::new([0.0, 0.0], 1.0)
    }

    fn radial(&self, x: Point) -> Result<(Point, f64)> {
        let d = vec2::sub(x, self.center);
        let r = vec2::norm(d);
        if r == 0.0 || (r - self.radius).abs() >= self.validity_radius() {
            return Err(Error::OutsideTubularNeighborhood(x[0], x[1]));
        }
        Ok((vec2::scale(d, 1.0 / r), r))
    }

    /// Polar angle of `x` about the center.
    pub fn angle(&self, x: Point) -> f64 {
        (x[1] - self.center[1]).atan2(x[0] - self.center[0])
    }
}

impl LevelSet for Circle {
    fn distance(&self, x: Point) -> f64 {
        vec2::distance(x, self.center) - self.radius
    }

    fn closest_point(&self, x: Point) -> Result<Point> {
        let (n, _) = self.radial(x)?;
        Ok(vec2::add(self.center, vec2::scale(n, self.radius)))
    }

    fn normal(&self, x: Point) -> Result<Point> {
        Ok(self.radial(x)?.0)
    }

    fn validity_radius(&self) -> f64 {
        self.radius
    }
}

/// Straight line `{x : n . (x - p) = 0}`, negative on the side opposite to `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub point: Point,
    pub normal: Point,
}

impl HalfPlane {
    pub fn new(point: Point, normal: Point) -> Self {
        Self { point, normal: vec2::normalize(normal) }
    }
}

impl LevelSet for HalfPlane {
    fn distance(&self, x: Point) -> f64 {
        vec2::dot(self.normal, vec2::sub(x, self.point))
    }

    fn closest_point(&self, x: Point) -> Result<Point> {
        Ok(vec2::sub(x, vec2::scale(self.normal, self.distance(x))))
    }

    fn normal(&self, _x: Point) -> Result<Point> {
        Ok(self.normal)
    }

    fn validity_radius(&self) -> f64 {
        f64::INFINITY
    }
}

/// Nodal values of the piecewise-linear level-set interpolant.
#[derive(Clone, Debug)]
pub struct DiscreteLevelSet {
    pub values: Vec<f64>,
    pub snap_tolerance: f64,
}

impl DiscreteLevelSet {
    pub fn interpolate(ls: &dyn LevelSet, mesh: &BackgroundMesh) -> Self {
        let values = mesh.vertices.iter().map(|&x| ls.distance(x)).collect();
        Self::from_values(values, mesh.h)
    }

    /// Applies the zero-snapping rule to raw nodal values.
    pub fn from_values(mut values: Vec<f64>, h: f64) -> Self {
        let snap_tolerance = SNAP_RELATIVE * h;
        for v in values.iter_mut() {
            if v.abs() < snap_tolerance {
                *v = -snap_tolerance;
            }
        }
        Self { values, snap_tolerance }
    }

    pub fn negated(&self, h: f64) -> Self {
        Self::from_values(self.values.iter().map(|v| -v).collect(), h)
    }

    pub fn element_values(&self, mesh: &BackgroundMesh, e: usize) -> [f64; 3] {
        mesh.elements[e].map(|v| self.values[v])
    }

    /// Zero of the interpolant on the mesh edge `(a, b)`. Computed in a
    /// canonical vertex order so both incident elements get identical bits.
    pub fn edge_zero(&self, mesh: &BackgroundMesh, a: usize, b: usize) -> Point {
        let (a, b) = (a.min(b), a.max(b));
        let (fa, fb) = (self.values[a], self.values[b]);
        vec2::lerp(mesh.vertices[a], mesh.vertices[b], fa / (fa - fb))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    Inside,
    Cut,
    Outside,
}

/// Classifies an element by its snapped nodal values.
pub fn cut_kind(values: [f64; 3]) -> CutKind {
    match values.iter().filter(|v| **v < 0.0).count() {
        3 => CutKind::Inside,
        0 => CutKind::Outside,
        _ => CutKind::Cut,
    }
}

/// Flat piece of the discrete surface inside one background element.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSegment {
    pub element: usize,
    pub endpoints: [Point; 2],
    /// Mesh edges (sorted vertex pairs) carrying the two endpoints.
    pub edges: [(usize, usize); 2],
    /// Unit normal pointing to the positive side of the level set.
    pub normal: Point,
    pub length: f64,
}

impl SurfaceSegment {
    pub fn tangent(&self) -> Point {
        vec2::normalize(vec2::sub(self.endpoints[1], self.endpoints[0]))
    }

    pub fn midpoint(&self) -> Point {
        vec2::lerp(self.endpoints[0], self.endpoints[1], 0.5)
    }
}

/// Point shared by two surface segments, with the outward co-normal of each.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceEdge {
    pub point: Point,
    /// Segment indices; the first belongs to the lower element index.
    pub segments: [usize; 2],
    pub conormals: [Point; 2],
}

/// Active meshes, face sets and surface pieces for one discrete level set.
#[derive(Clone, Debug)]
pub struct CutTopology {
    pub h: f64,
    /// Elements whose interior meets the discrete bulk domain, ascending.
    pub active_bulk: Vec<usize>,
    /// Active elements crossed by the discrete surface, ascending.
    pub active_surface: Vec<usize>,
    /// Indices into `mesh.interior_faces` with both neighbours in `active_bulk`.
    pub bulk_faces: Vec<usize>,
    /// Bulk faces with at least one neighbour in `active_surface`.
    pub ghost_bulk_faces: Vec<usize>,
    /// Interior faces with both neighbours in `active_surface`.
    pub surface_faces: Vec<usize>,
    /// One segment per element of `active_surface`, same order.
    pub segments: Vec<SurfaceSegment>,
    pub surface_edges: Vec<SurfaceEdge>,
    /// Number of segment endpoints not shared with a second segment.
    pub open_ends: usize,
}

/// Determines the active meshes and face sets, then extracts the surface.
pub fn classify_elements(mesh: &BackgroundMesh, dls: &DiscreteLevelSet) -> Result<CutTopology> {
    let mut in_bulk = vec![false; mesh.elements.len()];
    let mut in_surface = vec![false; mesh.elements.len()];
    let mut active_bulk = Vec::new();
    let mut active_surface = Vec::new();
    for e in 0..mesh.elements.len() {
        match cut_kind(dls.element_values(mesh, e)) {
            CutKind::Inside => {
                in_bulk[e] = true;
                active_bulk.push(e);
            }
            CutKind::Cut => {
                in_bulk[e] = true;
                in_surface[e] = true;
                active_bulk.push(e);
                active_surface.push(e);
            }
            CutKind::Outside => {}
        }
    }
    if active_bulk.is_empty() {
        return Err(Error::Configuration("the discrete domain does not meet the mesh".into()));
    }
    let mut bulk_faces = Vec::new();
    let mut ghost_bulk_faces = Vec::new();
    let mut surface_faces = Vec::new();
    for (i, f) in mesh.interior_faces.iter().enumerate() {
        if in_bulk[f.plus] && in_bulk[f.minus] {
            bulk_faces.push(i);
            if in_surface[f.plus] || in_surface[f.minus] {
                ghost_bulk_faces.push(i);
            }
        }
        if in_surface[f.plus] && in_surface[f.minus] {
            surface_faces.push(i);
        }
    }
    let (segments, surface_edges, open_ends) = extract_surface_segments(mesh, dls, &active_surface)?;
    Ok(CutTopology {
        h: mesh.h,
        active_bulk,
        active_surface,
        bulk_faces,
        ghost_bulk_faces,
        surface_faces,
        segments,
        surface_edges,
        open_ends,
    })
}

/// Builds the segment `Gamma^h ∩ T` for every cut element and pairs segments
/// that share an endpoint. Also returns the number of unpaired endpoints.
pub fn extract_surface_segments(
    mesh: &BackgroundMesh,
    dls: &DiscreteLevelSet,
    cut_elements: &[usize],
) -> Result<(Vec<SurfaceSegment>, Vec<SurfaceEdge>, usize)> {
    let mut segments = Vec::with_capacity(cut_elements.len());
    let mut by_edge: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &e in cut_elements {
        let tri = mesh.elements[e];
        let values = dls.element_values(mesh, e);
        let mut edges = Vec::with_capacity(2);
        for k in 0..3 {
            let (i, j) = (k, (k + 1) % 3);
            if (values[i] < 0.0) != (values[j] < 0.0) {
                edges.push((tri[i].min(tri[j]), tri[i].max(tri[j])));
            }
        }
        let [e0, e1]: [(usize, usize); 2] = edges
            .try_into()
            .map_err(|_| Error::Structural(format!("element {e} does not have exactly two cut edges")))?;
        let endpoints = [dls.edge_zero(mesh, e0.0, e0.1), dls.edge_zero(mesh, e1.0, e1.1)];
        let length = vec2::distance(endpoints[0], endpoints[1]);
        if !(length >= 1e-14 * mesh.h) {
            return Err(Error::DegenerateSegment { element: e, length });
        }
        let normal = vec2::normalize(P1Element::new(mesh, e).interpolant_gradient(values));
        by_edge.entry(e0).or_default().push(segments.len());
        by_edge.entry(e1).or_default().push(segments.len());
        segments.push(SurfaceSegment { element: e, endpoints, edges: [e0, e1], normal, length });
    }
    let mut surface_edges = Vec::new();
    let mut open_ends = 0;
    for (edge, incident) in &by_edge {
        match incident.as_slice() {
            [_] => open_ends += 1,
            [s0, s1] => {
                let (plus, minus) = if segments[*s0].element < segments[*s1].element { (*s0, *s1) } else { (*s1, *s0) };
                let point = endpoint_on(&segments[plus], *edge);
                let conormals = [plus, minus].map(|s| {
                    let other = endpoint_on(&segments[s], other_edge(&segments[s], *edge));
                    vec2::normalize(vec2::sub(point, other))
                });
                surface_edges.push(SurfaceEdge { point, segments: [plus, minus], conormals });
            }
            _ => {
                return Err(Error::Structural(format!(
                    "mesh edge {edge:?} carries {} surface segments",
                    incident.len()
                )))
            }
        }
    }
    Ok((segments, surface_edges, open_ends))
}

fn endpoint_on(seg: &SurfaceSegment, edge: (usize, usize)) -> Point {
    if seg.edges[0] == edge {
        seg.endpoints[0]
    } else {
        seg.endpoints[1]
    }
}

fn other_edge(seg: &SurfaceSegment, edge: (usize, usize)) -> (usize, usize) {
    if seg.edges[0] == edge {
        seg.edges[1]
    } else {
        seg.edges[0]
    }
}

impl CutTopology {
    pub fn surface_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Position of each element in `active_bulk`.
    pub fn bulk_slots(&self, n_elements: usize) -> Vec<Option<usize>> {
        slots(&self.active_bulk, n_elements)
    }

    pub fn surface_slots(&self, n_elements: usize) -> Vec<Option<usize>> {
        slots(&self.active_surface, n_elements)
    }

    /// Sum over cut mesh edges of (incident segments - 2); zero for a closed curve.
    pub fn watertight_defect(&self) -> i64 {
        -(self.open_ends as i64)
    }

    /// Plain-text dump with one `s x0 y0 x1 y1` line per segment.
    pub fn write_segments<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.segments {
            let [a, b] = s.endpoints;
            writeln!(out, "s {:.17e} {:.17e} {:.17e} {:.17e}", a[0], a[1], b[0], b[1])?;
        }
        Ok(())
    }
}

fn slots(list: &[usize], n: usize) -> Vec<Option<usize>> {
    let mut out = vec![None; n];
    for (i, &e) in list.iter().enumerate() {
        out[e] = Some(i);
    }
    out
}

/// Sampled deviation of the discrete surface from the exact one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryDeviation {
    /// max |rho(x)| over sampled x on the discrete surface
    pub sup_distance: f64,
    /// max |n(p(x)) - n^h(x)|
    pub sup_normal_deviation: f64,
}

pub fn check_geometry_assumptions(
    ls: &dyn LevelSet,
    topo: &CutTopology,
    samples_per_segment: usize,
) -> Result<GeometryDeviation> {
    let mut dev = GeometryDeviation { sup_distance: 0.0, sup_normal_deviation: 0.0 };
    let samples = samples_per_segment.max(1);
    for seg in &topo.segments {
        for i in 0..samples {
            let t = if samples == 1 { 0.5 } else { i as f64 / (samples - 1) as f64 };
            let x = vec2::lerp(seg.endpoints[0], seg.endpoints[1], t);
            let rho = ls.distance(x);
            if rho.abs() >= ls.validity_radius() {
                return Err(Error::OutsideTubularNeighborhood(x[0], x[1]));
            }
            let n = ls.normal(x)?;
            dev.sup_distance = dev.sup_distance.max(rho.abs());
            dev.sup_normal_deviation = dev.sup_normal_deviation.max(vec2::distance(n, seg.normal));
        }
    }
    Ok(dev)
}
