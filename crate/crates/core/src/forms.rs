//! Bilinear and linear forms of the stabilized cut DG method, the assembled
//! system, and Gram matrices of the discrete energy norms.

use crate::error::{Error, Result};
use crate::levelset::{classify_elements, CutTopology, DiscreteLevelSet, LevelSet, SurfaceEdge, SurfaceSegment};
use crate::linalg::{self, CsrMatrix, SolveStats, Triplets};
use crate::mesh::{BackgroundMesh, InteriorFace};
use crate::quadrature::{
    clip_element_rule, cut_face_rule, full_element_rule, full_face_rule, surface_segment_rule, FORM_DEGREE,
};
use crate::space::{CombinedDofMap, P1Element};
use crate::vec2::{self, Point};

/// Coupling coefficients and penalty weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationParams {
    pub c_bulk: f64,
    pub c_surf: f64,
    pub gamma_bulk: f64,
    pub gamma_surf: f64,
    pub mu_bulk: f64,
    pub mu_surf: f64,
    pub tau_bulk: f64,
    pub tau_surf: f64,
}

impl Default for StabilizationParams {
    fn default() -> Self {
        Self {
            c_bulk: 1.0,
            c_surf: 1.0,
            gamma_bulk: 50.0,
            gamma_surf: 50.0,
            mu_bulk: 50.0,
            mu_surf: 50.0,
            tau_bulk: 0.01,
            tau_surf: 0.01,
        }
    }
}

impl StabilizationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_bulk > 0.0 && self.c_surf > 0.0) {
            return Err(Error::Configuration("coupling coefficients must be positive".into()));
        }
        let weights = [self.gamma_bulk, self.gamma_surf, self.mu_bulk, self.mu_surf, self.tau_bulk, self.tau_surf];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Configuration("penalty weights must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Keeps only the bulk jump penalty `mu_bulk` among the ghost penalties.
    pub fn ablated(mut self) -> Self {
        self.mu_surf = 0.0;
        self.tau_bulk = 0.0;
        self.tau_surf = 0.0;
        self
    }

    pub fn without_surface_ghost(mut self) -> Self {
        self.mu_surf = 0.0;
        self.tau_surf = 0.0;
        self
    }

    pub fn without_bulk_ghost(mut self) -> Self {
        self.mu_bulk = 0.0;
        self.tau_bulk = 0.0;
        self
    }

    pub fn without_ghost(self) -> Self {
        self.without_bulk_ghost().without_surface_ghost()
    }
}

/// Background mesh, discrete geometry and unknown layout for one surface position.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: BackgroundMesh,
    pub levelset: DiscreteLevelSet,
    pub topo: CutTopology,
    pub dofs: CombinedDofMap,
}

impl Discretization {
    pub fn new(mesh: BackgroundMesh, ls: &dyn LevelSet) -> Result<Self> {
        let levelset = DiscreteLevelSet::interpolate(ls, &mesh);
        Self::from_levelset(mesh, levelset)
    }

    pub fn from_levelset(mesh: BackgroundMesh, levelset: DiscreteLevelSet) -> Result<Self> {
        let topo = classify_elements(&mesh, &levelset)?;
        let dofs = CombinedDofMap::new(&mesh, &topo);
        Ok(Self { mesh, levelset, topo, dofs })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    fn element(&self, e: usize) -> P1Element {
        P1Element::new(&self.mesh, e)
    }

    fn bulk_dofs(&self, e: usize) -> Result<[usize; 3]> {
        self.dofs.bulk.dofs(e).ok_or_else(|| Error::Assembly(format!("element {e} has no bulk unknowns")))
    }

    fn surface_dofs(&self, e: usize) -> Result<[usize; 3]> {
        self.dofs
            .surface
            .dofs(e)
            .ok_or_else(|| Error::Structural(format!("segment in element {e} has no surface unknowns")))
    }
}

/// Adds `w * a b^T` at the rows `rows` and columns `cols`.
fn add_outer(t: &mut Triplets, rows: &[usize], cols: &[usize], a: &[f64], b: &[f64], w: f64) {
    for (i, &r) in rows.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, &c) in cols.iter().enumerate() {
            if b[j] != 0.0 {
                t.push(r, c, w * a[i] * b[j]);
            }
        }
    }
}

/// `w (a b^T + b a^T)`.
fn add_symmetric_outer(t: &mut Triplets, dofs: &[usize], a: &[f64], b: &[f64], w: f64) {
    add_outer(t, dofs, dofs, a, b, w);
    add_outer(t, dofs, dofs, b, a, w);
}

fn concat(a: [usize; 3], b: [usize; 3]) -> [usize; 6] {
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

/// Basis values of both neighbours at `x`, minus side negated: `[phi^+, -phi^-]`.
fn jump_values(plus: &P1Element, minus: &P1Element, x: Point) -> [f64; 6] {
    let (p, m) = (plus.values(x), minus.values(x));
    [p[0], p[1], p[2], -m[0], -m[1], -m[2]]
}

/// Normal derivative jumps `n . [grad phi]` of all six basis functions.
fn normal_gradient_jumps(plus: &P1Element, minus: &P1Element, n: Point) -> [f64; 6] {
    let p = plus.gradients.map(|g| vec2::dot(n, g));
    let m = minus.gradients.map(|g| vec2::dot(n, g));
    [p[0], p[1], p[2], -m[0], -m[1], -m[2]]
}

/// Mean normal fluxes `{n . grad phi}` of all six basis functions.
fn mean_normal_fluxes(plus: &P1Element, minus: &P1Element, n: Point) -> [f64; 6] {
    let p = plus.gradients.map(|g| 0.5 * vec2::dot(n, g));
    let m = minus.gradients.map(|g| 0.5 * vec2::dot(n, g));
    [p[0], p[1], p[2], m[0], m[1], m[2]]
}

fn tangential(n: Point, g: Point) -> Point {
    vec2::sub(g, vec2::scale(n, vec2::dot(n, g)))
}

fn face(d: &Discretization, f: usize) -> &InteriorFace {
    &d.mesh.interior_faces[f]
}

/// Volume terms `(grad v, grad w) + (v, w)` on `T ∩ Ω^h`, scaled by `grad_w` and `mass_w`.
fn bulk_volume(d: &Discretization, grad_w: f64, mass_w: f64, full: bool, t: &mut Triplets) -> Result<()> {
    for &e in &d.topo.active_bulk {
        let el = d.element(e);
        let dofs = d.bulk_dofs(e)?;
        let rule = if full {
            full_element_rule(&d.mesh, e, FORM_DEGREE)?
        } else {
            clip_element_rule(&d.mesh, &d.levelset, e, FORM_DEGREE)?
        };
        if rule.is_empty() {
            continue;
        }
        let measure = rule.total_weight();
        let mut local = [[0.0; 3]; 3];
        for (a, row) in local.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = grad_w * measure * vec2::dot(el.gradients[a], el.gradients[b]);
            }
        }
        if mass_w != 0.0 {
            for (x, w) in rule.iter() {
                let phi = el.values(x);
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += mass_w * w * phi[a] * phi[b];
                    }
                }
            }
        }
        t.add_local(&dofs, &local);
    }
    Ok(())
}

/// `weight * h^-1 ([v], [w])` over the full faces in `faces`.
fn face_jump_penalty(d: &Discretization, faces: &[usize], surface: bool, weight: f64, t: &mut Triplets) -> Result<()> {
    if weight == 0.0 {
        return Ok(());
    }
    for &f in faces {
        let face = face(d, f);
        let dofs = if surface {
            concat(d.surface_dofs(face.plus)?, d.surface_dofs(face.minus)?)
        } else {
            concat(d.bulk_dofs(face.plus)?, d.bulk_dofs(face.minus)?)
        };
        let (plus, minus) = (d.element(face.plus), d.element(face.minus));
        for (x, w) in full_face_rule(&d.mesh, face, FORM_DEGREE)?.iter() {
            let j = jump_values(&plus, &minus, x);
            add_outer(t, &dofs, &dofs, &j, &j, weight * w);
        }
    }
    Ok(())
}

/// `weight * (n . [grad v], n . [grad w])` over the full faces in `faces`.
fn face_gradient_penalty(
    d: &Discretization,
    faces: &[usize],
    surface: bool,
    weight: f64,
    t: &mut Triplets,
) -> Result<()> {
    if weight == 0.0 {
        return Ok(());
    }
    for &f in faces {
        let face = face(d, f);
        let dofs = if surface {
            concat(d.surface_dofs(face.plus)?, d.surface_dofs(face.minus)?)
        } else {
            concat(d.bulk_dofs(face.plus)?, d.bulk_dofs(face.minus)?)
        };
        let g = normal_gradient_jumps(&d.element(face.plus), &d.element(face.minus), face.normal);
        add_outer(t, &dofs, &dofs, &g, &g, weight * face.length);
    }
    Ok(())
}

/// `a_Ω^h`: volume terms on the cut elements, jump penalty on full faces,
/// symmetric consistency terms on the face parts inside the domain.
pub fn assemble_bulk_form(d: &Discretization, p: &StabilizationParams) -> Result<Triplets> {
    let mut t = Triplets::new(d.n_dofs());
    bulk_volume(d, 1.0, 1.0, false, &mut t)?;
    face_jump_penalty(d, &d.topo.bulk_faces, false, p.gamma_bulk / d.h(), &mut t)?;
    for &f in &d.topo.bulk_faces {
        let face = face(d, f);
        let rule = cut_face_rule(&d.mesh, &d.levelset, face, FORM_DEGREE)?;
        if rule.is_empty() {
            continue;
        }
        let dofs = concat(d.bulk_dofs(face.plus)?, d.bulk_dofs(face.minus)?);
        let (plus, minus) = (d.element(face.plus), d.element(face.minus));
        let flux = mean_normal_fluxes(&plus, &minus, face.normal);
        for (x, w) in rule.iter() {
            let j = jump_values(&plus, &minus, x);
            add_symmetric_outer(&mut t, &dofs, &flux, &j, -w);
        }
    }
    Ok(t)
}

/// `a_Γ^h`: tangential stiffness and mass on the segments, jump penalty and
/// co-normal consistency terms at the points where segments meet.
pub fn assemble_surface_form(d: &Discretization, p: &StabilizationParams) -> Result<Triplets> {
    let mut t = Triplets::new(d.n_dofs());
    for seg in &d.topo.segments {
        let el = d.element(seg.element);
        let dofs = d.surface_dofs(seg.element)?;
        let tg = el.gradients.map(|g| tangential(seg.normal, g));
        let mut local = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] = seg.length * vec2::dot(tg[a], tg[b]);
            }
        }
        for (x, w) in surface_segment_rule(seg, FORM_DEGREE)?.iter() {
            let phi = el.values(x);
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] += w * phi[a] * phi[b];
                }
            }
        }
        t.add_local(&dofs, &local);
    }
    let penalty = p.gamma_surf / d.h();
    for edge in &d.topo.surface_edges {
        let (dofs, plus, minus) = edge_context(d, edge)?;
        let j = jump_values(&plus.0, &minus.0, edge.point);
        let fp = plus.0.gradients.map(|g| 0.5 * vec2::dot(edge.conormals[0], tangential(plus.1.normal, g)));
        let fm = minus.0.gradients.map(|g| -0.5 * vec2::dot(edge.conormals[1], tangential(minus.1.normal, g)));
        let flux = [fp[0], fp[1], fp[2], fm[0], fm[1], fm[2]];
        add_outer(&mut t, &dofs, &dofs, &j, &j, penalty);
        add_symmetric_outer(&mut t, &dofs, &flux, &j, -1.0);
    }
    Ok(t)
}

type EdgeSide<'a> = (P1Element, &'a SurfaceSegment);

fn edge_context<'a>(d: &'a Discretization, edge: &SurfaceEdge) -> Result<([usize; 6], EdgeSide<'a>, EdgeSide<'a>)> {
    let (sp, sm) = (&d.topo.segments[edge.segments[0]], &d.topo.segments[edge.segments[1]]);
    let dofs = concat(d.surface_dofs(sp.element)?, d.surface_dofs(sm.element)?);
    Ok((dofs, (d.element(sp.element), sp), (d.element(sm.element), sm)))
}

/// `a_ΩΓ^h`: `(c_Ω v_Ω - c_Γ v_Γ, c_Ω w_Ω - c_Γ w_Γ)` on the segments.
pub fn assemble_coupling_form(d: &Discretization, p: &StabilizationParams) -> Result<Triplets> {
    let mut t = Triplets::new(d.n_dofs());
    for seg in &d.topo.segments {
        let el = d.element(seg.element);
        let dofs = concat(d.bulk_dofs(seg.element)?, d.surface_dofs(seg.element)?);
        for (x, w) in surface_segment_rule(seg, FORM_DEGREE)?.iter() {
            let phi = el.values(x);
            let l = [
                p.c_bulk * phi[0],
                p.c_bulk * phi[1],
                p.c_bulk * phi[2],
                -p.c_surf * phi[0],
                -p.c_surf * phi[1],
                -p.c_surf * phi[2],
            ];
            add_outer(&mut t, &dofs, &dofs, &l, &l, w);
        }
    }
    Ok(t)
}

/// `j_Ω^h`: `mu h^-1 [v][w] + tau h (n.[grad v])(n.[grad w])` on the full ghost faces.
pub fn assemble_ghost_bulk(d: &Discretization, p: &StabilizationParams) -> Result<Triplets> {
    let mut t = Triplets::new(d.n_dofs());
    let h = d.h();
    face_jump_penalty(d, &d.topo.ghost_bulk_faces, false, p.mu_bulk / h, &mut t)?;
    face_gradient_penalty(d, &d.topo.ghost_bulk_faces, false, p.tau_bulk * h, &mut t)?;
    Ok(t)
}

/// `j_Γ^h`: `mu h^-2 [v][w] + tau (n.[grad v])(n.[grad w])` on all faces of the surface-active mesh.
pub fn assemble_ghost_surface(d: &Discretization, p: &StabilizationParams) -> Result<Triplets> {
    let mut t = Triplets::new(d.n_dofs());
    let h = d.h();
    face_jump_penalty(d, &d.topo.surface_faces, true, p.mu_surf / (h * h), &mut t)?;
    face_gradient_penalty(d, &d.topo.surface_faces, true, p.tau_surf, &mut t)?;
    Ok(t)
}

/// `A^h = c_Ω (a_Ω + j_Ω) + c_Γ (a_Γ + j_Γ) + a_ΩΓ`.
pub fn assemble_matrix(d: &Discretization, p: &StabilizationParams) -> Result<CsrMatrix> {
    p.validate()?;
    let n = d.n_dofs();
    let mut t = Triplets::new(n);
    t.extend_scaled(&assemble_bulk_form(d, p)?, p.c_bulk, 0);
    t.extend_scaled(&assemble_ghost_bulk(d, p)?, p.c_bulk, 0);
    t.extend_scaled(&assemble_surface_form(d, p)?, p.c_surf, 0);
    t.extend_scaled(&assemble_ghost_surface(d, p)?, p.c_surf, 0);
    t.extend_scaled(&assemble_coupling_form(d, p)?, 1.0, 0);
    Ok(CsrMatrix::from_triplets(&t, true))
}

/// `(g, v_Ω)` over `Ω^h` for every bulk basis function (length `N`).
pub fn load_bulk(d: &Discretization, degree: usize, g: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; d.n_dofs()];
    for &e in &d.topo.active_bulk {
        let el = d.element(e);
        let dofs = d.bulk_dofs(e)?;
        for (x, w) in clip_element_rule(&d.mesh, &d.levelset, e, degree)?.iter() {
            let (phi, gx) = (el.values(x), g(x));
            for a in 0..3 {
                out[dofs[a]] += w * gx * phi[a];
            }
        }
    }
    Ok(out)
}

/// Which trace a functional on `Γ^h` tests against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trace {
    Bulk,
    Surface,
}

/// `(g, v)` over `Γ^h` against the bulk or surface basis; `g` also receives the segment.
pub fn load_on_surface(
    d: &Discretization,
    degree: usize,
    trace: Trace,
    g: impl Fn(Point, &SurfaceSegment) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; d.n_dofs()];
    for seg in &d.topo.segments {
        let el = d.element(seg.element);
        let dofs = match trace {
            Trace::Bulk => d.bulk_dofs(seg.element)?,
            Trace::Surface => d.surface_dofs(seg.element)?,
        };
        for (x, w) in surface_segment_rule(seg, degree)?.iter() {
            let (phi, gx) = (el.values(x), g(x, seg)?);
            for a in 0..3 {
                out[dofs[a]] += w * gx * phi[a];
            }
        }
    }
    Ok(out)
}

/// `sum_E (g_+ v^+(E) + g_- v^-(E))` with `[g_+, g_-] = g(edge)`.
pub fn load_surface_edges(d: &Discretization, g: impl Fn(&SurfaceEdge) -> [f64; 2]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; d.n_dofs()];
    for edge in &d.topo.surface_edges {
        let (dofs, plus, minus) = edge_context(d, edge)?;
        let [gp, gm] = g(edge);
        let (vp, vm) = (plus.0.values(edge.point), minus.0.values(edge.point));
        for a in 0..3 {
            out[dofs[a]] += gp * vp[a];
            out[dofs[a + 3]] += gm * vm[a];
        }
    }
    Ok(out)
}

/// `l^h(v) = c_Ω (f_Ω, v_Ω)_{Ω^h} + c_Γ (f_Γ^e, v_Γ)_{Γ^h}`; `f_surf` is evaluated
/// at points of `Γ^h` and is expected to apply the closest-point extension.
pub fn assemble_rhs(
    d: &Discretization,
    p: &StabilizationParams,
    degree: usize,
    f_bulk: impl Fn(Point) -> f64,
    f_surf: impl Fn(Point) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut b = load_bulk(d, degree, f_bulk)?;
    let s = load_on_surface(d, degree, Trace::Surface, |x, _| f_surf(x))?;
    for (bi, si) in b.iter_mut().zip(&s) {
        *bi = p.c_bulk * *bi + p.c_surf * si;
    }
    Ok(b)
}

/// Linear system of one discretization.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: CombinedDofMap,
    pub params: StabilizationParams,
    pub h: f64,
}

impl AssembledSystem {
    pub fn new(d: &Discretization, p: &StabilizationParams, rhs: Vec<f64>) -> Result<Self> {
        let matrix = assemble_matrix(d, p)?;
        if rhs.len() != matrix.n {
            return Err(Error::Assembly(format!("rhs has length {}, expected {}", rhs.len(), matrix.n)));
        }
        Ok(Self { matrix, rhs, dof_map: d.dofs.clone(), params: *p, h: d.h() })
    }

    pub fn solve(&self, rel_tol: f64) -> Result<(Vec<f64>, SolveStats)> {
        linalg::solve(&self.matrix, &self.rhs, rel_tol)
    }

    /// Diagonal weights of the surface rescaling: 1 on bulk unknowns, `s` on surface unknowns.
    fn weights(&self, s: f64) -> Vec<f64> {
        let mut w = vec![1.0; self.dof_map.n_bulk()];
        w.resize(self.dof_map.len(), s);
        w
    }

    /// Matrix whose spectrum enters the condition number.
    pub fn rescaled_matrix(&self, mode: Rescaling) -> CsrMatrix {
        match mode {
            Rescaling::Symmetric => {
                let d = self.weights(self.h.powf(0.25));
                self.matrix.scaled(&d, &d)
            }
            Rescaling::OneSided => {
                let s = self.weights(self.h.sqrt());
                self.matrix.scaled(&s, &vec![1.0; self.matrix.n])
            }
            Rescaling::Pairwise => {
                let d = self.weights(self.h.sqrt());
                self.matrix.scaled(&d, &d)
            }
        }
    }
}

/// Surface rescaling of the system matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Rescaling {
    /// `D A D` with `D = 1` (bulk), `h^{1/4}` (surface): surface block scaled by `h^{1/2}`.
    #[default]
    Symmetric,
    /// `S A` with `S = 1` (bulk), `h^{1/2}` (surface test functions); similar to `Symmetric`.
    OneSided,
    /// `D A D` with `D = h^{1/2}` on the surface: surface block scaled by `h`.
    Pairwise,
}

/// Which discrete energy norm a Gram matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormVariant {
    Bulk,
    Surface,
    Total,
}

/// Gram matrix `G` with `v^T G v = |||v|||_h^2` (size `N`; the bulk and
/// surface variants are zero on the other block).
pub fn energy_gram(d: &Discretization, p: &StabilizationParams, variant: NormVariant) -> Result<CsrMatrix> {
    let n = d.n_dofs();
    let mut t = Triplets::new(n);
    let h = d.h();
    let (wb, ws) = match variant {
        NormVariant::Bulk => (1.0, 0.0),
        NormVariant::Surface => (0.0, 1.0),
        NormVariant::Total => (p.c_bulk, p.c_surf),
    };
    if wb != 0.0 {
        let mut b = Triplets::new(n);
        bulk_volume(d, 1.0, 1.0, false, &mut b)?;
        face_jump_penalty(d, &d.topo.bulk_faces, false, 1.0 / h, &mut b)?;
        b.entries.extend(assemble_ghost_bulk(d, p)?.entries);
        t.extend_scaled(&b, wb, 0);
    }
    if ws != 0.0 {
        let mut s = Triplets::new(n);
        for seg in &d.topo.segments {
            let el = d.element(seg.element);
            let dofs = d.surface_dofs(seg.element)?;
            let tg = el.gradients.map(|g| tangential(seg.normal, g));
            let mut local = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] = seg.length * vec2::dot(tg[a], tg[b]);
                }
            }
            for (x, w) in surface_segment_rule(seg, FORM_DEGREE)?.iter() {
                let phi = el.values(x);
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += w * phi[a] * phi[b];
                    }
                }
            }
            s.add_local(&dofs, &local);
        }
        for edge in &d.topo.surface_edges {
            let (dofs, plus, minus) = edge_context(d, edge)?;
            let j = jump_values(&plus.0, &minus.0, edge.point);
            add_outer(&mut s, &dofs, &dofs, &j, &j, 1.0 / h);
        }
        s.entries.extend(assemble_ghost_surface(d, p)?.entries);
        t.extend_scaled(&s, ws, 0);
    }
    if variant == NormVariant::Total {
        t.entries.extend(assemble_coupling_form(d, p)?.entries);
    }
    Ok(CsrMatrix::from_triplets(&t, true))
}

/// Gram matrices on the bulk block for the ghost-penalty equivalence:
/// `‖grad v‖²` over the full active elements, and `‖grad v‖²` over `Ω^h`
/// plus `j_Ω^h(v, v)`.
pub fn ghost_equivalence_grams(d: &Discretization, p: &StabilizationParams) -> Result<(CsrMatrix, CsrMatrix)> {
    let n = d.n_dofs();
    let mut active = Triplets::new(n);
    bulk_volume(d, 1.0, 0.0, true, &mut active)?;
    let mut cut = Triplets::new(n);
    bulk_volume(d, 1.0, 0.0, false, &mut cut)?;
    cut.entries.extend(assemble_ghost_bulk(d, p)?.entries);
    let nb = d.dofs.n_bulk();
    Ok((
        CsrMatrix::from_triplets(&active, true).principal_block(0, nb),
        CsrMatrix::from_triplets(&cut, true).principal_block(0, nb),
    ))
}

/// Gram matrices on the surface block for the discrete Poincaré inequality:
/// `h^-1 ‖v - mean_{Γ^h}(v)‖²` over the full surface-active elements, and
/// `‖grad_Γ v‖²` over `Γ^h` plus `j_Γ^h(v, v)`.
pub fn poincare_grams(d: &Discretization, p: &StabilizationParams) -> Result<(faer::Mat<f64>, CsrMatrix)> {
    let (nb, ns) = (d.dofs.n_bulk(), d.dofs.n_surface());
    let h = d.h();
    let mut mass = faer::Mat::<f64>::zeros(ns, ns);
    let mut ones = vec![0.0; ns];
    let mut trace = vec![0.0; ns];
    let mut area = 0.0;
    for seg in &d.topo.segments {
        let e = seg.element;
        let el = d.element(e);
        let dofs = d.surface_dofs(e)?.map(|i| i - nb);
        let a = el.area.abs();
        area += a;
        for i in 0..3 {
            ones[dofs[i]] += a / 3.0;
            for j in 0..3 {
                mass[(dofs[i], dofs[j])] += a * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
            }
        }
        for (x, w) in surface_segment_rule(seg, FORM_DEGREE)?.iter() {
            let phi = el.values(x);
            for i in 0..3 {
                trace[dofs[i]] += w * phi[i];
            }
        }
    }
    let len = d.topo.surface_length();
    let num = faer::Mat::<f64>::from_fn(ns, ns, |i, j| {
        (mass[(i, j)] - (ones[i] * trace[j] + trace[i] * ones[j]) / len + area * trace[i] * trace[j] / (len * len)) / h
    });
    let mut den = Triplets::new(d.n_dofs());
    for seg in &d.topo.segments {
        let el = d.element(seg.element);
        let dofs = d.surface_dofs(seg.element)?;
        let tg = el.gradients.map(|g| tangential(seg.normal, g));
        let mut local = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] = seg.length * vec2::dot(tg[a], tg[b]);
            }
        }
        den.add_local(&dofs, &local);
    }
    den.entries.extend(assemble_ghost_surface(d, p)?.entries);
    Ok((num, CsrMatrix::from_triplets(&den, true).principal_block(nb, nb + ns)))
}
