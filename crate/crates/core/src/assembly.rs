//! P1 finite-element operators of the coupled reduced model and of the
//! fracture slab problems.
//!
//! Reservoir unknowns are nodal pressures; the fracture shares the trace nodes
//! on `y = 0`, so the line terms are added directly onto the bulk pattern.
//! All gradients are constant per element, which makes centroid evaluation of
//! the Forchheimer mobility exact in its argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, MeshKind};
use crate::physics::{DiagTensor, FlowParams};
use crate::sparse::CsrMatrix;

/// Scalar boundary/source profile `x -> value`.
pub type Profile = dyn Fn(f64) -> f64 + Send + Sync;

/// Nodal values over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Precondition(format!(
                "field has {} values but mesh has {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("field contains non-finite value {v}")));
        }
        Ok(ScalarField { values })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        ScalarField {
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        ScalarField {
            values: vec![c; mesh.num_nodes()],
        }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            values: mesh.nodes.iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::Precondition(format!(
                "field has {} values but mesh has {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Matrix, right-hand side and Dirichlet data.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained: Vec<(usize, f64)>,
}

impl LinearSystem {
    /// Applies the Dirichlet data by symmetric row/column elimination.
    pub fn constrained_system(&self) -> (CsrMatrix, Vec<f64>) {
        let mut a = self.matrix.clone();
        let mut b = self.rhs.clone();
        for &(c, g) in &self.constrained {
            if g != 0.0 {
                for (i, aic) in self.matrix.column(c) {
                    b[i] -= aic * g;
                }
            }
        }
        for &(c, _) in &self.constrained {
            a.eliminate(c);
        }
        for &(c, g) in &self.constrained {
            b[c] = g;
        }
        (a, b)
    }

    /// `A x - b` of the unconstrained equations.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        r
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TriGeom {
    pub nodes: [usize; 3],
    pub area: f64,
    pub gx: [f64; 3],
    pub gy: [f64; 3],
}

impl TriGeom {
    pub fn gradient(&self, w: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            let v = w[self.nodes[k]];
            g[0] += self.gx[k] * v;
            g[1] += self.gy[k] * v;
        }
        g
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeGeom {
    pub nodes: [usize; 2],
    pub len: f64,
}

impl EdgeGeom {
    /// Tangential derivative from the well towards the tip.
    pub fn slope(&self, w: &[f64]) -> f64 {
        (w[self.nodes[1]] - w[self.nodes[0]]) / self.len
    }
}

/// Per-mesh cache of element geometry, the sparsity pattern and lumped
/// (exact for constants) load weights.
#[derive(Debug, Clone)]
pub struct P1Space {
    pub(crate) tris: Vec<TriGeom>,
    pub(crate) fracture: Vec<EdgeGeom>,
    pub(crate) pattern: CsrMatrix,
    /// `int phi_i dOmega`.
    pub(crate) area_weight: Vec<f64>,
    /// `int_{Gamma_f} phi_i dx`.
    pub(crate) line_weight: Vec<f64>,
    pub(crate) area: f64,
    pub(crate) fracture_length: f64,
    pub(crate) aperture: f64,
    pub(crate) x: Vec<f64>,
    /// Nodes held at zero pressure (the well).
    pub(crate) pinned: Vec<usize>,
}

impl P1Space {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_nodes();
        let mut area_weight = vec![0.0; n];
        let tris: Vec<TriGeom> = mesh
            .triangles
            .iter()
            .map(|&t| {
                let p = t.map(|i| mesh.nodes[i]);
                let area = crate::mesh::signed_area(p[0], p[1], p[2]);
                let mut gx = [0.0; 3];
                let mut gy = [0.0; 3];
                for k in 0..3 {
                    let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                    gx[k] = (a[1] - b[1]) / (2.0 * area);
                    gy[k] = (b[0] - a[0]) / (2.0 * area);
                }
                for &i in &t {
                    area_weight[i] += area / 3.0;
                }
                TriGeom { nodes: t, area, gx, gy }
            })
            .collect();
        let mut line_weight = vec![0.0; n];
        let fracture: Vec<EdgeGeom> = mesh
            .fracture_edges
            .iter()
            .map(|&e| {
                let len = mesh.edge_length(e);
                line_weight[e[0]] += 0.5 * len;
                line_weight[e[1]] += 0.5 * len;
                EdgeGeom { nodes: e, len }
            })
            .collect();
        P1Space {
            area: tris.iter().map(|t| t.area).sum(),
            fracture_length: fracture.iter().map(|e| e.len).sum(),
            tris,
            fracture,
            pattern: CsrMatrix::from_mesh_pattern(mesh),
            area_weight,
            line_weight,
            aperture: mesh.aperture,
            x: mesh.nodes.iter().map(|p| p[0]).collect(),
            pinned: mesh.well_nodes(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.area_weight.len()
    }

    /// `|Omega_p| + h L`.
    pub fn total_volume(&self) -> f64 {
        self.area + self.aperture * self.fracture_length
    }

    /// Nodal quadrature weights that equal tensor-product dual-cell areas on
    /// structured right-triangle meshes: the right-angle vertex takes half
    /// the triangle, the others a quarter. Other triangles split in thirds.
    pub(crate) fn dual_cell_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.num_nodes()];
        for t in &self.tris {
            let right = (0..3).find(|&k| {
                let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                let d = t.gx[a] * t.gx[b] + t.gy[a] * t.gy[b];
                let s = (t.gx[a].hypot(t.gy[a])) * (t.gx[b].hypot(t.gy[b]));
                d.abs() <= 1e-12 * s
            });
            for k in 0..3 {
                w[t.nodes[k]] += match right {
                    Some(r) if r == k => 0.5 * t.area,
                    Some(_) => 0.25 * t.area,
                    None => t.area / 3.0,
                };
            }
        }
        w
    }

    pub(crate) fn fracture_slopes(&self, w: &[f64]) -> Vec<f64> {
        self.fracture.iter().map(|e| e.slope(w)).collect()
    }

    /// Stiffness with per-triangle diagonal tensor and per-fracture-edge
    /// mobility (scaled by the aperture).
    pub(crate) fn stiffness(
        &self,
        tensor: &dyn Fn(usize) -> DiagTensor,
        fracture_mobility: &dyn Fn(usize) -> f64,
    ) -> CsrMatrix {
        let mut a = self.pattern.clone();
        for (t, g) in self.tris.iter().enumerate() {
            let d = tensor(t);
            for r in 0..3 {
                for c in 0..3 {
                    let v = g.area * (d.xx * g.gx[r] * g.gx[c] + d.yy * g.gy[r] * g.gy[c]);
                    a.add(g.nodes[r], g.nodes[c], v);
                }
            }
        }
        if self.aperture != 0.0 {
            for (e, g) in self.fracture.iter().enumerate() {
                let k = self.aperture * fracture_mobility(e) / g.len;
                let [i, j] = g.nodes;
                a.add(i, i, k);
                a.add(j, j, k);
                a.add(i, j, -k);
                a.add(j, i, -k);
            }
        }
        a
    }

    /// Reservoir stiffness with Darcy bulk and the given fracture mobilities.
    pub(crate) fn reservoir_matrix(&self, p: &FlowParams, fracture_mobility: &dyn Fn(usize) -> f64) -> CsrMatrix {
        let iso = DiagTensor { xx: p.k_p, yy: p.k_p };
        self.stiffness(&|_| iso, fracture_mobility)
    }

    /// `-B_in`: normalised unit source `(int phi_i + h int_Gamma phi_i) / ||Omega||`.
    pub(crate) fn unit_load(&self) -> Vec<f64> {
        let vol = self.total_volume();
        self.area_weight
            .iter()
            .zip(&self.line_weight)
            .map(|(a, l)| (a + self.aperture * l) / vol)
            .collect()
    }

    pub(crate) fn average(&self, w: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in &self.tris {
            s += t.area * (w[t.nodes[0]] + w[t.nodes[1]] + w[t.nodes[2]]) / 3.0;
        }
        let mut line = 0.0;
        for e in &self.fracture {
            line += 0.5 * e.len * (w[e.nodes[0]] + w[e.nodes[1]]);
        }
        (s + self.aperture * line) / self.total_volume()
    }
}

pub(crate) fn require_reservoir(m: &Mesh) -> Result<()> {
    if m.kind != MeshKind::Reservoir || m.fracture_edges.is_empty() {
        return Err(Error::Assembly(
            "reservoir operator needs a mesh with tagged fracture edges".into(),
        ));
    }
    Ok(())
}

/// Linear operator of the reduced model: Darcy bulk plus the aperture-weighted
/// linear fracture line term, with the well pinned to zero.
pub fn assemble_a(m: &Mesh, p: &FlowParams) -> Result<LinearSystem> {
    require_reservoir(m)?;
    p.validate()?;
    let space = P1Space::new(m);
    Ok(LinearSystem {
        matrix: space.reservoir_matrix(p, &|_| p.k_f),
        rhs: vec![0.0; m.num_nodes()],
        constrained: m.well_nodes().into_iter().map(|n| (n, 0.0)).collect(),
    })
}

/// Input vector `B_in`; its entries sum to `-1`.
pub fn assemble_b_in(m: &Mesh) -> Vec<f64> {
    P1Space::new(m).unit_load().into_iter().map(|v| -v).collect()
}

/// Nonlinear-minus-linear fracture term
/// `F_i = h int (f(|dW/dx|) - k_f) dW/dx dphi_i/dx`.
pub fn assemble_f_residual(m: &Mesh, p: &FlowParams, w: &ScalarField) -> Result<Vec<f64>> {
    w.check(m)?;
    let space = P1Space::new(m);
    Ok(f_residual(&space, p, &w.values))
}

pub(crate) fn f_residual(space: &P1Space, p: &FlowParams, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.num_nodes()];
    if space.aperture == 0.0 {
        return out;
    }
    for e in &space.fracture {
        let s = e.slope(w);
        let flux = space.aperture * (p.mobility(s.abs()) - p.k_f) * s;
        out[e.nodes[0]] -= flux;
        out[e.nodes[1]] += flux;
    }
    out
}

/// Volume average `(int W + h int_Gamma W) / (|Omega_p| + h L)`.
pub fn output_c(m: &Mesh, w: &ScalarField) -> Result<f64> {
    w.check(m)?;
    Ok(P1Space::new(m).average(&w.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Isotropic,
    Anisotropic,
}

impl Flavor {
    pub fn name(&self) -> &'static str {
        match self {
            Flavor::Isotropic => "isotropic",
            Flavor::Anisotropic => "anisotropic",
        }
    }
}

/// Which slab problem: the full one with Neumann data on the faces, or the
/// reduced comparator with the face fluxes moved into the volume source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabForm {
    Full,
    Reduced,
}

pub(crate) fn require_slab(m: &Mesh) -> Result<()> {
    let has = |t| m.edges_with(t).next().is_some();
    if m.kind != MeshKind::Slab
        || !has(BoundaryTag::FracturePlus)
        || !has(BoundaryTag::FractureMinus)
        || !has(BoundaryTag::Well)
    {
        return Err(Error::Assembly("slab problem needs a slab mesh with face/well tags".into()));
    }
    Ok(())
}

/// Element mobility tensor of the slab problems.
#[inline]
pub(crate) fn slab_tensor(flavor: Flavor, p: &FlowParams, grad: [f64; 2]) -> DiagTensor {
    match flavor {
        Flavor::Isotropic => {
            let f = p.mobility(grad[0].hypot(grad[1]));
            DiagTensor { xx: f, yy: f }
        }
        Flavor::Anisotropic => DiagTensor {
            xx: p.mobility(grad[0].abs()),
            yy: p.aniso_k,
        },
    }
}

/// Load vector of a slab problem. Face data and the x-dependent part of the
/// source use nodal (trapezoidal) quadrature, which keeps the reduced
/// discrete solution exactly independent of y.
pub(crate) fn slab_load(
    m: &Mesh,
    space: &P1Space,
    form: SlabForm,
    q_plus: &Profile,
    q_minus: &Profile,
    q_over_v: f64,
) -> Vec<f64> {
    let weight = space.dual_cell_weights();
    let mut b: Vec<f64> = weight.iter().map(|a| a * q_over_v).collect();
    match form {
        SlabForm::Full => {
            for (tag, q) in [(BoundaryTag::FracturePlus, q_plus), (BoundaryTag::FractureMinus, q_minus)] {
                for e in m.edges_with(tag) {
                    let half = 0.5 * m.edge_length(e);
                    for &n in &e {
                        b[n] -= half * q(space.x[n]);
                    }
                }
            }
        }
        SlabForm::Reduced => {
            let h = m.aperture;
            for (i, bi) in b.iter_mut().enumerate() {
                let x = space.x[i];
                *bi -= weight[i] * (q_plus(x) + q_minus(x)) / h;
            }
        }
    }
    b
}

pub(crate) fn slab_matrix(space: &P1Space, p: &FlowParams, flavor: Flavor, w: &[f64]) -> CsrMatrix {
    space.stiffness(&|t| slab_tensor(flavor, p, space.tris[t].gradient(w)), &|_| 0.0)
}

/// Weak-form residual of the full slab problem
/// `-div(K(grad W) grad W) = Q/V` with `-K grad W . n = q` on the faces,
/// zero flux at the tip and `W = 0` on the well face (residual zeroed there).
pub fn assemble_slab_residual(
    m: &Mesh,
    p: &FlowParams,
    w: &ScalarField,
    flavor: Flavor,
    q_plus: &Profile,
    q_minus: &Profile,
    q_over_v: f64,
) -> Result<Vec<f64>> {
    slab_residual(m, p, w, flavor, SlabForm::Full, q_plus, q_minus, q_over_v)
}

#[allow(clippy::too_many_arguments)]
pub fn slab_residual(
    m: &Mesh,
    p: &FlowParams,
    w: &ScalarField,
    flavor: Flavor,
    form: SlabForm,
    q_plus: &Profile,
    q_minus: &Profile,
    q_over_v: f64,
) -> Result<Vec<f64>> {
    require_slab(m)?;
    w.check(m)?;
    let space = P1Space::new(m);
    let a = slab_matrix(&space, p, flavor, &w.values);
    let b = slab_load(m, &space, form, q_plus, q_minus, q_over_v);
    let mut r = a.mul_vec(&w.values);
    for (ri, bi) in r.iter_mut().zip(&b) {
        *ri -= bi;
    }
    for n in m.well_nodes() {
        r[n] = 0.0;
    }
    Ok(r)
}
