//! Checks of the fracture reduction on a thin slab: the full 2-D problem with
//! face fluxes against the reduced problem with those fluxes moved into the
//! source, compared through the norms the error estimates are stated in.

use serde::Serialize;

use crate::assembly::{Flavor, P1Space, Profile, ScalarField, SlabForm};
use crate::error::{Error, Result};
use crate::mesh::{build_fracture_slab_mesh, Mesh};
use crate::physics::{indicator_h, FlowParams};
use crate::solver::{solve_slab_form, PicardOptions};

/// Minimum number of elements across the slab thickness.
pub const MIN_TRANSVERSE_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Full,
}

/// `(sum_T |T| |grad W|_c^q)^(1/q)` with the per-triangle P1 gradient.
pub fn lq_seminorm(w: &ScalarField, m: &Mesh, component: Component, q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::Precondition(format!("exponent must satisfy 1 <= q < inf, got {q}")));
    }
    if w.values.len() != m.num_nodes() {
        return Err(Error::Precondition("field does not match mesh".into()));
    }
    let space = P1Space::new(m);
    Ok(gradient_norm(&space, |t| {
        let g = space.tris[t].gradient(&w.values);
        match component {
            Component::X => g[0].abs(),
            Component::Y => g[1].abs(),
            Component::Full => g[0].hypot(g[1]),
        }
    }, q))
}

fn gradient_norm(space: &P1Space, value: impl Fn(usize) -> f64, q: f64) -> f64 {
    let s: f64 = space
        .tris
        .iter()
        .enumerate()
        .map(|(t, tri)| tri.area * value(t).powf(q))
        .sum();
    s.powf(1.0 / q)
}

/// Default face flux `q0 (1 - x / L)`.
pub fn linear_taper(q0: f64, length: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x| q0 * (1.0 - x / length)
}

/// Composite 4-point Gauss-Legendre quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let hw = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * hw;
        for i in 0..4 {
            s += W[i] * f(mid + 0.5 * hw * X[i]);
        }
    }
    0.5 * hw * s
}

/// Seven-point degree-5 rule on the reference triangle: barycentric
/// coordinates and weights summing to one.
const TRI_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `||W - exact||_{L^2}` with the P1 interpolant `W`, integrated by a
/// degree-5 rule per triangle.
pub fn l2_error(m: &Mesh, w: &ScalarField, exact: &dyn Fn(f64, f64) -> f64) -> Result<f64> {
    if w.values.len() != m.num_nodes() {
        return Err(Error::Precondition("field does not match mesh".into()));
    }
    let mut s = 0.0;
    for (t, tri) in m.triangles.iter().enumerate() {
        let area = m.tri_area(t);
        let p = tri.map(|i| m.nodes[i]);
        let v = tri.map(|i| w.values[i]);
        for (bary, weight) in TRI_RULE {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let wh = bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2];
            s += area * weight * (wh - exact(x, y)).powi(2);
        }
    }
    Ok(s.sqrt())
}

/// `||W||_{L^2}` of a P1 field.
pub fn l2_norm(m: &Mesh, w: &ScalarField) -> Result<f64> {
    l2_error(m, w, &|_, _| 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub flavor: Flavor,
    pub h: f64,
    /// Face flux scale, informational.
    pub q0: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs` for isotropic runs (where `rhs` is the data term), `NaN`
    /// for anisotropic ones.
    pub empirical_c: f64,
    /// `L^{3/2}` norms of the x-derivative of the full and reduced solutions.
    pub norm_wx_full: f64,
    pub norm_wx_reduced: f64,
    /// `L^{3/2}` norm of the y-derivative of the full solution.
    pub norm_wy: f64,
    /// Same for the reduced solution; zero up to round-off.
    pub norm_wy_reduced: f64,
}

impl ReductionReport {
    /// Passes when the anisotropic bound holds; isotropic reports always pass.
    pub fn passes(&self) -> bool {
        match self.flavor {
            Flavor::Anisotropic => self.lhs <= self.rhs,
            Flavor::Isotropic => true,
        }
    }
}

/// Geometry and data of one slab comparison.
#[derive(Clone, Copy)]
pub struct SlabCase<'a> {
    pub length: f64,
    pub h: f64,
    /// Target element size along the slab.
    pub resolution: f64,
    pub q_plus: &'a Profile,
    pub q_minus: &'a Profile,
    pub q_over_v: f64,
    /// Informational scale of the face fluxes.
    pub q0: f64,
}

impl SlabCase<'_> {
    pub fn mesh(&self) -> Result<Mesh> {
        if !(self.resolution > 0.0) {
            return Err(Error::Precondition("resolution must be > 0".into()));
        }
        let nx = ((self.length / self.resolution).ceil() as usize).max(2);
        let ny = ((self.h / self.resolution).ceil() as usize).max(MIN_TRANSVERSE_CELLS);
        build_fracture_slab_mesh(self.length, self.h, nx, ny)
    }
}

struct Pair {
    space: P1Space,
    full: Vec<f64>,
    reduced: Vec<f64>,
}

fn solve_pair(case: &SlabCase, p: &FlowParams, flavor: Flavor) -> Result<Pair> {
    let m = case.mesh()?;
    let opts = PicardOptions::with_tol(1e-11);
    let solve = |form| solve_slab_form(&m, p, flavor, form, case.q_plus, case.q_minus, case.q_over_v, &opts);
    let full = solve(SlabForm::Full)?.0.values;
    let reduced = solve(SlabForm::Reduced)?.0.values;
    Ok(Pair {
        space: P1Space::new(&m),
        full,
        reduced,
    })
}

impl Pair {
    fn grads(&self, t: usize) -> ([f64; 2], [f64; 2]) {
        let tri = &self.space.tris[t];
        (tri.gradient(&self.full), tri.gradient(&self.reduced))
    }

    fn norm(&self, q: f64, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> f64 {
        gradient_norm(&self.space, |t| {
            let (a, b) = self.grads(t);
            f(a, b)
        }, q)
    }

    fn report(&self, flavor: Flavor, case: &SlabCase, lhs: f64, rhs: f64, empirical_c: f64) -> ReductionReport {
        ReductionReport {
            flavor,
            h: case.h,
            q0: case.q0,
            lhs,
            rhs,
            empirical_c,
            norm_wx_full: self.norm(1.5, |a, _| a[0].abs()),
            norm_wx_reduced: self.norm(1.5, |_, b| b[0].abs()),
            norm_wy: self.norm(1.5, |a, _| a[1].abs()),
            norm_wy_reduced: self.norm(1.5, |_, b| b[1].abs()),
        }
    }
}

/// Isotropic comparison. `rhs` holds the data term
/// `||q+||^2_{L^3} + ||q-||^2_{L^3}`, the face data extended constantly
/// across the thickness; `empirical_c = lhs / rhs`.
pub fn isotropic_report(case: &SlabCase, p: &FlowParams) -> Result<ReductionReport> {
    let pair = solve_pair(case, p, Flavor::Isotropic)?;
    let dx = pair.norm(1.5, |a, b| (a[0] - b[0]).abs());
    let wy = pair.norm(1.5, |a, _| a[1].abs());
    let lhs = dx * dx + wy * wy;
    let l3 = |q: &Profile| (case.h * integrate(&|x| q(x).abs().powi(3), 0.0, case.length, 256)).powf(2.0 / 3.0);
    let data = l3(case.q_plus) + l3(case.q_minus);
    let c = if data > 0.0 { lhs / data } else { 0.0 };
    Ok(pair.report(Flavor::Isotropic, case, lhs, data, c))
}

/// Anisotropic comparison against the bound `h / (2k) int (q+)^2 + (q-)^2`.
pub fn anisotropic_report(case: &SlabCase, p: &FlowParams) -> Result<ReductionReport> {
    if !(p.beta > 0.0) {
        return Err(Error::Domain("anisotropic comparison needs beta > 0".into()));
    }
    let pair = solve_pair(case, p, Flavor::Anisotropic)?;
    let k = p.aniso_k;
    let ratio = p.alpha_f * p.alpha_f / p.beta;
    let root = |v: f64| v.abs().sqrt().copysign(v);
    let mut lhs = 0.0;
    for (t, tri) in pair.space.tris.iter().enumerate() {
        let (a, b) = pair.grads(t);
        let axial = if indicator_h(a[0], b[0], p)? {
            0.5 * k * ratio * (root(a[0]) - root(b[0])).powi(2)
        } else {
            k / 6.0 * (a[0] - b[0]).powi(2)
        };
        lhs += tri.area * (axial + 0.5 * k * a[1] * a[1]);
    }
    let rhs = case.h / (2.0 * k)
        * integrate(&|x| (case.q_plus)(x).powi(2) + (case.q_minus)(x).powi(2), 0.0, case.length, 256);
    Ok(pair.report(Flavor::Anisotropic, case, lhs, rhs, f64::NAN))
}

/// Anisotropic comparison over decreasing thicknesses.
pub fn divergence_study(
    length: f64,
    resolution: f64,
    p: &FlowParams,
    q_plus: &Profile,
    q_minus: &Profile,
    h_list: &[f64],
) -> Result<Vec<ReductionReport>> {
    if h_list.is_empty() || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("thickness list must be non-empty and strictly decreasing".into()));
    }
    h_list
        .iter()
        .map(|&h| {
            let case = SlabCase {
                length,
                h,
                resolution,
                q_plus,
                q_minus,
                q_over_v: 0.0,
                q0: q_plus(0.0),
            };
            anisotropic_report(&case, p)
        })
        .collect()
}
