//! Linear and nonlinear solves.
//!
//! Linear systems go through Jacobi-preconditioned conjugate gradients. The
//! nonlinear problems use frozen-coefficient (Picard) iteration: mobilities
//! are evaluated at the current iterate, the resulting symmetric system is
//! solved, and the update is optionally damped.

use crate::assembly::{
    require_slab, slab_load, slab_matrix, Flavor, LinearSystem, P1Space, Profile, ScalarField, SlabForm,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::{flux_potential, FlowParams};
use crate::sparse::{dot, norm2, CsrMatrix};

pub const DEFAULT_LINEAR_TOL: f64 = 1e-10;
pub const DEFAULT_PICARD_TOL: f64 = 1e-9;
const STAGNATION_WINDOW: usize = 10;
const MIN_THETA: f64 = 1.0 / 64.0;

/// Preconditioned CG on an SPD matrix. Returns the solution and the iteration
/// count; `tol` bounds `|b - A x| / |b|`.
pub(crate) fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut history = vec![norm2(&r) / bnorm];
    if history[0] <= tol {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 200;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver {
                message: "CG breakdown: matrix is singular or not positive definite".into(),
                iterations: it,
                last_residual: *history.last().unwrap(),
                history,
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let ratio = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + ratio * p[i];
        }
    }
    Err(Error::Solver {
        message: "CG iteration cap reached".into(),
        iterations: max_iter,
        last_residual: *history.last().unwrap(),
        history,
    })
}

fn pure_neumann(sys: &LinearSystem) -> bool {
    if !sys.constrained.is_empty() {
        return false;
    }
    let scale = sys.matrix.max_abs();
    (0..sys.matrix.dim()).all(|i| sys.matrix.row(i).map(|(_, v)| v).sum::<f64>().abs() <= 1e-12 * scale)
}

/// Solves a constrained symmetric system to relative residual `tol`.
pub fn solve_linear(sys: &LinearSystem, tol: f64) -> Result<ScalarField> {
    if pure_neumann(sys) {
        return Err(Error::Solver {
            message: "singular system: constants are in the null space and nothing is constrained".into(),
            iterations: 0,
            last_residual: f64::NAN,
            history: Vec::new(),
        });
    }
    let (a, b) = sys.constrained_system();
    let (x, _) = pcg(&a, &b, None, tol)?;
    Ok(ScalarField { values: x })
}

/// Solves `A x = b` with `x = 0` on `pinned`.
pub(crate) fn solve_pinned(
    mut a: CsrMatrix,
    b: &[f64],
    pinned: &[usize],
    warm: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut b = b.to_vec();
    for &c in pinned {
        a.eliminate(c);
        b[c] = 0.0;
    }
    Ok(pcg(&a, &b, warm, tol)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Convergence measure at exit: the smaller of the relative nonlinear
    /// residual and the relative update.
    pub final_residual: f64,
    pub converged: bool,
    /// Smallest damping factor that was applied.
    pub damping_used: f64,
    /// Relative nonlinear residual after each iterate.
    pub residual_history: Vec<f64>,
    /// Discrete energy after each iterate.
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    /// Initial damping factor in `(0, 1]`.
    pub theta: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: DEFAULT_PICARD_TOL,
            theta: 1.0,
            max_iter: 200,
            linear_tol: 1e-12,
        }
    }
}

impl PicardOptions {
    pub fn with_tol(tol: f64) -> Self {
        PicardOptions {
            tol,
            linear_tol: (tol * 1e-2).clamp(1e-13, DEFAULT_LINEAR_TOL),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.theta > 0.0 && self.theta <= 1.0) || self.max_iter == 0 {
            return Err(Error::Precondition(format!(
                "invalid Picard options: tol={}, theta={}, max_iter={}",
                self.tol, self.theta, self.max_iter
            )));
        }
        Ok(())
    }
}

/// A nonlinear problem `K(z) z = load` with a convex energy.
pub(crate) struct Frozen<'a> {
    pub initial: CsrMatrix,
    pub matrix_at: &'a dyn Fn(&[f64]) -> CsrMatrix,
    pub energy: &'a dyn Fn(&[f64]) -> f64,
    pub load: Vec<f64>,
    pub pinned: &'a [usize],
}

fn relative_residual(k: &CsrMatrix, z: &[f64], load: &[f64], pinned: &[usize], scale: f64) -> f64 {
    let mut r = k.mul_vec(z);
    for (ri, li) in r.iter_mut().zip(load) {
        *ri -= li;
    }
    for &c in pinned {
        r[c] = 0.0;
    }
    norm2(&r) / scale
}

pub(crate) fn picard(prob: &Frozen, opts: &PicardOptions, warm: Option<&[f64]>) -> Result<(Vec<f64>, SolveReport)> {
    opts.validate()?;
    let n = prob.load.len();
    let scale = {
        let mut l = prob.load.clone();
        for &c in prob.pinned {
            l[c] = 0.0;
        }
        norm2(&l)
    };
    let mut report = SolveReport {
        iterations: 0,
        final_residual: 0.0,
        converged: true,
        damping_used: opts.theta,
        residual_history: Vec::new(),
        energy_history: Vec::new(),
    };
    if scale == 0.0 {
        report.energy_history.push(0.0);
        report.residual_history.push(0.0);
        return Ok((vec![0.0; n], report));
    }
    let mut z = match warm {
        Some(w) => w.to_vec(),
        None => {
            report.iterations = 1;
            solve_pinned(prob.initial.clone(), &prob.load, prob.pinned, None, opts.linear_tol)?
        }
    };
    let mut k = (prob.matrix_at)(&z);
    let mut res = relative_residual(&k, &z, &prob.load, prob.pinned, scale);
    report.residual_history.push(res);
    report.energy_history.push((prob.energy)(&z));
    let mut theta = opts.theta;
    let mut prev_update = f64::INFINITY;
    let mut stall = 0;
    loop {
        if res <= opts.tol {
            report.final_residual = res;
            return Ok((z, report));
        }
        if report.iterations >= opts.max_iter {
            return Err(Error::Solver {
                message: format!("Picard iteration cap {} reached", opts.max_iter),
                iterations: report.iterations,
                last_residual: res,
                history: report.residual_history,
            });
        }
        let z_new = solve_pinned(k, &prob.load, prob.pinned, Some(&z), opts.linear_tol)?;
        report.iterations += 1;
        let (cand, k_c, res_c) = loop {
            let cand: Vec<f64> = z_new.iter().zip(&z).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            let k_c = (prob.matrix_at)(&cand);
            let res_c = relative_residual(&k_c, &cand, &prob.load, prob.pinned, scale);
            if res_c <= res || theta <= MIN_THETA {
                break (cand, k_c, res_c);
            }
            theta *= 0.5;
        };
        report.damping_used = report.damping_used.min(theta);
        let diff: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
        let update = norm2(&diff) / norm2(&cand).max(f64::MIN_POSITIVE);
        z = cand;
        k = k_c;
        res = res_c;
        report.residual_history.push(res);
        report.energy_history.push((prob.energy)(&z));
        if update <= opts.tol {
            report.final_residual = res.min(update);
            return Ok((z, report));
        }
        if update >= prev_update {
            stall += 1;
            if stall >= STAGNATION_WINDOW {
                return Err(Error::Solver {
                    message: format!(
                        "Picard stagnated: update not decreasing for {STAGNATION_WINDOW} steps; try a smaller damping theta"
                    ),
                    iterations: report.iterations,
                    last_residual: res,
                    history: report.residual_history,
                });
            }
        } else {
            stall = 0;
        }
        prev_update = update;
    }
}

/// Pre-assembled reservoir problem, reused across rates and warm starts.
pub struct ReservoirSolver<'m> {
    pub mesh: &'m Mesh,
    pub params: FlowParams,
    pub(crate) space: P1Space,
}

impl<'m> ReservoirSolver<'m> {
    pub fn new(mesh: &'m Mesh, params: FlowParams) -> Result<Self> {
        params.validate()?;
        if mesh.fracture_edges.is_empty() {
            return Err(Error::Assembly("reservoir operator needs a mesh with tagged fracture edges".into()));
        }
        Ok(ReservoirSolver {
            mesh,
            params,
            space: P1Space::new(mesh),
        })
    }

    pub fn space(&self) -> &P1Space {
        &self.space
    }

    /// Linear operator `A` with the surrogate fracture mobility `k_f`.
    pub(crate) fn linear_matrix(&self) -> CsrMatrix {
        self.space.reservoir_matrix(&self.params, &|_| self.params.k_f)
    }

    fn frozen_matrix(&self, z: &[f64]) -> CsrMatrix {
        let slopes = self.space.fracture_slopes(z);
        self.space
            .reservoir_matrix(&self.params, &|e| self.params.mobility(slopes[e].abs()))
    }

    /// `1/2 int k_p |grad z|^2 + h int Phi(dz/dx) - load . z`.
    pub fn energy(&self, z: &[f64], load: &[f64]) -> f64 {
        let p = &self.params;
        let bulk: f64 = self
            .space
            .tris
            .iter()
            .map(|t| {
                let g = t.gradient(z);
                0.5 * t.area * p.k_p * (g[0] * g[0] + g[1] * g[1])
            })
            .sum();
        let line: f64 = self
            .space
            .fracture
            .iter()
            .map(|e| e.len * flux_potential(p.alpha_f, p.beta, e.slope(z)))
            .sum();
        bulk + self.space.aperture * line - dot(load, z)
    }

    /// `-B_in Q`.
    pub fn load(&self, q: f64) -> Vec<f64> {
        self.space.unit_load().into_iter().map(|v| v * q).collect()
    }

    /// Solves `A x = rhs` with the well pinned.
    pub fn solve_linear_rhs(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        solve_pinned(self.linear_matrix(), rhs, &self.space.pinned, None, tol)
    }

    /// Nonlinear steady state `A z + F(z) + B_in Q = 0`.
    pub fn solve(&self, q: f64, opts: &PicardOptions, warm: Option<&[f64]>) -> Result<(Vec<f64>, SolveReport)> {
        let load = self.load(q);
        let energy = |z: &[f64]| self.energy(z, &load);
        let matrix_at = |z: &[f64]| self.frozen_matrix(z);
        let prob = Frozen {
            initial: self.linear_matrix(),
            matrix_at: &matrix_at,
            energy: &energy,
            load: load.clone(),
            pinned: &self.space.pinned,
        };
        picard(&prob, opts, warm)
    }

    pub fn output(&self, z: &[f64]) -> f64 {
        self.space.average(z)
    }
}

/// Pseudo-steady-state pressure for production rate `q`.
pub fn solve_pss(m: &Mesh, p: &FlowParams, q: f64, tol: f64) -> Result<(ScalarField, SolveReport)> {
    crate::assembly::assemble_a(m, p)?;
    let solver = ReservoirSolver::new(m, *p)?;
    let (z, report) = solver.solve(q, &PicardOptions::with_tol(tol), None)?;
    Ok((ScalarField { values: z }, report))
}

fn slab_energy(space: &P1Space, p: &FlowParams, flavor: Flavor, z: &[f64], load: &[f64]) -> f64 {
    let mut e = 0.0;
    for t in &space.tris {
        let g = t.gradient(z);
        e += t.area
            * match flavor {
                Flavor::Isotropic => flux_potential(p.alpha_f, p.beta, g[0].hypot(g[1])),
                Flavor::Anisotropic => flux_potential(p.alpha_f, p.beta, g[0]) + 0.5 * p.aniso_k * g[1] * g[1],
            };
    }
    e - dot(load, z)
}

/// Slab problem (full or reduced) by Picard iteration.
#[allow(clippy::too_many_arguments)]
pub fn solve_slab_form(
    m: &Mesh,
    p: &FlowParams,
    flavor: Flavor,
    form: SlabForm,
    q_plus: &Profile,
    q_minus: &Profile,
    q_over_v: f64,
    opts: &PicardOptions,
) -> Result<(ScalarField, SolveReport)> {
    require_slab(m)?;
    p.validate()?;
    if form == SlabForm::Reduced && !(m.aperture > 0.0) {
        return Err(Error::Precondition("reduced slab form needs a positive thickness".into()));
    }
    let space = P1Space::new(m);
    let load = slab_load(m, &space, form, q_plus, q_minus, q_over_v);
    let zero = vec![0.0; m.num_nodes()];
    let matrix_at = |z: &[f64]| slab_matrix(&space, p, flavor, z);
    let energy = |z: &[f64]| slab_energy(&space, p, flavor, z, &load);
    let prob = Frozen {
        initial: slab_matrix(&space, p, flavor, &zero),
        matrix_at: &matrix_at,
        energy: &energy,
        load: load.clone(),
        pinned: &space.pinned,
    };
    let (z, report) = picard(&prob, opts, None)?;
    Ok((ScalarField { values: z }, report))
}

/// Full slab problem with face fluxes `q_plus`, `q_minus`.
#[allow(clippy::too_many_arguments)]
pub fn solve_slab(
    m: &Mesh,
    p: &FlowParams,
    flavor: Flavor,
    q_plus: &Profile,
    q_minus: &Profile,
    q_over_v: f64,
    tol: f64,
) -> Result<(ScalarField, SolveReport)> {
    solve_slab_form(m, p, flavor, SlabForm::Full, q_plus, q_minus, q_over_v, &PicardOptions::with_tol(tol))
}
