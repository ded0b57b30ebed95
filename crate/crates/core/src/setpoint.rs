//! Inverse problem: the production rate that yields a prescribed drawdown.
//!
//! With `X` the response to a unit rate (`A X = -B_in`) and `G = C X`, the
//! nonlinear state splits as `z = X Q + z~` where `A z~ = -F(z)`. The rate
//! consistent with a target `y` is `(y - C z~) / G`; iterating that map is a
//! fixed-point step with slope `G`. The default update rescales the step by
//! `G / s`, where `s` is the secant slope of the drawdown in `Q`, which keeps
//! the iteration convergent when the fracture nonlinearity is strong.

use serde::{Deserialize, Serialize};

use crate::assembly::{P1Space, ScalarField};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::FlowParams;
use crate::solver::{solve_pinned, PicardOptions, ReservoirSolver};

pub const DEFAULT_SETPOINT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_OUTER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SetpointResult {
    /// Production rate.
    pub q: f64,
    /// Drawdown achieved at `q`.
    pub pdd: f64,
    /// Diffusive capacity `q / pdd`.
    pub j_p: f64,
    pub outer_iterations: usize,
    /// `(Q_k, PDD_k)` for every outer step.
    pub history: Vec<(f64, f64)>,
    /// Picard iterations summed over the outer loop.
    pub picard_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relaxation {
    /// `Q_{k+1} = (y - C z~_k) / G`.
    None,
    /// Same direction, step scaled by `G / s_k` with `s_k` the secant slope.
    #[default]
    Secant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetpointOptions {
    pub tol: f64,
    pub max_outer: usize,
    pub relaxation: Relaxation,
    pub picard: PicardOptions,
}

impl Default for SetpointOptions {
    fn default() -> Self {
        SetpointOptions {
            tol: DEFAULT_SETPOINT_TOL,
            max_outer: DEFAULT_MAX_OUTER,
            relaxation: Relaxation::Secant,
            picard: PicardOptions::with_tol(1e-10),
        }
    }
}

/// Drawdown of the unfractured reservoir producing at rate `q`.
pub fn baseline_pdd(m: &Mesh, p: &FlowParams, q: f64) -> Result<f64> {
    p.validate()?;
    let bare = m.with_aperture(0.0);
    let space = P1Space::new(&bare);
    let a = space.reservoir_matrix(p, &|_| 0.0);
    let load: Vec<f64> = space.unit_load().into_iter().map(|v| v * q).collect();
    let w = solve_pinned(a, &load, &space.pinned, None, 1e-12)?;
    Ok(space.average(&w))
}

/// Step response `X` (`A X = -B_in`) and its output `G = C X`.
pub fn step_response(m: &Mesh, p: &FlowParams) -> Result<(ScalarField, f64)> {
    let s = SetpointSolver::new(m, *p)?;
    Ok((ScalarField { values: s.x.clone() }, s.g))
}

/// Finds the rate whose drawdown equals `target_pdd`.
pub fn solve_setpoint(
    m: &Mesh,
    p: &FlowParams,
    target_pdd: f64,
    tol: f64,
    max_outer: usize,
) -> Result<SetpointResult> {
    let opts = SetpointOptions {
        tol,
        max_outer,
        ..Default::default()
    };
    SetpointSolver::new(m, *p)?.solve(target_pdd, &opts)
}

/// Reservoir solver with its step response cached.
pub struct SetpointSolver<'m> {
    pub reservoir: ReservoirSolver<'m>,
    x: Vec<f64>,
    g: f64,
}

impl<'m> SetpointSolver<'m> {
    pub fn new(m: &'m Mesh, p: FlowParams) -> Result<Self> {
        let reservoir = ReservoirSolver::new(m, p)?;
        let x = reservoir.solve_linear_rhs(&reservoir.load(1.0), 1e-12)?;
        let g = reservoir.output(&x);
        if !(g > 0.0) {
            return Err(Error::Solver {
                message: format!("step response output G = {g} is not positive"),
                iterations: 0,
                last_residual: f64::NAN,
                history: Vec::new(),
            });
        }
        Ok(SetpointSolver { reservoir, x, g })
    }

    /// Reuses a step response computed for the same mesh and linear operator
    /// (it does not depend on `beta`).
    pub fn with_beta(&self, beta: f64) -> Result<SetpointSolver<'m>> {
        let p = self.reservoir.params.with_beta(beta);
        Ok(SetpointSolver {
            reservoir: ReservoirSolver::new(self.reservoir.mesh, p)?,
            x: self.x.clone(),
            g: self.g,
        })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn step(&self) -> &[f64] {
        &self.x
    }

    pub fn solve(&self, target_pdd: f64, opts: &SetpointOptions) -> Result<SetpointResult> {
        if !(target_pdd > 0.0) || !target_pdd.is_finite() {
            return Err(Error::Precondition(format!("target drawdown must be > 0, got {target_pdd}")));
        }
        if opts.max_outer == 0 || !(opts.tol > 0.0) {
            return Err(Error::Precondition("set-point needs tol > 0 and max_outer >= 1".into()));
        }
        let r = &self.reservoir;
        let mut q = target_pdd / self.g;
        let mut history = Vec::new();
        let mut picard_iterations = 0;
        let mut warm: Option<(f64, Vec<f64>)> = None;
        let mut prev: (f64, f64) = (0.0, 0.0);
        for k in 1..=opts.max_outer {
            let guess = warm.as_ref().map(|(q0, z0)| {
                let s = if *q0 != 0.0 { q / q0 } else { 1.0 };
                z0.iter().map(|v| v * s).collect::<Vec<f64>>()
            });
            let (z, report) = match r.solve(q, &opts.picard, guess.as_deref()) {
                Ok(v) => v,
                Err(Error::Solver { message, .. }) => {
                    return Err(Error::Control {
                        message: format!("state solve failed at Q = {q}: {message}"),
                        iterations: k,
                        history,
                    })
                }
                Err(e) => return Err(e),
            };
            picard_iterations += report.iterations;
            let pdd = r.output(&z);
            history.push((q, pdd));
            if (pdd - target_pdd).abs() <= opts.tol * target_pdd {
                return Ok(SetpointResult {
                    q,
                    pdd,
                    j_p: q / pdd,
                    outer_iterations: k,
                    history,
                    picard_iterations,
                });
            }
            // correction z~ from A z~ = -F(z), and the rate it implies
            let f = crate::assembly::f_residual(&r.space, &r.params, &z);
            let minus_f: Vec<f64> = f.iter().map(|v| -v).collect();
            let z_corr = r.solve_linear_rhs(&minus_f, 1e-12)?;
            let gamma = (target_pdd - r.output(&z_corr)) / self.g;
            let next = match opts.relaxation {
                Relaxation::None => gamma,
                Relaxation::Secant => {
                    let slope = (pdd - prev.1) / (q - prev.0);
                    if slope.is_finite() && slope > 0.0 {
                        q + self.g / slope * (gamma - q)
                    } else {
                        gamma
                    }
                }
            };
            if !next.is_finite() || next <= 0.0 {
                return Err(Error::Control {
                    message: format!("rate update left the admissible range: {next}"),
                    iterations: k,
                    history,
                });
            }
            prev = (q, pdd);
            warm = Some((q, z));
            q = next;
        }
        Err(Error::Control {
            message: format!("drawdown did not reach {target_pdd} within tolerance {}", opts.tol),
            iterations: opts.max_outer,
            history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_reservoir_mesh, DomainSpec, Shape};
    use approx::assert_relative_eq;

    fn mesh() -> Mesh {
        let spec = DomainSpec::new(Shape::Rectangle { width: 40.0, height: 20.0 }, 10.0, 0.01, 2.0);
        build_reservoir_mesh(&spec).unwrap()
    }

    fn params(beta: f64) -> FlowParams {
        FlowParams::new(1e-3, beta, 1.0).unwrap()
    }

    #[test]
    fn baseline_is_linear_in_rate() {
        let m = mesh();
        let p = params(0.0);
        assert_eq!(baseline_pdd(&m, &p, 0.0).unwrap(), 0.0);
        let a = baseline_pdd(&m, &p, 100.0).unwrap();
        let b = baseline_pdd(&m, &p, 200.0).unwrap();
        assert!(a > 0.0);
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-9);
    }

    #[test]
    fn step_response_properties() {
        let m = mesh();
        let (x, g) = step_response(&m, &params(0.0)).unwrap();
        assert!(g > 0.0);
        assert_eq!(x.values[m.well_node], 0.0);
        let stiffer = params(0.0).scaled_mobility(2.0);
        let (_, g2) = step_response(&m, &stiffer).unwrap();
        assert_relative_eq!(g2, 0.5 * g, max_relative = 1e-9);
    }

    #[test]
    fn darcy_setpoint_is_one_step() {
        let m = mesh();
        let s = SetpointSolver::new(&m, params(0.0)).unwrap();
        let r = s.solve(50.0, &SetpointOptions::default()).unwrap();
        assert_eq!(r.outer_iterations, 1);
        assert_relative_eq!(r.q, 50.0 / s.g(), max_relative = 1e-12);
        let r2 = s.solve(500.0, &SetpointOptions::default()).unwrap();
        assert_relative_eq!(r.j_p, r2.j_p, max_relative = 1e-9);
    }

    #[test]
    fn forchheimer_setpoint_converges_and_lowers_capacity() {
        let m = mesh();
        let target = 50.0;
        let lin = solve_setpoint(&m, &params(0.0), target, 1e-6, 50).unwrap();
        let non = solve_setpoint(&m, &params(1e-3), target, 1e-6, 50).unwrap();
        assert!((non.pdd - target).abs() <= 1e-6 * target);
        assert_relative_eq!(non.j_p, non.q / non.pdd, max_relative = 1e-15);
        assert!(non.j_p < lin.j_p, "{} vs {}", non.j_p, lin.j_p);
        assert!(non.outer_iterations > 1);
    }

    #[test]
    fn cached_step_response_matches_fresh() {
        let m = mesh();
        let base = SetpointSolver::new(&m, params(0.0)).unwrap();
        let fresh = SetpointSolver::new(&m, params(1e-2)).unwrap();
        let reused = base.with_beta(1e-2).unwrap();
        assert_eq!(fresh.g(), reused.g());
    }

    #[test]
    fn bad_target_rejected() {
        let m = mesh();
        assert!(matches!(
            solve_setpoint(&m, &params(0.0), 0.0, 1e-6, 50),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exhausted_outer_loop_reports_history() {
        let m = mesh();
        match solve_setpoint(&m, &params(1e-2), 50.0, 1e-14, 2) {
            Err(Error::Control { history, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("expected control error, got {other:?}"),
        }
    }
}
