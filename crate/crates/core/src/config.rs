//! JSON run configuration. Every section is optional except the command;
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{DomainSpec, Shape};
use crate::physics::FlowParams;
use crate::setpoint::{Relaxation, SetpointOptions};
use crate::solver::PicardOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Inverse,
    Sweep,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha_f: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "one")]
    pub k_p: f64,
    /// Linear fracture mobility; `1 / alpha_f` when absent.
    #[serde(default)]
    pub k_f: Option<f64>,
    /// Transverse mobility of the anisotropic slab; `1 / alpha_f` when absent.
    #[serde(default)]
    pub aniso_k: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            alpha_f: 1.0,
            beta: 0.0,
            k_p: 1.0,
            k_f: None,
            aniso_k: None,
        }
    }
}

impl ParamsConfig {
    pub fn resolve(&self) -> Result<FlowParams> {
        let p = FlowParams {
            alpha_f: self.alpha_f,
            beta: self.beta,
            k_p: self.k_p,
            k_f: self.k_f.unwrap_or(1.0 / self.alpha_f),
            aniso_k: self.aniso_k.unwrap_or(1.0 / self.alpha_f),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Initial Picard damping.
    pub theta: f64,
    /// Picard tolerance on the relative update or residual.
    pub tol: f64,
    pub linear_tol: f64,
    pub max_iter: usize,
    /// Relative drawdown tolerance of the set-point loop.
    pub setpoint_tol: f64,
    pub max_outer: usize,
    pub relaxation: Relaxation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: 1.0,
            tol: 1e-9,
            linear_tol: 1e-10,
            max_iter: 200,
            setpoint_tol: 1e-6,
            max_outer: 50,
            relaxation: Relaxation::Secant,
        }
    }
}

impl SolverConfig {
    pub fn picard(&self) -> PicardOptions {
        PicardOptions {
            tol: self.tol,
            theta: self.theta,
            max_iter: self.max_iter,
            linear_tol: self.linear_tol.min(self.tol * 1e-2),
        }
    }

    pub fn setpoint(&self) -> SetpointOptions {
        SetpointOptions {
            tol: self.setpoint_tol,
            max_outer: self.max_outer,
            relaxation: self.relaxation,
            picard: self.picard(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    /// Production rate.
    pub rate: f64,
    /// Also write the pressure field as VTK.
    pub write_vtk: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rate: 1000.0,
            write_vtk: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InverseConfig {
    /// Target drawdown; when absent, the drawdown of the unfractured
    /// reservoir at `q_baseline`.
    pub target_pdd: Option<f64>,
    pub q_baseline: f64,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            target_pdd: None,
            q_baseline: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub l_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    pub q_baseline: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            l_values: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            beta_values: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            q_baseline: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Slab length.
    pub length: f64,
    /// Element size along the slab.
    pub resolution: f64,
    /// Face flux scale: `q(x) = q0 (1 - x / L)` on both faces.
    pub q0: f64,
    pub q_over_v: f64,
    /// Thickness of the isotropic runs.
    pub isotropic_h: f64,
    /// Flux scalings of the isotropic runs.
    pub scalings: Vec<f64>,
    /// Run the isotropic cases once more on a mesh refined by two.
    pub refine: bool,
    /// Thicknesses of the anisotropic runs, decreasing.
    pub anisotropic_h: Vec<f64>,
    /// Coefficients of the isotropic runs; the top-level ones when absent.
    pub isotropic_params: Option<ParamsConfig>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            length: 1.0,
            resolution: 1.0 / 64.0,
            q0: 1.0,
            q_over_v: 0.0,
            isotropic_h: 0.1,
            scalings: vec![1.0, 2.0, 4.0],
            refine: true,
            anisotropic_h: vec![0.2, 0.1, 0.05],
            isotropic_params: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    /// Output directory; the command line takes precedence.
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn one() -> f64 {
    1.0
}

fn field_err(field: &str, e: Error) -> Error {
    let msg = match e {
        Error::Domain(m) | Error::Geometry(m) | Error::Precondition(m) | Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{field} must be > 0, got {v}")))
    }
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: RunSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run spec serializes")
    }

    pub fn flow_params(&self) -> Result<FlowParams> {
        self.params.resolve().map_err(|e| field_err("params", e))
    }

    pub fn domain(&self) -> Result<&DomainSpec> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Config("domain: required for this command".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.flow_params()?;
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        positive("solver.linear_tol", s.linear_tol)?;
        positive("solver.setpoint_tol", s.setpoint_tol)?;
        if !(s.theta > 0.0 && s.theta <= 1.0) {
            return Err(Error::Config(format!("solver.theta must lie in (0, 1], got {}", s.theta)));
        }
        if s.max_iter == 0 || s.max_outer == 0 {
            return Err(Error::Config("solver.max_iter and solver.max_outer must be >= 1".into()));
        }
        if let Some(d) = &self.domain {
            d.validate().map_err(|e| field_err("domain", e))?;
        }
        match self.command {
            Command::Solve => {
                self.domain()?;
                if !self.solve.rate.is_finite() {
                    return Err(Error::Config("solve.rate must be finite".into()));
                }
            }
            Command::Inverse => {
                self.domain()?;
                positive("inverse.q_baseline", self.inverse.q_baseline)?;
                if let Some(t) = self.inverse.target_pdd {
                    positive("inverse.target_pdd", t)?;
                }
            }
            Command::Sweep => {
                let d = self.domain()?;
                let w = &self.sweep;
                positive("sweep.q_baseline", w.q_baseline)?;
                if w.l_values.is_empty() || w.beta_values.is_empty() {
                    return Err(Error::Config("sweep.l_values and sweep.beta_values must be non-empty".into()));
                }
                for &l in &w.l_values {
                    let mut at = d.clone();
                    at.fracture_length = l;
                    at.validate().map_err(|e| field_err("sweep.l_values", e))?;
                }
                for &b in &w.beta_values {
                    self.flow_params()?.with_beta(b).validate().map_err(|e| field_err("sweep.beta_values", e))?;
                }
            }
            Command::Validate => {
                let v = &self.validate;
                positive("validate.length", v.length)?;
                positive("validate.resolution", v.resolution)?;
                positive("validate.isotropic_h", v.isotropic_h)?;
                if !v.q0.is_finite() || !v.q_over_v.is_finite() {
                    return Err(Error::Config("validate.q0 and validate.q_over_v must be finite".into()));
                }
                if v.scalings.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return Err(Error::Config("validate.scalings must be positive".into()));
                }
                if v.anisotropic_h.is_empty()
                    || v.anisotropic_h.iter().any(|h| !(h.is_finite() && *h > 0.0))
                    || v.anisotropic_h.windows(2).any(|w| w[1] >= w[0])
                {
                    return Err(Error::Config(
                        "validate.anisotropic_h must be positive and strictly decreasing".into(),
                    ));
                }
                if let Some(ip) = &v.isotropic_params {
                    ip.resolve().map_err(|e| field_err("validate.isotropic_params", e))?;
                }
                if self.flow_params()?.beta <= 0.0 {
                    return Err(Error::Config("params.beta must be > 0 for the anisotropic comparison".into()));
                }
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunSpec::from_json(&text)
}

/// Example configuration for each command, as written to the docs.
pub fn example(command: Command) -> RunSpec {
    let domain = DomainSpec::new(Shape::Rectangle { width: 120.0, height: 60.0 }, 20.0, 0.1, 4.0);
    let params = ParamsConfig {
        alpha_f: 1e-3,
        beta: 1e-3,
        ..Default::default()
    };
    RunSpec {
        command,
        domain: (command != Command::Validate).then_some(domain),
        params: if command == Command::Validate {
            ParamsConfig {
                alpha_f: 1.0,
                beta: 1.0,
                ..Default::default()
            }
        } else {
            params
        },
        solver: SolverConfig::default(),
        solve: SolveConfig { rate: 10.0, write_vtk: true },
        inverse: InverseConfig {
            target_pdd: None,
            q_baseline: 10.0,
        },
        sweep: SweepConfig {
            q_baseline: 10.0,
            ..Default::default()
        },
        validate: ValidateConfig {
            isotropic_params: Some(ParamsConfig {
                alpha_f: 1.0,
                beta: 0.01,
                ..Default::default()
            }),
            ..Default::default()
        },
        output_dir: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "command": "solve",
        "domain": {"shape": {"rectangle": {"width": 40, "height": 20}}, "fracture_length": 10, "aperture": 0.01, "resolution": 2}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = RunSpec::from_json(MINIMAL).unwrap();
        assert_eq!(s.solver.theta, 1.0);
        assert_eq!(s.solver.tol, 1e-9);
        let p = s.flow_params().unwrap();
        assert_eq!(p.k_f, 1.0 / p.alpha_f);
        assert_eq!(s.domain().unwrap().grading, 1.3);
    }

    #[test]
    fn negative_beta_rejected() {
        let text = MINIMAL.replace("\"command\": \"solve\",", "\"command\": \"solve\", \"params\": {\"alpha_f\": 1, \"beta\": -1},");
        let err = RunSpec::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("beta must be ≥ 0"), "{err}");
    }

    #[test]
    fn unknown_key_named() {
        let text = MINIMAL.replace("\"command\": \"solve\",", "\"command\": \"solve\", \"params\": {\"alpha_f\": 1, \"betta\": 1},");
        let err = RunSpec::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("betta"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = RunSpec::from_json("{\n\"command\": \"solve\",\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn round_trip_idempotent() {
        for c in [Command::Solve, Command::Inverse, Command::Sweep, Command::Validate] {
            let a = example(c);
            let b = RunSpec::from_json(&a.to_json()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.to_json(), b.to_json());
        }
        let m = RunSpec::from_json(MINIMAL).unwrap();
        assert_eq!(RunSpec::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn sweep_length_must_fit() {
        let mut s = example(Command::Sweep);
        s.sweep.l_values = vec![10.0, 500.0];
        let err = RunSpec::from_json(&s.to_json()).unwrap_err().to_string();
        assert!(err.contains("sweep.l_values"), "{err}");
    }

    #[test]
    fn missing_domain_rejected() {
        let err = RunSpec::from_json(r#"{"command": "sweep"}"#).unwrap_err().to_string();
        assert!(err.contains("domain"), "{err}");
        assert!(RunSpec::from_json(r#"{"command": "validate", "params": {"alpha_f": 1, "beta": 1}}"#).is_ok());
    }
}
