//! Browser bindings: mobility curve, pressure field, capacity versus length.

use fracflow::mesh::{build_reservoir_family, build_reservoir_mesh, BoundaryTag, DomainSpec, Shape};
use fracflow::physics::FlowParams;
use fracflow::setpoint::{baseline_pdd, SetpointOptions, SetpointSolver};
use fracflow::solver::{PicardOptions, ReservoirSolver};
use wasm_bindgen::prelude::*;

fn domain(width: f64, height: f64, length: f64, aperture: f64, resolution: f64) -> DomainSpec {
    DomainSpec::new(Shape::Rectangle { width, height }, length, aperture, resolution)
}

fn params(alpha: f64, beta: f64) -> Result<FlowParams, String> {
    FlowParams::new(alpha, beta, 1.0).map_err(|e| e.to_string())
}

/// `n` samples of `f(z)` for `z` in `[0, z_max]`.
pub fn mobility_samples(alpha: f64, beta: f64, z_max: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = params(alpha, beta)?;
    if n < 2 || z_max.is_nan() || z_max <= 0.0 {
        return Err("need n >= 2 and z_max > 0".into());
    }
    Ok((0..n).map(|i| p.mobility(z_max * i as f64 / (n - 1) as f64)).collect())
}

#[wasm_bindgen]
pub fn mobility_curve(alpha: f64, beta: f64, z_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    mobility_samples(alpha, beta, z_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct PressureField {
    nodes: Vec<f64>,
    triangles: Vec<u32>,
    fracture: Vec<u32>,
    values: Vec<f64>,
    pdd: f64,
    iterations: usize,
}

#[wasm_bindgen]
impl PressureField {
    /// Node coordinates, `x0, y0, x1, y1, ...`.
    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    /// Fracture edges as node index pairs.
    #[wasm_bindgen(getter)]
    pub fn fracture(&self) -> Vec<u32> {
        self.fracture.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pdd(&self) -> f64 {
        self.pdd
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

#[allow(clippy::too_many_arguments)]
pub fn pressure(
    width: f64,
    height: f64,
    length: f64,
    aperture: f64,
    resolution: f64,
    alpha: f64,
    beta: f64,
    rate: f64,
) -> Result<PressureField, String> {
    let m = build_reservoir_mesh(&domain(width, height, length, aperture, resolution)).map_err(|e| e.to_string())?;
    let s = ReservoirSolver::new(&m, params(alpha, beta)?).map_err(|e| e.to_string())?;
    let (z, report) = s.solve(rate, &PicardOptions::default(), None).map_err(|e| e.to_string())?;
    Ok(PressureField {
        nodes: m.nodes.iter().flatten().copied().collect(),
        triangles: m.triangles.iter().flatten().map(|&i| i as u32).collect(),
        fracture: m.edges_with(BoundaryTag::FracturePlus).flatten().map(|i| i as u32).collect(),
        pdd: s.output(&z),
        values: z,
        iterations: report.iterations,
    })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn pressure_field(
    width: f64,
    height: f64,
    length: f64,
    aperture: f64,
    resolution: f64,
    alpha: f64,
    beta: f64,
    rate: f64,
) -> Result<PressureField, JsError> {
    pressure(width, height, length, aperture, resolution, alpha, beta, rate).map_err(|e| JsError::new(&e))
}

/// Capacities at each length followed by the unfractured capacity.
#[allow(clippy::too_many_arguments)]
pub fn capacities(
    width: f64,
    height: f64,
    aperture: f64,
    resolution: f64,
    alpha: f64,
    beta: f64,
    q_baseline: f64,
    lengths: &[f64],
) -> Result<Vec<f64>, String> {
    let err = |e: fracflow::Error| e.to_string();
    let p = params(alpha, beta)?;
    let spec = domain(width, height, lengths.first().copied().unwrap_or(1.0), aperture, resolution);
    let family = build_reservoir_family(&spec, lengths).map_err(err)?;
    let target = baseline_pdd(&family, &p, q_baseline).map_err(err)?;
    let mut out = Vec::with_capacity(lengths.len() + 1);
    for &l in lengths {
        let m = family.with_fracture_length(l).map_err(err)?;
        let r = SetpointSolver::new(&m, p)
            .and_then(|s| s.solve(target, &SetpointOptions::default()))
            .map_err(err)?;
        out.push(r.j_p);
    }
    out.push(q_baseline / target);
    Ok(out)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn capacity_curve(
    width: f64,
    height: f64,
    aperture: f64,
    resolution: f64,
    alpha: f64,
    beta: f64,
    q_baseline: f64,
    lengths: Vec<f64>,
) -> Result<Vec<f64>, JsError> {
    capacities(width, height, aperture, resolution, alpha, beta, q_baseline, &lengths).map_err(|e| JsError::new(&e))
}
