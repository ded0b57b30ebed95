//! Diffusive capacity over a grid of fracture lengths and Forchheimer
//! coefficients, all at the drawdown of the unfractured reservoir.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{build_reservoir_family, DomainSpec, Mesh};
use crate::physics::FlowParams;
use crate::setpoint::{baseline_pdd, SetpointOptions, SetpointSolver};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub geometry: String,
    pub q_baseline: f64,
    /// Drawdown of the unfractured reservoir at `q_baseline`.
    pub pdd_star: f64,
    /// `q_baseline / pdd_star`.
    pub j_star: f64,
    pub mesh_nodes: usize,
    pub mesh_triangles: usize,
    /// Outer set-point iterations summed over successful cells.
    pub outer_iterations: usize,
    pub picard_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub beta_index: usize,
    pub l_index: usize,
    pub message: String,
}

/// Rows follow `beta_values`, columns `l_values`. Failed cells hold `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub l_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    pub j: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub failures: Vec<CellFailure>,
    pub meta: SweepMeta,
}

impl SweepTable {
    /// Table from given capacities, for analysis of external data.
    pub fn from_capacities(l_values: Vec<f64>, beta_values: Vec<f64>, j: Vec<Vec<f64>>, j_star: f64) -> Result<Self> {
        if j.len() != beta_values.len() || j.iter().any(|r| r.len() != l_values.len()) {
            return Err(Error::Precondition("capacity matrix does not match the axes".into()));
        }
        let pdd_star = 1.0;
        Ok(SweepTable {
            q: j.iter().map(|r| r.iter().map(|v| v * pdd_star).collect()).collect(),
            l_values,
            beta_values,
            j,
            failures: Vec::new(),
            meta: SweepMeta {
                geometry: "external".into(),
                q_baseline: j_star * pdd_star,
                pdd_star,
                j_star,
                mesh_nodes: 0,
                mesh_triangles: 0,
                outer_iterations: 0,
                picard_iterations: 0,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Worker threads; `0` uses the global rayon pool.
    pub threads: usize,
    pub setpoint: SetpointOptions,
}

/// Runs the sweep. The mesh is built once with breakpoints at every fracture
/// length and re-tagged per length, so all cells and the baseline share nodes.
pub fn run_sweep(
    spec: &DomainSpec,
    l_list: &[f64],
    beta_list: &[f64],
    q_baseline: f64,
    p: &FlowParams,
    opts: &SweepOptions,
) -> Result<SweepTable> {
    if l_list.is_empty() || beta_list.is_empty() {
        return Err(Error::Precondition("sweep needs at least one length and one beta".into()));
    }
    if !(q_baseline > 0.0) {
        return Err(Error::Precondition(format!("baseline rate must be > 0, got {q_baseline}")));
    }
    p.validate()?;
    for &b in beta_list {
        p.with_beta(b).validate()?;
    }
    let family = build_reservoir_family(spec, l_list)?;
    let pdd_star = baseline_pdd(&family, p, q_baseline)?;
    let meshes: Vec<Mesh> = l_list
        .iter()
        .map(|&l| family.with_fracture_length(l))
        .collect::<Result<_>>()?;
    let work = || -> Result<SweepTable> {
        let solvers: Vec<Result<SetpointSolver>> = meshes.par_iter().map(|m| SetpointSolver::new(m, *p)).collect();
        let cells: Vec<(usize, usize)> = (0..beta_list.len())
            .flat_map(|i| (0..l_list.len()).map(move |j| (i, j)))
            .collect();
        let results: Vec<Result<(f64, usize, usize)>> = cells
            .par_iter()
            .map(|&(i, j)| {
                let base = solvers[j].as_ref().map_err(|e| Error::Precondition(e.to_string()))?;
                let r = base.with_beta(beta_list[i])?.solve(pdd_star, &opts.setpoint)?;
                Ok((r.q, r.outer_iterations, r.picard_iterations))
            })
            .collect();
        let mut table = SweepTable {
            l_values: l_list.to_vec(),
            beta_values: beta_list.to_vec(),
            j: vec![vec![f64::NAN; l_list.len()]; beta_list.len()],
            q: vec![vec![f64::NAN; l_list.len()]; beta_list.len()],
            failures: Vec::new(),
            meta: SweepMeta {
                geometry: spec.shape.describe(),
                q_baseline,
                pdd_star,
                j_star: q_baseline / pdd_star,
                mesh_nodes: family.num_nodes(),
                mesh_triangles: family.triangles.len(),
                outer_iterations: 0,
                picard_iterations: 0,
            },
        };
        for (&(i, j), r) in cells.iter().zip(results) {
            match r {
                Ok((q, outer, picard)) => {
                    table.q[i][j] = q;
                    table.j[i][j] = q / pdd_star;
                    table.meta.outer_iterations += outer;
                    table.meta.picard_iterations += picard;
                }
                Err(e) => table.failures.push(CellFailure {
                    beta_index: i,
                    l_index: j,
                    message: e.to_string(),
                }),
            }
        }
        Ok(table)
    };
    if opts.threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(work)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendDiagnostics {
    /// J non-decreasing in L at the smallest beta.
    pub increasing_in_l: bool,
    /// J non-increasing in beta at every L.
    pub decreasing_in_beta: bool,
    /// Saturation ratio at the largest beta not above the one at the smallest.
    pub saturating: bool,
    /// `dJ(last L pair) / |dJ(first L pair)|` at the smallest and largest beta.
    pub saturation_ratio_small_beta: f64,
    pub saturation_ratio_large_beta: f64,
    /// Set when a ratio was 0/0 and the saturation check passed by default.
    pub saturation_indeterminate: bool,
    /// Every cell exceeds the unfractured capacity.
    pub above_baseline: bool,
    pub offenders: Vec<String>,
}

impl TrendDiagnostics {
    pub fn passed(&self) -> bool {
        self.increasing_in_l && self.decreasing_in_beta && self.saturating
    }
}

fn ascending_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// Checks the qualitative trends of a completed table.
pub fn trend_check(t: &SweepTable) -> Result<TrendDiagnostics> {
    if t.l_values.len() < 3 || t.beta_values.len() < 2 {
        return Err(Error::Precondition("trend check needs >= 3 lengths and >= 2 betas".into()));
    }
    if !t.failures.is_empty() || t.j.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("trend check needs a table without failed cells".into()));
    }
    let li = ascending_order(&t.l_values);
    let bi = ascending_order(&t.beta_values);
    let (small, large) = (bi[0], bi[bi.len() - 1]);
    let mut offenders = Vec::new();

    let mut increasing_in_l = true;
    for w in li.windows(2) {
        if t.j[small][w[1]] < t.j[small][w[0]] {
            increasing_in_l = false;
            offenders.push(format!(
                "beta={}: J(L={})={} < J(L={})={}",
                t.beta_values[small], t.l_values[w[1]], t.j[small][w[1]], t.l_values[w[0]], t.j[small][w[0]]
            ));
        }
    }

    let mut decreasing_in_beta = true;
    for &c in &li {
        for w in bi.windows(2) {
            if t.j[w[1]][c] > t.j[w[0]][c] {
                decreasing_in_beta = false;
                offenders.push(format!(
                    "L={}: J(beta={})={} > J(beta={})={}",
                    t.l_values[c], t.beta_values[w[1]], t.j[w[1]][c], t.beta_values[w[0]], t.j[w[0]][c]
                ));
            }
        }
    }

    let n = li.len();
    let ratio = |row: usize| {
        let first = t.j[row][li[1]] - t.j[row][li[0]];
        let last = t.j[row][li[n - 1]] - t.j[row][li[n - 2]];
        if first == 0.0 {
            if last == 0.0 {
                (0.0, true)
            } else {
                (f64::INFINITY.copysign(last), false)
            }
        } else {
            (last / first.abs(), false)
        }
    };
    let (r_small, ind_small) = ratio(small);
    let (r_large, ind_large) = ratio(large);
    let indeterminate = ind_small || ind_large;
    let saturating = indeterminate || r_large <= r_small;
    if !saturating {
        offenders.push(format!(
            "saturation ratio {r_large} at beta={} exceeds {r_small} at beta={}",
            t.beta_values[large], t.beta_values[small]
        ));
    }

    let mut above_baseline = true;
    for (i, row) in t.j.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if !(v > t.meta.j_star) {
                above_baseline = false;
                offenders.push(format!(
                    "beta={}, L={}: J={} not above J*={}",
                    t.beta_values[i], t.l_values[c], v, t.meta.j_star
                ));
            }
        }
    }

    Ok(TrendDiagnostics {
        increasing_in_l,
        decreasing_in_beta,
        saturating,
        saturation_ratio_small_beta: r_small,
        saturation_ratio_large_beta: r_large,
        saturation_indeterminate: indeterminate,
        above_baseline,
        offenders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Shape;

    fn table(j: Vec<Vec<f64>>) -> SweepTable {
        let nl = j[0].len();
        let nb = j.len();
        SweepTable::from_capacities(
            (1..=nl).map(|v| 10.0 * v as f64).collect(),
            (0..nb).map(|k| 1e-5 * 10f64.powi(k as i32)).collect(),
            j,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_table_flags_indeterminate_saturation() {
        let d = trend_check(&table(vec![vec![2.0; 4]; 3])).unwrap();
        assert!(d.passed());
        assert!(d.saturation_indeterminate);
    }

    #[test]
    fn transposed_table_fails_beta_trend() {
        // increasing in beta instead of decreasing
        let d = trend_check(&table(vec![vec![2.0, 2.5, 2.8], vec![3.0, 3.5, 3.8]])).unwrap();
        assert!(!d.decreasing_in_beta);
        assert!(!d.passed());
        assert!(d.offenders.iter().any(|o| o.contains("L=10")));
    }

    #[test]
    fn small_tables_rejected() {
        assert!(matches!(
            trend_check(&table(vec![vec![1.0, 2.0]; 2])),
            Err(Error::Precondition(_))
        ));
        let mut t = table(vec![vec![2.0, 2.5, 2.8]; 2]);
        t.j[0][1] = f64::NAN;
        assert!(trend_check(&t).is_err());
    }

    #[test]
    fn empty_lists_rejected() {
        let spec = DomainSpec::new(Shape::Rectangle { width: 40.0, height: 20.0 }, 10.0, 0.01, 4.0);
        let p = FlowParams::new(1e-3, 0.0, 1.0).unwrap();
        let o = SweepOptions::default();
        assert!(matches!(run_sweep(&spec, &[], &[0.0], 1.0, &p, &o), Err(Error::Precondition(_))));
        assert!(matches!(run_sweep(&spec, &[5.0], &[], 1.0, &p, &o), Err(Error::Precondition(_))));
    }

    #[test]
    fn small_sweep_consistent() {
        let spec = DomainSpec::new(Shape::Rectangle { width: 40.0, height: 20.0 }, 10.0, 0.01, 4.0);
        let p = FlowParams::new(1e-3, 0.0, 1.0).unwrap();
        let opts = SweepOptions { threads: 2, ..Default::default() };
        let t = run_sweep(&spec, &[5.0, 10.0], &[1e-15, 1e-3], 100.0, &p, &opts).unwrap();
        assert!(t.failures.is_empty());
        for (qr, jr) in t.q.iter().zip(&t.j) {
            for (q, j) in qr.iter().zip(jr) {
                assert!((j * t.meta.pdd_star - q).abs() <= 1e-9 * q);
                assert!(*j > t.meta.j_star);
            }
        }
        let again = run_sweep(&spec, &[5.0, 10.0], &[1e-15, 1e-3], 100.0, &p, &SweepOptions::default()).unwrap();
        assert_eq!(t.j, again.j);
    }
}
