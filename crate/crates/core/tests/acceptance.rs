//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p fracflow-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracflow::assembly::{assemble_a, assemble_b_in, Flavor, ScalarField, SlabForm};
use fracflow::config::{example, Command, RunSpec};
use fracflow::mesh::{build_fracture_slab_mesh, build_reservoir_mesh, DomainSpec, Shape};
use fracflow::output::sweep_csv;
use fracflow::physics::{g_aux, mobility, monotonicity_gap, FlowParams};
use fracflow::pipeline::{execute, run_validation};
use fracflow::setpoint::{baseline_pdd, SetpointOptions, SetpointSolver};
use fracflow::solver::{solve_linear, solve_pss, solve_slab_form, PicardOptions};
use fracflow::sweep::{run_sweep, trend_check, SweepOptions};
use fracflow::validator::{l2_error, l2_norm};

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

fn kernel_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for k in 0..10_000 {
        let alpha = log_uniform(&mut rng, 1e-3, 1e3);
        // exact zeros are part of the admissible range
        let beta = if k % 50 == 0 { 0.0 } else { rng.gen_range(0.0..=1e3) };
        let zeta = if k % 37 == 0 { 0.0 } else { log_uniform(&mut rng, 1e-12, 1e9) };
        let f = mobility(alpha, beta, zeta);
        let r = (beta * zeta * f * f + alpha * f - 1.0).abs() / (1.0 + alpha * f);
        worst = worst.max(r);
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max scaled residual {worst:.2e} (tol 1e-12)"),
    }
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    for _ in 0..100_000 {
        let p = FlowParams::new(log_uniform(&mut rng, 1e-3, 1e3), rng.gen_range(0.0..=1e3), 1.0).unwrap();
        let scale = log_uniform(&mut rng, 1e-3, 1e6);
        let a = rng.gen_range(-scale..=scale);
        let b = rng.gen_range(-scale..=scale);
        let bound = 1e-12 * 1f64.max(a.abs()).max(b.abs());
        worst = worst.min(monotonicity_gap(a, b, &p) / bound);
    }
    Outcome {
        pass: worst >= -1.0,
        detail: format!("min gap / (1e-12 max(1,|a|,|b|)) = {worst:.3e}"),
    }
}

fn g_aux_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let root = |u: f64| (0.5 * u.abs()).sqrt().copysign(u);
    let mut ineq_worst = f64::INFINITY;
    for _ in 0..100_000 {
        let big = log_uniform(&mut rng, 24.0, 1e6) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let other = rng.gen_range(-big.abs()..=big.abs());
        let (u, v) = if rng.gen_bool(0.5) { (big, other) } else { (other, big) };
        let lhs = (g_aux(u) - g_aux(v)).powi(2);
        let rhs = (root(u) - root(v)).powi(2);
        // relative slack of a few ulps for the squared differences
        ineq_worst = ineq_worst.min(lhs - rhs * (1.0 - 1e-12));
    }
    let mut lip_worst = 0.0_f64;
    for _ in 0..100_000 {
        let s = log_uniform(&mut rng, 1e-6, 1e6);
        let u = rng.gen_range(-s..=s);
        let v = rng.gen_range(-s..=s);
        if u != v {
            lip_worst = lip_worst.max((g_aux(u) - g_aux(v)).abs() / (u - v).abs());
        }
    }
    Outcome {
        pass: ineq_worst >= 0.0 && lip_worst <= 0.5 * (1.0 + 1e-12),
        detail: format!("min(lhs-rhs) {ineq_worst:.3e}, max Lipschitz ratio {lip_worst:.12}"),
    }
}

fn darcy_limit() -> Outcome {
    let spec = DomainSpec::new(Shape::Rectangle { width: 64.0, height: 64.0 }, 16.0, 0.1, 1.0).uniform();
    let m = build_reservoir_mesh(&spec).unwrap();
    let p = FlowParams::new(1.0, 0.0, 1.0).unwrap();
    let q = 1.0;
    let mut sys = assemble_a(&m, &p).unwrap();
    sys.rhs = assemble_b_in(&m).iter().map(|b| -b * q).collect();
    let linear = solve_linear(&sys, 1e-13).unwrap();
    let rel = |w: &ScalarField| {
        let diff = ScalarField {
            values: w.values.iter().zip(&linear.values).map(|(a, b)| a - b).collect(),
        };
        l2_norm(&m, &diff).unwrap() / l2_norm(&m, &linear).unwrap()
    };
    let (w0, r0) = solve_pss(&m, &p, q, 1e-12).unwrap();
    let (w1, _) = solve_pss(&m, &p.with_beta(1e-15), q, 1e-12).unwrap();
    let (e0, e1) = (rel(&w0), rel(&w1));
    Outcome {
        pass: e0 <= 1e-12 && e1 <= 1e-6,
        detail: format!(
            "{} nodes; beta=0 rel L2 {e0:.2e} (Picard iterations {}), beta=1e-15 rel L2 {e1:.2e}",
            m.num_nodes(),
            r0.iterations
        ),
    }
}

fn manufactured() -> Outcome {
    let (length, h, c) = (1.0, 0.5, 1.0);
    let (alpha, beta) = (1.0, 1.0);
    let p = FlowParams::new(alpha, beta, 1.0).unwrap();
    // flux u = c (L - x) from a uniform sink -c, no flux through the faces
    let exact = move |x: f64, _y: f64| {
        -(alpha * c * (length * x - 0.5 * x * x) + beta * c * c * (length.powi(3) - (length - x).powi(3)) / 3.0)
    };
    let zero = |_x: f64| 0.0;
    let mut errors = Vec::new();
    for nx in [4, 8, 16, 32, 64] {
        let m = build_fracture_slab_mesh(length, h, nx, nx / 2).unwrap();
        let (w, _) = solve_slab_form(
            &m,
            &p,
            Flavor::Isotropic,
            SlabForm::Full,
            &zero,
            &zero,
            -c,
            &PicardOptions::with_tol(1e-12),
        )
        .unwrap();
        errors.push(l2_error(&m, &w, &exact).unwrap());
    }
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: min >= 1.8,
        detail: format!(
            "L2 errors {:?}, orders {:?}",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn baseline_linearity() -> Outcome {
    let spec = example(Command::Inverse).domain.unwrap();
    let m = build_reservoir_mesh(&spec).unwrap();
    let p = FlowParams::new(1e-3, 1e-3, 1.0).unwrap();
    let mut worst = 0.0_f64;
    let mut j_ref = None;
    let mut j_worst = 0.0_f64;
    for q in [0.1, 1.0, 10.0, 1000.0] {
        let a = baseline_pdd(&m, &p, q).unwrap();
        let b = baseline_pdd(&m, &p, 2.0 * q).unwrap();
        worst = worst.max((b - 2.0 * a).abs() / (2.0 * a).abs());
        let j = q / a;
        let r = *j_ref.get_or_insert(j);
        j_worst = j_worst.max((j - r).abs() / r);
    }
    Outcome {
        pass: worst <= 1e-9 && j_worst <= 1e-9,
        detail: format!("PDD(2Q)/2PDD(Q) rel {worst:.2e}, J* spread {j_worst:.2e}"),
    }
}

fn setpoint_spec() -> RunSpec {
    example(Command::Inverse)
}

fn setpoint() -> Outcome {
    let spec = setpoint_spec();
    let m = build_reservoir_mesh(spec.domain().unwrap()).unwrap();
    let p = spec.flow_params().unwrap();
    let target = baseline_pdd(&m, &p, spec.inverse.q_baseline).unwrap();
    let opts = SetpointOptions::default();
    let s = SetpointSolver::new(&m, p).unwrap();
    let r = s.solve(target, &opts).unwrap();
    let err = (r.pdd - target).abs() / target;
    let r0 = s.with_beta(0.0).unwrap().solve(target, &opts).unwrap();
    Outcome {
        pass: err <= 1e-6 && r.outer_iterations <= 30 && r0.outer_iterations == 1,
        detail: format!(
            "beta={}: rel error {err:.2e} after {} outer iterations; beta=0: {} outer iterations",
            p.beta, r.outer_iterations, r0.outer_iterations
        ),
    }
}

fn sweep_spec() -> RunSpec {
    example(Command::Sweep)
}

fn trend() -> Outcome {
    let spec = sweep_spec();
    let w = &spec.sweep;
    let opts = SweepOptions {
        threads: 4,
        setpoint: spec.solver.setpoint(),
    };
    let t = match run_sweep(spec.domain().unwrap(), &w.l_values, &w.beta_values, w.q_baseline, &spec.flow_params().unwrap(), &opts) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("sweep failed: {e}"),
            }
        }
    };
    let d = match trend_check(&t) {
        Ok(d) => d,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("trend check error: {e}"),
            }
        }
    };
    let body: Vec<String> = sweep_csv(&t).lines().filter(|l| !l.starts_with('#')).map(String::from).collect();
    for l in &body {
        println!("    {l}");
    }
    Outcome {
        pass: d.passed() && d.above_baseline,
        detail: format!(
            "J*={:.5}; increasing in L {}, decreasing in beta {}, saturation ratio {:.3} -> {:.3}, all above J* {}",
            t.meta.j_star,
            d.increasing_in_l,
            d.decreasing_in_beta,
            d.saturation_ratio_small_beta,
            d.saturation_ratio_large_beta,
            d.above_baseline
        ),
    }
}

fn validate_spec() -> RunSpec {
    example(Command::Validate)
}

fn anisotropic_gate() -> Outcome {
    let v = run_validation(&validate_spec(), 0).unwrap();
    let a = &v.anisotropic;
    let bound = a.iter().all(|r| r.lhs <= r.rhs);
    let shrink = a.last().unwrap().lhs <= 1.1 * a[0].lhs;
    let grows = a.windows(2).all(|w| w[1].norm_wx_full > w[0].norm_wx_full);
    let rows: Vec<String> = a
        .iter()
        .map(|r| format!("h={} lhs={:.3e} rhs={:.3e} |Wx|={:.3}", r.h, r.lhs, r.rhs, r.norm_wx_full))
        .collect();
    Outcome {
        pass: bound && shrink && grows,
        detail: format!("{}; bound {bound}, lhs(0.05)<=1.1 lhs(0.2) {shrink}, |Wx| growing {grows}", rows.join("; ")),
    }
}

fn isotropic_stability() -> Outcome {
    let v = run_validation(&validate_spec(), 0).unwrap();
    let (s, r) = (v.scaling_spread(), v.refinement_spread());
    let cs: Vec<String> = v.isotropic.iter().map(|r| format!("{:.4}", r.empirical_c)).collect();
    Outcome {
        pass: s < 4.0 && r < 2.0,
        detail: format!("C over s=1,2,4: [{}], scaling spread {s:.3} (<4), refinement spread {r:.3} (<2)", cs.join(", ")),
    }
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    let mut count = 0;
    for spec in [setpoint_spec(), sweep_spec(), validate_spec()] {
        let a = execute(&spec, 4).unwrap();
        let b = execute(&spec, 4).unwrap();
        for (x, y) in a.artifacts.iter().zip(&b.artifacts) {
            if x.name.ends_with(".csv") {
                count += 1;
                if x.contents != y.contents {
                    differing.push(x.name.clone());
                }
            }
        }
        if a.artifacts.len() != b.artifacts.len() {
            differing.push("artifact list".into());
        }
    }
    Outcome {
        pass: differing.is_empty() && count == 3,
        detail: format!("{count} CSV files compared, differing: {differing:?}"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 kernel identity", kernel_identity, Duration::from_secs(1)),
        ("2 monotonicity gap", monotonicity, Duration::from_secs(1)),
        ("3 g_aux bounds", g_aux_bounds, Duration::from_secs(1)),
        ("4 Darcy limit", darcy_limit, Duration::from_secs(5)),
        ("5 manufactured solution", manufactured, Duration::from_secs(10)),
        ("6 baseline linearity", baseline_linearity, Duration::from_secs(5)),
        ("7 set-point convergence", setpoint, Duration::from_secs(30)),
        ("8 sweep trends", trend, Duration::from_secs(300)),
        ("9 anisotropic gate", anisotropic_gate, Duration::from_secs(120)),
        ("10 isotropic stability", isotropic_stability, Duration::from_secs(120)),
        ("11 determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if budget == Duration::MAX {
            String::new()
        } else {
            format!(" / {:.0}s", budget.as_secs_f64())
        };
        println!(
            "{} criterion {name}: {} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
