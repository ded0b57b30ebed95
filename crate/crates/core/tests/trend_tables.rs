use fracflow::sweep::{trend_check, SweepTable};

const L: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
const BETA: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

fn cylinder() -> SweepTable {
    let j = vec![
        vec![2.2345, 2.6668, 2.9045, 3.0218, 3.074],
        vec![1.8451, 1.9418, 1.9868, 1.9972, 1.9957],
        vec![1.4121, 1.4163, 1.4287, 1.4235, 1.4158],
        vec![1.1911, 1.1834, 1.1964, 1.1898, 1.182],
        vec![1.1524, 1.1451, 1.1627, 1.1566, 1.1483],
    ];
    SweepTable::from_capacities(L.to_vec(), BETA.to_vec(), j, 1.0121).unwrap()
}

fn rectangle() -> SweepTable {
    let j = vec![
        vec![2.1848, 2.7026, 2.9917, 3.1925, 3.2631],
        vec![1.8265, 1.9938, 2.0333, 2.0829, 2.0718],
        vec![1.4154, 1.5039, 1.4806, 1.5077, 1.4838],
        vec![1.2155, 1.3266, 1.2724, 1.3022, 1.2735],
        vec![1.2635, 1.3829, 1.2812, 1.3196, 1.284],
    ];
    SweepTable::from_capacities(L.to_vec(), BETA.to_vec(), j, 0.97664).unwrap()
}

#[test]
fn cylinder_table_passes() {
    let d = trend_check(&cylinder()).unwrap();
    assert!(d.increasing_in_l);
    assert!(d.decreasing_in_beta);
    assert!(d.saturating);
    assert!(d.above_baseline);
    assert!(d.passed());
    // (3.074 - 3.0218) / (2.6668 - 2.2345)
    assert!((d.saturation_ratio_small_beta - 0.120749).abs() < 1e-5, "{}", d.saturation_ratio_small_beta);
    assert!(d.saturation_ratio_large_beta < 0.0);
}

#[test]
fn rectangle_table_breaks_beta_monotonicity() {
    let d = trend_check(&rectangle()).unwrap();
    assert!(d.increasing_in_l);
    assert!(d.above_baseline);
    // the last row rises above the one before it at every length
    assert!(!d.decreasing_in_beta);
    assert!(!d.passed());
    assert!(!d.offenders.is_empty());
}

#[test]
fn saturation_needs_flattening() {
    let mut t = cylinder();
    // largest-beta row grows linearly in L (ratio 1), the others interpolate
    let first = t.j[0].clone();
    let last = t.j.len() - 1;
    let low = vec![1.0, 1.1, 1.2, 1.3, 1.4];
    t.j[last] = low.clone();
    for row in 1..last {
        for (k, v) in t.j[row].iter_mut().enumerate() {
            *v = low[k] + (first[k] - low[k]) * (last - row) as f64 / last as f64;
        }
    }
    let d = trend_check(&t).unwrap();
    assert!(d.decreasing_in_beta);
    assert!(!d.saturating);
    assert!((d.saturation_ratio_large_beta - 1.0).abs() < 1e-12);
}
