//! Manufactured-solution oracle for the Liouville solver: scale the edge
//! lengths of a flat square torus by a known conformal factor e^v and check
//! that the solver recovers v up to a constant, at second order in the mesh
//! size.

use willmore_core::generate::{generate, SurfaceSpec};
use willmore_core::uniformize::{bilipschitz_report, solve_liouville_lengths};

/// Grid coordinates (s, t) of a vertex on the flat torus in S³,
/// position = (cos s, sin s, cos t, sin t)/√2.
fn grid_coords(p: [f64; 4]) -> (f64, f64) {
    (p[1].atan2(p[0]), p[3].atan2(p[2]))
}

fn manufactured_error(res: usize) -> (f64, f64) {
    let m = generate(&SurfaceSpec::CliffordR4 { res }).unwrap();
    let v: Vec<f64> = m
        .positions()
        .iter()
        .map(|&p| {
            let (s, t) = grid_coords(p);
            0.3 * s.cos() * t.cos()
        })
        .collect();
    // conformally scaled metric: edge midpoints carry e^{(v_i+v_j)/2}
    let lengths: Vec<f64> = m
        .edges()
        .iter()
        .zip(m.edge_lengths())
        .map(|(&(i, j), l)| l * ((v[i] + v[j]) / 2.0).exp())
        .collect();
    let r = solve_liouville_lengths(&m, &lengths).unwrap();
    // recovered u matches v up to an additive constant
    let n = m.vertex_count() as f64;
    let u_mean = r.u.iter().sum::<f64>() / n;
    let v_mean = v.iter().sum::<f64>() / n;
    let linf = r
        .u
        .iter()
        .zip(&v)
        .map(|(u, vv)| ((u - u_mean) - (vv - v_mean)).abs())
        .fold(0.0f64, f64::max);
    let (max_abs_u, _) = bilipschitz_report(&r);
    (linf, max_abs_u)
}

#[test]
fn manufactured_solution_accuracy_and_order() {
    let (e32, _) = manufactured_error(32);
    let (e64, _) = manufactured_error(64);
    let (e128, max_abs_u) = manufactured_error(128);
    assert!(e128 <= 1e-2, "L-inf error at 128 = {e128}");
    let order = (e32 / e128).ln() / 4.0f64.ln();
    assert!(order >= 1.9, "order {order}, errors {e32} {e64} {e128}");
    // equal-area normalization shifts v by c = −½ ln⟨e^{2v}⟩ (area average
    // over the flat square), so max|u| = 0.3 − c, slightly above 0.3
    let n = 512;
    let mut mean = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (
                2.0 * std::f64::consts::PI * i as f64 / n as f64,
                2.0 * std::f64::consts::PI * j as f64 / n as f64,
            );
            mean += (2.0 * 0.3 * s.cos() * t.cos()).exp();
        }
    }
    mean /= (n * n) as f64;
    let expected = 0.3 + 0.5 * mean.ln();
    assert!(
        (max_abs_u - expected).abs() / expected < 0.01,
        "max|u| = {max_abs_u}, expected {expected}"
    );
}
