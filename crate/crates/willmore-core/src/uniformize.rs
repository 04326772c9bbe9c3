//! Conformal uniformization to constant curvature: solve the discrete
//! Liouville equation for the log conformal factor u with g₀ = e^{−2u} g,
//! normalized to equal areas. Also evaluates the genus-dependent energy
//! thresholds β̃ and ω used for class membership.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log, sqrt};

use crate::error::Error;
use crate::mesh::TriMesh;
use crate::sparse::{conjugate_gradient, CsrMatrix};

const PI: f64 = core::f64::consts::PI;

/// Residual target for the Liouville solves (∞-norm, integrated form).
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative conjugate-gradient tolerance.
pub const CG_REL_TOL: f64 = 1e-12;
/// Equal-area normalization tolerance.
pub const AREA_TOL: f64 = 1e-8;

/// Intrinsic quantities of a mesh metric given by per-edge lengths.
/// Positions never enter; this is what makes manufactured metrics and the
/// uniformized flat metric g₀ usable downstream.
#[derive(Debug, Clone)]
pub struct IntrinsicGeometry {
    /// Cotangent of the interior angle at corner k of each face.
    pub cot: Vec<[f64; 3]>,
    /// Interior angle at corner k of each face.
    pub angle: Vec<[f64; 3]>,
    pub face_area: Vec<f64>,
    /// Mixed Voronoi vertex areas (obtuse-safe).
    pub vertex_area: Vec<f64>,
    /// Angle defect 2π − Σ angles per vertex.
    pub defect: Vec<f64>,
    pub total_area: f64,
}

pub fn intrinsic_geometry(mesh: &TriMesh, lengths: &[f64]) -> Result<IntrinsicGeometry, Error> {
    assert_eq!(lengths.len(), mesh.edge_count());
    let nf = mesh.face_count();
    let nv = mesh.vertex_count();
    let mut cot = Vec::with_capacity(nf);
    let mut angle = Vec::with_capacity(nf);
    let mut face_area = Vec::with_capacity(nf);
    let mut vertex_area = vec![0.0f64; nv];
    let mut angle_sum = vec![0.0f64; nv];

    for (fi, f) in mesh.faces().iter().enumerate() {
        let fe = mesh.face_edges()[fi];
        // side opposite corner k is the edge (f[k+1], f[k+2]) = slot k+1
        let opp = [lengths[fe[1]], lengths[fe[2]], lengths[fe[0]]];
        // Kahan's stable Heron form on sorted sides
        let mut s = opp;
        s.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
        let (a, b, c) = (s[0], s[1], s[2]);
        let t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
        if !(t > 0.0) {
            return Err(Error::MeshQuality { face: fi });
        }
        let area = 0.25 * sqrt(t);

        let mut fc = [0.0f64; 3];
        let mut fa = [0.0f64; 3];
        for k in 0..3 {
            let (oa, ob, oc) = (opp[k], opp[(k + 1) % 3], opp[(k + 2) % 3]);
            let num = ob * ob + oc * oc - oa * oa;
            fc[k] = num / (4.0 * area);
            fa[k] = libm::atan2(4.0 * area, num);
            if !(fabs(fc[k]) <= crate::curvature::COTAN_LIMIT) {
                return Err(Error::MeshQuality { face: fi });
            }
        }
        for k in 0..3 {
            angle_sum[f[k]] += fa[k];
        }
        // mixed Voronoi, same convention as the embedded path
        match (0..3).find(|&k| fc[k] < 0.0) {
            Some(ko) => {
                for k in 0..3 {
                    vertex_area[f[k]] += if k == ko { area / 2.0 } else { area / 4.0 };
                }
            }
            None => {
                for k in 0..3 {
                    let lj = opp[(k + 2) % 3]; // edge (f[k], f[k+1])
                    let lk = opp[(k + 1) % 3]; // edge (f[k+2], f[k])
                    vertex_area[f[k]] +=
                        (lj * lj * fc[(k + 2) % 3] + lk * lk * fc[(k + 1) % 3]) / 8.0;
                }
            }
        }
        cot.push(fc);
        angle.push(fa);
        face_area.push(area);
    }

    let defect: Vec<f64> = angle_sum.iter().map(|s| 2.0 * PI - s).collect();
    let total_area = crate::geom::ksum(face_area.iter().copied());
    Ok(IntrinsicGeometry {
        cot,
        angle,
        face_area,
        vertex_area,
        defect,
        total_area,
    })
}

/// Cotangent Laplacian (positive semidefinite) from intrinsic geometry.
pub fn cotan_laplacian(mesh: &TriMesh, geo: &IntrinsicGeometry) -> CsrMatrix {
    let nv = mesh.vertex_count();
    let mut t = Vec::with_capacity(12 * mesh.face_count());
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            // edge (f[k+1], f[k+2]) opposite corner k
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * geo.cot[fi][k];
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        }
    }
    CsrMatrix::from_triplets(nv, t)
}

/// Output of the Liouville solve: u with g₀ = e^{−2u} g flat (genus 1) or
/// hyperbolic (genus ≥ 2), equal-area normalized.
#[derive(Debug, Clone)]
pub struct UniformizationResult {
    pub u: Vec<f64>,
    /// Constant curvature of g₀ = 2πχ / area.
    pub k_g0: f64,
    /// ∞-norm of the integrated equation residual.
    pub residual_inf: f64,
    pub osc_u: f64,
    pub max_abs_u: f64,
    pub area_g: f64,
    pub area_g0: f64,
}

pub fn solve_liouville(mesh: &TriMesh) -> Result<UniformizationResult, Error> {
    solve_liouville_lengths(mesh, &mesh.edge_lengths())
}

/// Liouville solve on an arbitrary intrinsic metric given by edge lengths.
pub fn solve_liouville_lengths(
    mesh: &TriMesh,
    lengths: &[f64],
) -> Result<UniformizationResult, Error> {
    let p = mesh.genus();
    if p < 1 {
        return Err(Error::GenusMismatch { expected: 1, got: p });
    }
    let geo = intrinsic_geometry(mesh, lengths)?;
    let lap = cotan_laplacian(mesh, &geo);
    let nv = mesh.vertex_count();
    let area_g = geo.total_area;
    let chi = mesh.euler_characteristic() as f64;

    let mut u;
    let mut kappa; // constant curvature of g0
    if p == 1 {
        // χ = 0: the equation is linear, L u = defect, consistent because
        // Σ defect = 2πχ = 0.
        let (sol, _) = conjugate_gradient(&lap, &geo.defect, CG_REL_TOL, 200_000, true)?;
        u = sol;
        kappa = 0.0;
    } else {
        // damped Newton on F(u) = L u + κ e^{−2u} a − defect, κ < 0
        kappa = 2.0 * PI * chi / area_g;
        u = vec![0.0; nv];
        let mut lu = vec![0.0; nv];
        let residual = |u: &[f64], lu: &mut [f64]| -> Vec<f64> {
            lap.matvec(u, lu);
            (0..nv)
                .map(|i| lu[i] + kappa * exp(-2.0 * u[i]) * geo.vertex_area[i] - geo.defect[i])
                .collect()
        };
        let inf = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(fabs(*x)));
        let mut f = residual(&u, &mut lu);
        let mut fnorm = inf(&f);
        let mut iterations = 0usize;
        while fnorm > RESIDUAL_TOL {
            iterations += 1;
            if iterations > 100 {
                return Err(Error::NewtonStagnation {
                    iterations,
                    residual: fnorm,
                });
            }
            // J = L + diag(−2κ e^{−2u} a), SPD since κ < 0
            let mut t = Vec::with_capacity(nv);
            for i in 0..nv {
                t.push((i, i, -2.0 * kappa * exp(-2.0 * u[i]) * geo.vertex_area[i]));
            }
            let jdiag = CsrMatrix::from_triplets(nv, t);
            let j = add_csr(&lap, &jdiag);
            let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
            let (du, _) = conjugate_gradient(&j, &neg_f, CG_REL_TOL, 200_000, false)?;
            // step halving
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = (0..nv).map(|i| u[i] + step * du[i]).collect();
                let ft = residual(&trial, &mut lu);
                let ftn = inf(&ft);
                if ftn < fnorm * (1.0 - 0.25 * step) || step < 1e-4 {
                    u = trial;
                    f = ft;
                    fnorm = ftn;
                    break;
                }
                step /= 2.0;
            }
        }
    }

    // equal-area constant: Σ e^{−2(u+c)} a = Σ a; rescale κ to stay on the
    // solved equation (exp(2c) absorbs into the constant curvature).
    let s = crate::geom::ksum((0..nv).map(|i| exp(-2.0 * u[i]) * geo.vertex_area[i]));
    let c = -0.5 * log(area_g / s);
    for ui in u.iter_mut() {
        *ui += c;
    }
    kappa *= exp(2.0 * c);

    let area_g0 = crate::geom::ksum((0..nv).map(|i| exp(-2.0 * u[i]) * geo.vertex_area[i]));
    let mut lu = vec![0.0; nv];
    lap.matvec(&u, &mut lu);
    let residual_inf = (0..nv)
        .map(|i| fabs(lu[i] + kappa * exp(-2.0 * u[i]) * geo.vertex_area[i] - geo.defect[i]))
        .fold(0.0f64, f64::max);

    let max_u = u.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let min_u = u.iter().fold(f64::INFINITY, |m, x| m.min(*x));

    Ok(UniformizationResult {
        u,
        k_g0: kappa,
        residual_inf,
        osc_u: max_u - min_u,
        max_abs_u: fabs(max_u).max(fabs(min_u)),
        area_g,
        area_g0,
    })
}

fn add_csr(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    // small helper: both symmetric, same n; rebuild from triplets
    let n = a.n();
    let mut t = Vec::new();
    for m in [a, b] {
        for (r, c, v) in m.iter() {
            t.push((r, c, v));
        }
    }
    CsrMatrix::from_triplets(n, t)
}

/// (max|u|, osc u) of an equal-area-normalized result.
pub fn bilipschitz_report(result: &UniformizationResult) -> (f64, f64) {
    (result.max_abs_u, result.osc_u)
}

/// Energy thresholds β̃ and ω for genus p in ambient dimension n, given an
/// assumed table of β values per genus (lower bounds make ω conservative).
#[derive(Debug, Clone)]
pub struct EnergyThresholds {
    pub n: usize,
    pub p: usize,
    pub beta_table: BTreeMap<usize, f64>,
    pub beta_tilde: f64,
    pub omega: f64,
}

pub fn omega_constant(
    n: usize,
    p: usize,
    beta_table: &BTreeMap<usize, f64>,
) -> Result<EnergyThresholds, Error> {
    assert!(n == 3 || n == 4);
    assert!(p >= 1);
    let beta_tilde = if p == 1 {
        f64::INFINITY
    } else {
        // min over partitions p = Σ p_i with 1 ≤ p_i < p of 4π + Σ(β_{p_i} − 4π)
        let mut best = f64::INFINITY;
        let mut parts: Vec<usize> = Vec::new();
        enumerate_partitions(p, p - 1, &mut parts, &mut |parts| {
            let mut s = 4.0 * PI;
            for &pi in parts {
                let beta = match beta_table.get(&pi) {
                    Some(b) => *b,
                    None => return Err(Error::MissingBeta { genus: pi }),
                };
                s += beta - 4.0 * PI;
            }
            if s < best {
                best = s;
            }
            Ok(())
        })?;
        best
    };
    let mut omega = (8.0 * PI).min(beta_tilde);
    if n == 4 {
        let beta_p = *beta_table
            .get(&p)
            .ok_or(Error::MissingBeta { genus: p })?;
        omega = omega.min(beta_p + 8.0 * PI / 3.0);
    }
    Ok(EnergyThresholds {
        n,
        p,
        beta_table: beta_table.clone(),
        beta_tilde,
        omega,
    })
}

fn enumerate_partitions<F: FnMut(&[usize]) -> Result<(), Error>>(
    remaining: usize,
    max_part: usize,
    parts: &mut Vec<usize>,
    visit: &mut F,
) -> Result<(), Error> {
    if remaining == 0 {
        return visit(parts);
    }
    for part in (1..=max_part.min(remaining)).rev() {
        parts.push(part);
        enumerate_partitions(remaining - part, part, parts, visit)?;
        parts.pop();
    }
    Ok(())
}

/// Theorem-style membership: W ≤ ω − δ.
pub fn class_membership(w: f64, thresholds: &EnergyThresholds, delta: f64) -> bool {
    assert!(delta > 0.0);
    w <= thresholds.omega - delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SurfaceSpec};

    #[test]
    fn flat_clifford_torus_gives_zero_u() {
        let m = generate(&SurfaceSpec::CliffordR4 { res: 24 }).unwrap();
        let r = solve_liouville(&m).unwrap();
        assert!(r.max_abs_u <= 1e-6, "max|u| = {}", r.max_abs_u);
        assert!(r.residual_inf <= RESIDUAL_TOL);
        assert!((r.area_g0 - r.area_g).abs() / r.area_g <= AREA_TOL);
    }

    #[test]
    fn revolution_torus_equal_area_and_sign() {
        let m = generate(&SurfaceSpec::TorusOfRevolution {
            major: 1.4142135623730951,
            minor: 1.0,
            res_u: 48,
            res_v: 32,
        })
        .unwrap();
        let r = solve_liouville(&m).unwrap();
        assert!(r.residual_inf <= RESIDUAL_TOL);
        assert!((r.area_g0 - r.area_g).abs() / r.area_g <= AREA_TOL);
        let min = r.u.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = r.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min <= 0.0 && 0.0 <= max);
        assert!(r.max_abs_u > 0.01, "revolution torus is not flat");
    }

    #[test]
    fn genus_two_newton_converges() {
        let m = generate(&SurfaceSpec::NeckedSpheres {
            genus: 2,
            gap: 0.2,
            neck_radius: 0.05,
            subdiv: 3,
        })
        .unwrap();
        assert_eq!(m.genus(), 2);
        let r = solve_liouville(&m).unwrap();
        assert!(r.residual_inf <= RESIDUAL_TOL, "res {}", r.residual_inf);
        assert!(r.k_g0 < 0.0);
        assert!((r.area_g0 - r.area_g).abs() / r.area_g <= AREA_TOL);
        let min = r.u.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = r.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min <= 0.0 && 0.0 <= max);
        // self-consistent constant curvature: κ = 2πχ / area_g0
        let chi = m.euler_characteristic() as f64;
        assert!((r.k_g0 - 2.0 * PI * chi / r.area_g0).abs() < 1e-8 * r.k_g0.abs());
    }

    #[test]
    fn scale_equivariance_of_normalized_u() {
        let m = generate(&SurfaceSpec::TorusOfRevolution {
            major: 2.0,
            minor: 1.0,
            res_u: 32,
            res_v: 24,
        })
        .unwrap();
        let r1 = solve_liouville(&m).unwrap();
        let lengths: Vec<f64> = m.edge_lengths().iter().map(|l| 3.7 * l).collect();
        let r2 = solve_liouville_lengths(&m, &lengths).unwrap();
        for i in 0..m.vertex_count() {
            assert!((r1.u[i] - r2.u[i]).abs() < 1e-8);
        }
        assert!((r1.osc_u - r2.osc_u).abs() < 1e-8);
    }

    #[test]
    fn omega_constants_match_genus_table() {
        let mut table = BTreeMap::new();
        table.insert(1usize, 2.0 * PI * PI);
        let t = omega_constant(3, 1, &table).unwrap();
        assert_eq!(t.beta_tilde, f64::INFINITY);
        assert!((t.omega - 8.0 * PI).abs() < 1e-14);

        let mut table4 = BTreeMap::new();
        table4.insert(1usize, 4.0 * PI); // lower bound
        let t = omega_constant(4, 1, &table4).unwrap();
        assert!((t.omega - 20.0 * PI / 3.0).abs() < 1e-12);

        // p = 2: the only partition is (1,1), so β̃ = 4π + 2(β₁ − 4π)
        let mut table2 = BTreeMap::new();
        table2.insert(1usize, 2.0 * PI * PI);
        let t = omega_constant(3, 2, &table2).unwrap();
        let expect = 4.0 * PI + 2.0 * (2.0 * PI * PI - 4.0 * PI);
        assert!((t.beta_tilde - expect).abs() < 1e-12);
        assert!((t.omega - (8.0 * PI).min(expect)).abs() < 1e-12);

        // p = 3: partitions (1,1,1) and (2,1); exhaustive-enumeration oracle
        let mut table3 = table2.clone();
        table3.insert(2usize, 26.0);
        let t = omega_constant(3, 3, &table3).unwrap();
        let b1 = 2.0 * PI * PI;
        let cand1 = 4.0 * PI + 3.0 * (b1 - 4.0 * PI);
        let cand2 = 4.0 * PI + (26.0 - 4.0 * PI) + (b1 - 4.0 * PI);
        assert!((t.beta_tilde - cand1.min(cand2)).abs() < 1e-12);

        let err = omega_constant(3, 3, &table2).unwrap_err();
        assert!(matches!(err, Error::MissingBeta { .. }));
    }

    #[test]
    fn membership_examples() {
        let mut table = BTreeMap::new();
        table.insert(1usize, 2.0 * PI * PI);
        let t = omega_constant(3, 1, &table).unwrap();
        assert!(class_membership(2.0 * PI * PI, &t, PI));
        assert!(!class_membership(8.0 * PI, &t, 0.001));
    }
}
