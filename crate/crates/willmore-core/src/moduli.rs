//! Conformal moduli of genus-1 surfaces: tree–cotree homology basis,
//! harmonic 1-forms in the uniformized flat metric, lattice extraction and
//! reduction to the fundamental domain, systole, and the degeneration sweep.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, round, sqrt};

use crate::curvature::curvature_bundle;
use crate::error::Error;
use crate::mesh::TriMesh;
use crate::sparse::conjugate_gradient;
use crate::uniformize::{
    class_membership, cotan_laplacian, intrinsic_geometry, omega_constant, solve_liouville,
    UniformizationResult,
};

/// Max uniformization residual accepted by the modulus computation.
pub const MAX_UNIFORMIZATION_RESIDUAL: f64 = 1e-6;

/// A homology cycle as signed edge traversals: (edge id, +1 when traversed
/// lo→hi).
pub type Cycle = Vec<(usize, i8)>;

/// Two independent non-separating cycles plus the integer period matrix of
/// their companion cocycle basis: `pairing[i][j] = ∮_{cycle i} cocycle j`,
/// unimodular by construction, which certifies that the cycles form a
/// homology basis (intersection number ±1 on the torus).
#[derive(Debug, Clone)]
pub struct HomologyBasis {
    pub cycles: [Cycle; 2],
    /// Dual-graph cocycles: per edge, the signed crossing count.
    pub cocycles: [Vec<f64>; 2],
    pub pairing: [[i64; 2]; 2],
}

pub fn homology_basis(mesh: &TriMesh) -> Result<HomologyBasis, Error> {
    if mesh.genus() != 1 {
        return Err(Error::GenusMismatch {
            expected: 1,
            got: mesh.genus(),
        });
    }
    let nv = mesh.vertex_count();
    let nf = mesh.face_count();
    let ne = mesh.edge_count();
    let edges = mesh.edges();

    // vertex adjacency by edge
    let mut vadj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv]; // (neighbor, edge)
    for (e, &(a, b)) in edges.iter().enumerate() {
        vadj[a].push((b, e));
        vadj[b].push((a, e));
    }

    // primal spanning tree (BFS from vertex 0)
    let mut in_tree = vec![false; ne];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nv]; // (parent vertex, edge)
    let mut seen = vec![false; nv];
    let mut queue = alloc::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0usize);
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &vadj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, e));
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }

    // dual spanning tree (cotree) over edges not in the primal tree
    let mut in_cotree = vec![false; ne];
    let mut fparent: Vec<Option<(usize, usize)>> = vec![None; nf];
    let mut fseen = vec![false; nf];
    let mut fqueue = alloc::collections::VecDeque::new();
    fseen[0] = true;
    fqueue.push_back(0usize);
    while let Some(f) = fqueue.pop_front() {
        let fe = mesh.face_edges()[f];
        for k in 0..3 {
            let e = fe[k];
            if in_tree[e] {
                continue;
            }
            let g = mesh.face_neighbors()[f][k];
            if !fseen[g] {
                fseen[g] = true;
                fparent[g] = Some((f, e));
                in_cotree[e] = true;
                fqueue.push_back(g);
            }
        }
    }

    let leftover: Vec<usize> = (0..ne)
        .filter(|&e| !in_tree[e] && !in_cotree[e])
        .collect();
    if leftover.len() != 2 {
        return Err(Error::GenusMismatch {
            expected: 1,
            got: mesh.genus(),
        });
    }

    // cycle of a chord (u, v): traverse u→v, then the tree path v→u
    let tree_path_to_root = |mut v: usize| -> Vec<(usize, i8)> {
        let mut path = Vec::new();
        while let Some((p, e)) = parent[v] {
            // traverse v→p
            let sign = if edges[e].0 == v { 1 } else { -1 };
            path.push((e, sign));
            v = p;
        }
        path
    };
    let make_cycle = |chord: usize| -> Cycle {
        let (u, v) = edges[chord];
        let mut c: Cycle = Vec::new();
        c.push((chord, 1)); // u→v
        let pv = tree_path_to_root(v);
        let pu = tree_path_to_root(u);
        // strip the common tail (path above the least common ancestor)
        let mut i = pv.len();
        let mut j = pu.len();
        while i > 0 && j > 0 && pv[i - 1].0 == pu[j - 1].0 {
            i -= 1;
            j -= 1;
        }
        c.extend_from_slice(&pv[..i]); // v → lca
        for &(e, s) in pu[..j].iter().rev() {
            c.push((e, -s)); // lca → u
        }
        c
    };

    // cocycle of a chord: the fundamental dual cycle w.r.t. the cotree,
    // recorded as signed crossings per primal edge. Crossing the directed
    // dual step f→g over primal edge e counts +1 when f is the face that
    // traverses e in the lo→hi direction.
    let left_face_of = |e: usize| mesh.edge_faces()[e][1]; // fwd-direction face
    let dual_path_to_root = |mut f: usize, w: &mut [f64], sign: f64| {
        while let Some((p, e)) = fparent[f] {
            // dual step f→p over primal edge e
            let s = if left_face_of(e) == f { sign } else { -sign };
            w[e] += s;
            f = p;
        }
    };
    let make_cocycle = |chord: usize| -> Vec<f64> {
        let mut w = vec![0.0f64; ne];
        let [f0, f1] = mesh.edge_faces()[chord];
        // dual cycle: f1 → chord crossing → f0 → cotree path back to f1
        let s = if left_face_of(chord) == f1 { 1.0 } else { -1.0 };
        w[chord] += s;
        dual_path_to_root(f0, &mut w, 1.0);
        dual_path_to_root(f1, &mut w, -1.0);
        w
    };

    let cycles = [make_cycle(leftover[0]), make_cycle(leftover[1])];
    let cocycles = [make_cocycle(leftover[0]), make_cocycle(leftover[1])];

    let mut pairing = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for &(e, sg) in &cycles[i] {
                s += sg as f64 * cocycles[j][e];
            }
            pairing[i][j] = round(s) as i64;
            if fabs(s - pairing[i][j] as f64) > 1e-9 {
                return Err(Error::IllConditionedPeriods);
            }
        }
    }
    let det = pairing[0][0] * pairing[1][1] - pairing[0][1] * pairing[1][0];
    if det.abs() != 1 {
        return Err(Error::IllConditionedPeriods);
    }

    Ok(HomologyBasis {
        cycles,
        cocycles,
        pairing,
    })
}

/// Normalized lattice parameters of the flat structure: the flat torus is
/// R²/(Γ/√b) with Γ = Z + Z(a, b), 0 ≤ a ≤ 1/2, a² + b² ≥ 1.
#[derive(Debug, Clone)]
pub struct TorusModulus {
    pub a: f64,
    pub b: f64,
    /// Shortest closed geodesic at unit area: 1/√b.
    pub systole: f64,
    /// Raw complex periods of the holomorphic form, rows = cycles,
    /// columns = (re, im), before lattice reduction.
    pub period_matrix: [[f64; 2]; 2],
}

pub fn torus_modulus(
    mesh: &TriMesh,
    uniformization: &UniformizationResult,
) -> Result<TorusModulus, Error> {
    if mesh.genus() != 1 {
        return Err(Error::GenusMismatch {
            expected: 1,
            got: mesh.genus(),
        });
    }
    if uniformization.residual_inf > MAX_UNIFORMIZATION_RESIDUAL {
        return Err(Error::UniformizationResidual(uniformization.residual_inf));
    }
    // flat metric g0 = e^{−2u} g via midpoint-scaled edge lengths
    let u = &uniformization.u;
    let lengths: Vec<f64> = mesh
        .edges()
        .iter()
        .zip(mesh.edge_lengths())
        .map(|(&(i, j), l)| l * exp(-(u[i] + u[j]) / 2.0))
        .collect();
    let geo = intrinsic_geometry(mesh, &lengths)?;
    let lap = cotan_laplacian(mesh, &geo);

    let basis = homology_basis(mesh)?;

    // edge weights of the 1-form inner product
    let ne = mesh.edge_count();
    let mut w = vec![0.0f64; ne];
    for (fi, _) in mesh.faces().iter().enumerate() {
        let fe = mesh.face_edges()[fi];
        for k in 0..3 {
            // edge slot k is (f[k], f[k+1]), opposite corner k+2
            w[fe[k]] += 0.5 * geo.cot[fi][(k + 2) % 3];
        }
    }

    // harmonic representatives h = ω − dα, L α = δω
    let nv = mesh.vertex_count();
    let mut harmonic = [vec![0.0f64; ne], vec![0.0f64; ne]];
    for j in 0..2 {
        let omega = &basis.cocycles[j];
        let mut b = vec![0.0f64; nv];
        for (e, &(lo, hi)) in mesh.edges().iter().enumerate() {
            // δω at a vertex sums w_e ω over edges oriented into it
            b[hi] += w[e] * omega[e];
            b[lo] -= w[e] * omega[e];
        }
        let (alpha, _) = conjugate_gradient(&lap, &b, 1e-12, 200_000, true)?;
        for (e, &(lo, hi)) in mesh.edges().iter().enumerate() {
            harmonic[j][e] = omega[e] - (alpha[hi] - alpha[lo]);
        }
    }

    // Gram matrix of the harmonic span and the Hodge star of h₁ in it:
    // ⟨*h₁, h₁⟩ = 0 and ⟨*h₁, h₂⟩ = ∫ h₁ ∧ h₂, which by the bilinear
    // relations is the intersection-weighted period determinant.
    let inner = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = crate::geom::KahanSum::new();
        for e in 0..ne {
            s.add(w[e] * x[e] * y[e]);
        }
        s.value()
    };
    let m11 = inner(&harmonic[0], &harmonic[0]);
    let m12 = inner(&harmonic[0], &harmonic[1]);
    let m22 = inner(&harmonic[1], &harmonic[1]);
    let det_m = m11 * m22 - m12 * m12;
    if !(det_m > 0.0) {
        return Err(Error::IllConditionedPeriods);
    }

    // real periods of the harmonic forms over the homology cycles
    let period = |h: &[f64], c: &Cycle| -> f64 {
        let mut s = crate::geom::KahanSum::new();
        for &(e, sg) in c {
            s.add(sg as f64 * h[e]);
        }
        s.value()
    };
    let p = [
        [period(&harmonic[0], &basis.cycles[0]), period(&harmonic[1], &basis.cycles[0])],
        [period(&harmonic[0], &basis.cycles[1]), period(&harmonic[1], &basis.cycles[1])],
    ];
    let det_p = p[0][0] * p[1][1] - p[1][0] * p[0][1];
    if fabs(det_p) < 1e-9 {
        return Err(Error::IllConditionedPeriods);
    }
    let w12 = det_p; // ∫ h₁ ∧ h₂ up to the basis orientation sign

    // *h₁ = α h₁ + β h₂
    let alpha = (-m12 * w12) / det_m;
    let beta = (m11 * w12) / det_m;

    // holomorphic form h₁ + i *h₁; complex periods over the two cycles
    let pi1 = (p[0][0], alpha * p[0][0] + beta * p[0][1]);
    let pi2 = (p[1][0], alpha * p[1][0] + beta * p[1][1]);
    let period_matrix = [[pi1.0, pi1.1], [pi2.0, pi2.1]];

    // τ = π₂ / π₁
    let denom = pi1.0 * pi1.0 + pi1.1 * pi1.1;
    if denom < 1e-18 {
        return Err(Error::IllConditionedPeriods);
    }
    let mut re = (pi2.0 * pi1.0 + pi2.1 * pi1.1) / denom;
    let mut im = (pi2.1 * pi1.0 - pi2.0 * pi1.1) / denom;
    if im < 0.0 {
        // orientation of the basis; the conformal structure is τ ↦ −τ̄
        im = -im;
    }

    // Gauss reduction to the fundamental domain |Re| ≤ 1/2, |τ| ≥ 1
    for _ in 0..256 {
        re -= round(re);
        let n2 = re * re + im * im;
        if n2 >= 1.0 - 1e-12 {
            break;
        }
        // τ → −1/τ
        let (r, i) = (-re / n2, im / n2);
        re = r;
        im = i;
    }
    re -= round(re);
    let a = fabs(re); // mirror symmetry folds to 0 ≤ a ≤ 1/2
    let b = im;
    if !(b > 0.0) {
        return Err(Error::IllConditionedPeriods);
    }

    Ok(TorusModulus {
        a,
        b,
        systole: 1.0 / sqrt(b),
        period_matrix,
    })
}

pub fn systole_estimate(modulus: &TorusModulus) -> f64 {
    1.0 / sqrt(modulus.b)
}

/// One row of the degeneration sweep over a genus-1 family.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub mesh_id: String,
    pub willmore: f64,
    pub tracefree_energy: f64,
    pub member: bool,
    pub a: f64,
    pub b: f64,
    pub systole: f64,
    pub max_abs_u: f64,
}

/// Energies, class membership and moduli for each mesh of a genus-1 family.
pub fn compactness_sweep(
    family: &[(String, TriMesh)],
    n: usize,
    delta: f64,
    beta_table: &alloc::collections::BTreeMap<usize, f64>,
) -> Result<Vec<SweepRow>, Error> {
    let thresholds = omega_constant(n, 1, beta_table)?;
    let mut rows = Vec::with_capacity(family.len());
    for (id, mesh) in family {
        let bundle = curvature_bundle(mesh)?;
        let uni = solve_liouville(mesh)?;
        let modulus = torus_modulus(mesh, &uni)?;
        rows.push(SweepRow {
            mesh_id: id.clone(),
            willmore: bundle.willmore,
            tracefree_energy: bundle.tracefree_energy,
            member: class_membership(bundle.willmore, &thresholds, delta),
            a: modulus.a,
            b: modulus.b,
            systole: modulus.systole,
            max_abs_u: uni.max_abs_u,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, SurfaceSpec};

    #[test]
    fn homology_basis_certified_on_grid_and_clifford() {
        for spec in [
            SurfaceSpec::TorusOfRevolution {
                major: 2.0,
                minor: 0.7,
                res_u: 32,
                res_v: 24,
            },
            SurfaceSpec::CliffordR4 { res: 16 },
        ] {
            let m = generate(&spec).unwrap();
            let basis = homology_basis(&m).unwrap();
            let det = basis.pairing[0][0] * basis.pairing[1][1]
                - basis.pairing[0][1] * basis.pairing[1][0];
            assert_eq!(det.abs(), 1, "pairing {:?}", basis.pairing);
            // each cycle is closed: boundary vertices cancel
            for c in &basis.cycles {
                let mut bd = alloc::collections::BTreeMap::new();
                for &(e, s) in c {
                    let (lo, hi) = m.edges()[e];
                    *bd.entry(lo).or_insert(0i64) -= s as i64;
                    *bd.entry(hi).or_insert(0i64) += s as i64;
                }
                assert!(bd.values().all(|&v| v == 0));
            }
        }
    }

    #[test]
    fn genus_zero_rejected() {
        let m = crate::generate::icosphere(2, 1.0).unwrap();
        assert!(matches!(
            homology_basis(&m),
            Err(Error::GenusMismatch { .. })
        ));
    }

    #[test]
    fn clifford_torus_is_square() {
        let m = generate(&SurfaceSpec::CliffordR4 { res: 24 }).unwrap();
        let uni = solve_liouville(&m).unwrap();
        let modulus = torus_modulus(&m, &uni).unwrap();
        assert!(modulus.a.abs() <= 1e-3, "a = {}", modulus.a);
        assert!((modulus.b - 1.0).abs() <= 1e-3, "b = {}", modulus.b);
        assert!((systole_estimate(&modulus) - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn revolution_tori_match_conformal_ratio_oracle() {
        // conformal class of the (R, r) torus: τ = i·r/√(R²−r²)
        for (major, minor, expect_b, tol) in [
            (1.4142135623730951f64, 1.0f64, 1.0f64, 0.02f64),
            (2.0, 1.0, 3.0f64.sqrt(), 0.03),
        ] {
            let m = generate(&SurfaceSpec::TorusOfRevolution {
                major,
                minor,
                res_u: 64,
                res_v: 48,
            })
            .unwrap();
            let uni = solve_liouville(&m).unwrap();
            let modulus = torus_modulus(&m, &uni).unwrap();
            assert!(
                (modulus.b - expect_b).abs() <= tol,
                "R={major}: b = {}, expected {expect_b}",
                modulus.b
            );
            assert!(modulus.a.abs() <= 0.02, "a = {}", modulus.a);
        }
    }

    #[test]
    fn modulus_invariant_under_similarity() {
        let m = generate(&SurfaceSpec::TorusOfRevolution {
            major: 2.0,
            minor: 1.0,
            res_u: 32,
            res_v: 24,
        })
        .unwrap();
        let uni = solve_liouville(&m).unwrap();
        let b0 = torus_modulus(&m, &uni).unwrap();
        let moved: alloc::vec::Vec<[f64; 4]> = m
            .positions()
            .iter()
            .map(|p| {
                let c = 0.6f64.cos();
                let s = 0.6f64.sin();
                [
                    2.5 * (p[0] * c - p[1] * s) + 1.0,
                    2.5 * (p[0] * s + p[1] * c) - 2.0,
                    2.5 * p[2] + 0.5,
                    0.0,
                ]
            })
            .collect();
        let m2 = m.with_positions(moved).unwrap();
        let uni2 = solve_liouville(&m2).unwrap();
        let b1 = torus_modulus(&m2, &uni2).unwrap();
        assert!((b0.a - b1.a).abs() < 1e-6);
        assert!((b0.b - b1.b).abs() < 1e-6);
    }
}
