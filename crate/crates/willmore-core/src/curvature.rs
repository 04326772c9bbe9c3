//! Discrete curvature: cotangent mean curvature vectors, angle-defect Gauss
//! curvature, mixed Voronoi vertex areas, the Willmore and tracefree
//! energies, a per-face shape-operator fit used as an independent
//! cross-check, and extrinsic ball density reports.

use alloc::vec;
use alloc::vec::Vec;

use libm::fabs;

use crate::error::Error;
use crate::geom::{self, KahanSum, Vec4};
use crate::mesh::TriMesh;

const PI: f64 = core::f64::consts::PI;

/// Cotangent weight magnitude above which the mesh is rejected.
pub const COTAN_LIMIT: f64 = 1e8;

/// Per-vertex curvature quantities and per-mesh energies.
///
/// `a_sq` and `ao_sq` are defined through the Gauss equation from `h_vec`
/// and `gauss`; the per-face fit in [`face_shape_fit`] provides the
/// independent route.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    /// Mean curvature vector (trace convention: |H| = 2/R on a radius-R sphere).
    pub h_vec: Vec<Vec4>,
    /// Gauss curvature, angle defect divided by vertex area.
    pub gauss: Vec<f64>,
    /// Mixed Voronoi vertex area (obtuse-safe).
    pub area: Vec<f64>,
    /// |A|² = |H|² − 2K per vertex.
    pub a_sq: Vec<f64>,
    /// |A°|² = ½|H|² − 2K per vertex.
    pub ao_sq: Vec<f64>,
    /// W = ¼ Σ |H|² area.
    pub willmore: f64,
    /// E = Σ |A°|² area.
    pub tracefree_energy: f64,
    pub total_area: f64,
}

pub fn curvature_bundle(mesh: &TriMesh) -> Result<CurvatureBundle, Error> {
    let nv = mesh.vertex_count();
    let pos = mesh.positions();

    let mut lap = vec![geom::ZERO; nv]; // cotan Laplacian applied to positions
    let mut area = vec![0.0f64; nv];
    let mut angle_sum = vec![0.0f64; nv];

    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = [pos[f[0]], pos[f[1]], pos[f[2]]];
        let mut cot = [0.0f64; 3];
        let mut ang = [0.0f64; 3];
        for k in 0..3 {
            cot[k] = geom::cotangent(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            ang[k] = geom::triangle_angle(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            if !(fabs(cot[k]) <= COTAN_LIMIT) {
                return Err(Error::MeshQuality { face: fi });
            }
        }
        // Laplacian: the edge opposite corner k gets weight cot[k]/2.
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * cot[k];
            let d = geom::sub(p[(k + 1) % 3], p[(k + 2) % 3]);
            lap[i] = geom::axpy(w, d, lap[i]);
            lap[j] = geom::axpy(-w, d, lap[j]);
        }
        for k in 0..3 {
            angle_sum[f[k]] += ang[k];
        }
        // Mixed Voronoi area (Meyer et al.), obtuse-safe.
        let t_area = geom::triangle_area(p[0], p[1], p[2]);
        let obtuse = (0..3).find(|&k| cot[k] < 0.0);
        match obtuse {
            Some(ko) => {
                for k in 0..3 {
                    area[f[k]] += if k == ko { t_area / 2.0 } else { t_area / 4.0 };
                }
            }
            None => {
                for k in 0..3 {
                    // edges adjacent to corner k, against the opposite cotangents
                    let lj = geom::norm_sq(geom::sub(p[k], p[(k + 1) % 3]));
                    let lk = geom::norm_sq(geom::sub(p[k], p[(k + 2) % 3]));
                    area[f[k]] += (lj * cot[(k + 2) % 3] + lk * cot[(k + 1) % 3]) / 8.0;
                }
            }
        }
    }

    let mut h_vec = Vec::with_capacity(nv);
    let mut gauss = Vec::with_capacity(nv);
    let mut a_sq = Vec::with_capacity(nv);
    let mut ao_sq = Vec::with_capacity(nv);
    let mut w_acc = KahanSum::new();
    let mut e_acc = KahanSum::new();
    let mut area_acc = KahanSum::new();
    for i in 0..nv {
        let h = geom::scale(lap[i], 1.0 / area[i]);
        let defect = 2.0 * PI - angle_sum[i];
        let k = defect / area[i];
        let h2 = geom::norm_sq(h);
        h_vec.push(h);
        gauss.push(k);
        a_sq.push(h2 - 2.0 * k);
        ao_sq.push(0.5 * h2 - 2.0 * k);
        w_acc.add(0.25 * h2 * area[i]);
        e_acc.add((0.5 * h2 - 2.0 * k) * area[i]);
        area_acc.add(area[i]);
    }

    Ok(CurvatureBundle {
        h_vec,
        gauss,
        area,
        a_sq,
        ao_sq,
        willmore: w_acc.value(),
        tracefree_energy: e_acc.value(),
        total_area: area_acc.value(),
    })
}

/// Integrated Gauss curvature Σ K·area; equals 2πχ up to roundoff.
pub fn gauss_bonnet_total(bundle: &CurvatureBundle) -> f64 {
    geom::ksum(
        bundle
            .gauss
            .iter()
            .zip(&bundle.area)
            .map(|(k, a)| k * a),
    )
}

// ---------------------------------------------------------------------------
// Per-face shape operator fit (independent of the Gauss-equation route)
// ---------------------------------------------------------------------------

/// Second fundamental form of one face from a one-ring quadratic fit,
/// expressed in an oriented orthonormal frame (t₁, t₂, ν₁, ν₂) with
/// det[t₁ t₂ ν₁ ν₂] > 0. R³ meshes use ν₂ = e₄ with zero coefficients.
#[derive(Debug, Clone)]
pub struct FaceShape {
    pub tangent: [Vec4; 2],
    pub normal: [Vec4; 2],
    /// a[k] = [A₁₁, A₁₂, A₂₂] along normal k.
    pub a: [[f64; 3]; 2],
    /// |H|² of the fitted form.
    pub h_sq: f64,
    pub a_sq: f64,
    pub ao_sq: f64,
    /// Gauss curvature via the Gauss equation of the fitted form.
    pub k: f64,
    /// Normal curvature term R = 2⟨A°₁₁ ∧ A°₁₂, ν₁ ∧ ν₂⟩.
    pub r: f64,
}

/// Oriented orthonormal frame of face `fi`: two tangents and two normals.
pub fn face_frame(mesh: &TriMesh, fi: usize) -> ([Vec4; 2], [Vec4; 2]) {
    let [ia, ib, ic] = mesh.faces()[fi];
    let pos = mesh.positions();
    let t1 = geom::normalize(geom::sub(pos[ib], pos[ia]));
    let ac = geom::sub(pos[ic], pos[ia]);
    let t2 = geom::normalize(geom::axpy(-geom::dot(ac, t1), t1, ac));
    if mesh.ambient_dim() == 3 {
        let n1 = geom::normalize(geom::cross3(t1, t2));
        ([t1, t2], [n1, [0.0, 0.0, 0.0, 1.0]])
    } else {
        // complete (t1, t2) to an orthonormal basis of R⁴
        let mut normals: Vec<Vec4> = Vec::new();
        for k in 0..4 {
            let mut e = geom::ZERO;
            e[k] = 1.0;
            let mut v = e;
            v = geom::axpy(-geom::dot(v, t1), t1, v);
            v = geom::axpy(-geom::dot(v, t2), t2, v);
            for n in &normals {
                v = geom::axpy(-geom::dot(v, *n), *n, v);
            }
            let len = geom::norm(v);
            if len > 1e-6 {
                normals.push(geom::scale(v, 1.0 / len));
                if normals.len() == 2 {
                    break;
                }
            }
        }
        let (n1, mut n2) = (normals[0], normals[1]);
        if det4(t1, t2, n1, n2) < 0.0 {
            n2 = geom::scale(n2, -1.0);
        }
        ([t1, t2], [n1, n2])
    }
}

fn det4(a: Vec4, b: Vec4, c: Vec4, d: Vec4) -> f64 {
    let m = [a, b, c, d];
    let mut det = 0.0;
    // Laplace expansion along the first row of the column matrix
    for k in 0..4 {
        let mut sub = [[0.0; 3]; 3];
        let mut col = 0;
        for j in 0..4 {
            if j == k {
                continue;
            }
            for i in 0..3 {
                sub[col][i] = m[j][i + 1];
            }
            col += 1;
        }
        let minor = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
            - sub[1][0] * (sub[0][1] * sub[2][2] - sub[0][2] * sub[2][1])
            + sub[2][0] * (sub[0][1] * sub[1][2] - sub[0][2] * sub[1][1]);
        det += if k % 2 == 0 { 1.0 } else { -1.0 } * m[k][0] * minor;
    }
    det
}

/// Fit the second fundamental form on every face by least squares over the
/// one-ring vertex neighborhood in the face's own frame.
pub fn face_shape_fit(mesh: &TriMesh) -> Result<Vec<FaceShape>, Error> {
    let pos = mesh.positions();
    let mut out = Vec::with_capacity(mesh.face_count());
    let mut samples: Vec<usize> = Vec::new();

    for fi in 0..mesh.face_count() {
        let (tangent, normal) = face_frame(mesh, fi);
        let centroid = mesh.face_centroid(fi);

        samples.clear();
        for &v in &mesh.faces()[fi] {
            for &nf in mesh.vertex_faces(v) {
                for &w in &mesh.faces()[nf] {
                    samples.push(w);
                }
            }
        }
        samples.sort_unstable();
        samples.dedup();

        // scale for conditioning
        let mut scale_acc = 0.0;
        for &v in samples.iter() {
            scale_acc += geom::dist(pos[v], centroid);
        }
        let s = scale_acc / samples.len() as f64;

        // basis: [1, x, y, x²/2, xy, y²/2] in scaled coordinates
        let mut gram = [0.0f64; 36];
        let mut rhs = [[0.0f64; 6]; 2];
        for &v in samples.iter() {
            let d = geom::sub(pos[v], centroid);
            let x = geom::dot(d, tangent[0]) / s;
            let y = geom::dot(d, tangent[1]) / s;
            let basis = [1.0, x, y, 0.5 * x * x, x * y, 0.5 * y * y];
            for i in 0..6 {
                for j in 0..6 {
                    gram[i * 6 + j] += basis[i] * basis[j];
                }
            }
            for (k, n) in normal.iter().enumerate() {
                let h = geom::dot(d, *n) / s;
                for i in 0..6 {
                    rhs[k][i] += basis[i] * h;
                }
            }
        }
        let mut coef = [[0.0f64; 6]; 2];
        for k in 0..2 {
            if geom::cholesky_solve(&gram, &rhs[k], 6, &mut coef[k]).is_none() {
                return Err(Error::MeshQuality { face: fi });
            }
        }

        // second fundamental form components, undoing the coordinate scale
        let mut a = [[0.0f64; 3]; 2];
        for k in 0..2 {
            a[k] = [coef[k][3] / s, coef[k][4] / s, coef[k][5] / s];
        }
        let h = [a[0][0] + a[0][2], a[1][0] + a[1][2]];
        let h_sq = h[0] * h[0] + h[1] * h[1];
        let a_sq: f64 = (0..2)
            .map(|k| a[k][0] * a[k][0] + 2.0 * a[k][1] * a[k][1] + a[k][2] * a[k][2])
            .sum();
        let ao_sq = a_sq - 0.5 * h_sq;
        let k_face = 0.25 * h_sq - 0.5 * ao_sq;
        // A°₁₁ = (a₁₁ − a₂₂)/2 per channel, A°₁₂ = a₁₂
        let o11 = [(a[0][0] - a[0][2]) / 2.0, (a[1][0] - a[1][2]) / 2.0];
        let o12 = [a[0][1], a[1][1]];
        let r = 2.0 * (o11[0] * o12[1] - o11[1] * o12[0]);

        out.push(FaceShape {
            tangent,
            normal,
            a,
            h_sq,
            a_sq,
            ao_sq,
            k: k_face,
            r,
        });
    }
    Ok(out)
}

/// Relative residual of the identity W = ¼∫|A|²dμ + 2π(1−p), with |A|²
/// supplied by an independent per-face estimate.
pub fn willmore_identity_residual(
    mesh: &TriMesh,
    bundle: &CurvatureBundle,
    independent_a_sq: &[f64],
) -> f64 {
    assert_eq!(independent_a_sq.len(), mesh.face_count());
    let quarter_int = geom::ksum(
        independent_a_sq
            .iter()
            .enumerate()
            .map(|(fi, a2)| 0.25 * a2 * mesh.face_area(fi)),
    );
    let p = mesh.genus() as f64;
    fabs(bundle.willmore - quarter_int - 2.0 * PI * (1.0 - p)) / bundle.willmore
}

/// Tracefree energy inside the extrinsic ball B_radius(center),
/// vertex-inclusion convention.
pub fn local_tracefree_energy(
    mesh: &TriMesh,
    bundle: &CurvatureBundle,
    center: Vec4,
    radius: f64,
) -> f64 {
    let r2 = radius * radius;
    geom::ksum(mesh.positions().iter().enumerate().filter_map(|(i, p)| {
        if geom::norm_sq(geom::sub(*p, center)) < r2 {
            Some(bundle.ao_sq[i] * bundle.area[i])
        } else {
            None
        }
    }))
}

/// Extrinsic area-density ratios μ(B_σ)/(πσ²) around a center point.
#[derive(Debug, Clone)]
pub struct DensityReport {
    pub center: Vec4,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Richardson extrapolation (in σ²) of the two smallest radii.
    pub limit_estimate: f64,
    /// Smallest radius is below 3 local edge lengths.
    pub under_resolved: bool,
}

pub fn density_report(
    mesh: &TriMesh,
    bundle: &CurvatureBundle,
    center: Vec4,
    radii: &[f64],
) -> DensityReport {
    assert!(
        radii.windows(2).all(|w| w[0] > w[1]) && radii.iter().all(|&r| r > 0.0),
        "radii must be positive and strictly decreasing"
    );
    let mut ratios = Vec::with_capacity(radii.len());
    for &sigma in radii {
        let s2 = sigma * sigma;
        let mass = geom::ksum(mesh.positions().iter().enumerate().filter_map(|(i, p)| {
            if geom::norm_sq(geom::sub(*p, center)) < s2 {
                Some(bundle.area[i])
            } else {
                None
            }
        }));
        ratios.push(mass / (PI * s2));
    }
    let limit_estimate = if radii.len() >= 2 {
        let n = radii.len();
        let (sa, sb) = (radii[n - 1], radii[n - 2]); // sa < sb
        let (ra, rb) = (ratios[n - 1], ratios[n - 2]);
        // model ratio(σ) = L + c σ²
        (sb * sb * ra - sa * sa * rb) / (sb * sb - sa * sa)
    } else {
        ratios[0]
    };

    // local edge scale near the center
    let nearest = mesh.nearest_vertex(center);
    let mut el = 0.0;
    let mut cnt = 0usize;
    for &fi in mesh.vertex_faces(nearest) {
        let f = mesh.faces()[fi];
        for k in 0..3 {
            el += geom::dist(mesh.positions()[f[k]], mesh.positions()[f[(k + 1) % 3]]);
            cnt += 1;
        }
    }
    let local_edge = if cnt > 0 { el / cnt as f64 } else { 0.0 };
    let under_resolved = radii.last().copied().unwrap_or(0.0) < 3.0 * local_edge;

    DensityReport {
        center,
        radii: radii.to_vec(),
        ratios,
        limit_estimate,
        under_resolved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, icosphere, SurfaceSpec};

    #[test]
    fn sphere_mean_curvature_and_willmore() {
        let m = icosphere(4, 1.0).unwrap();
        let b = curvature_bundle(&m).unwrap();
        // |H| = 2 on the unit sphere
        for (i, h) in b.h_vec.iter().enumerate() {
            let mag = geom::norm(*h);
            assert!(
                (mag - 2.0).abs() < 0.02,
                "vertex {i}: |H| = {mag}"
            );
        }
        assert!((b.willmore - 4.0 * PI).abs() / (4.0 * PI) < 0.01);
        // totally umbilic: tracefree energy vanishes at O(h²)
        assert!(b.tracefree_energy.abs() < 0.05, "E = {}", b.tracefree_energy);
    }

    #[test]
    fn gauss_bonnet_exact_on_sphere_and_torus() {
        for (mesh, chi) in [
            (icosphere(3, 1.0).unwrap(), 2.0),
            (
                generate(&SurfaceSpec::TorusOfRevolution {
                    major: 2.0,
                    minor: 0.7,
                    res_u: 32,
                    res_v: 24,
                })
                .unwrap(),
                0.0,
            ),
        ] {
            let b = curvature_bundle(&mesh).unwrap();
            let total = gauss_bonnet_total(&b);
            assert!(
                (total - 2.0 * PI * chi).abs() < 1e-10,
                "got {total}, want {}",
                2.0 * PI * chi
            );
        }
    }

    #[test]
    fn gauss_equation_identities_hold_definitionally() {
        let m = generate(&SurfaceSpec::CliffordR4 { res: 16 }).unwrap();
        let b = curvature_bundle(&m).unwrap();
        for i in 0..m.vertex_count() {
            let h2 = geom::norm_sq(b.h_vec[i]);
            assert!((b.a_sq[i] - (h2 - 2.0 * b.gauss[i])).abs() < 1e-12);
            assert!((b.ao_sq[i] - (0.5 * h2 - 2.0 * b.gauss[i])).abs() < 1e-12);
        }
        // E-form of the genus identity: E = 2W + 8π(p−1) algebraically
        let p = m.genus() as f64;
        let lhs = b.tracefree_energy;
        let rhs = 2.0 * b.willmore + 8.0 * PI * (p - 1.0);
        assert!((lhs - rhs).abs() / (1.0 + b.willmore) < 1e-12);
    }

    #[test]
    fn face_fit_identity_residual_sphere() {
        let m = icosphere(4, 1.0).unwrap();
        let b = curvature_bundle(&m).unwrap();
        let shapes = face_shape_fit(&m).unwrap();
        let a_sq: Vec<f64> = shapes.iter().map(|s| s.a_sq).collect();
        let res = willmore_identity_residual(&m, &b, &a_sq);
        assert!(res < 0.03, "residual {res}");
        // Gauss-equation route instead gives the identity to machine precision
        // (per-vertex a_sq integrated with vertex areas)
        let w_gauss = geom::ksum(
            (0..m.vertex_count()).map(|i| 0.25 * b.a_sq[i] * b.area[i]),
        ) + 2.0 * PI * (1.0 - m.genus() as f64);
        assert!((w_gauss - b.willmore).abs() / b.willmore < 1e-12);
    }

    #[test]
    fn local_energy_full_cover_and_umbilic() {
        let m = icosphere(4, 1.0).unwrap();
        let b = curvature_bundle(&m).unwrap();
        let full = local_tracefree_energy(&m, &b, geom::ZERO, 10.0);
        assert!((full - b.tracefree_energy).abs() < 1e-12);
        // umbilic up to discretization noise
        let ball = local_tracefree_energy(&m, &b, [1.0, 0.0, 0.0, 0.0], 0.3);
        assert!(ball.abs() < 2e-3, "ball energy {ball}");
    }

    #[test]
    fn density_on_sphere_and_off_surface() {
        let m = icosphere(4, 1.0).unwrap();
        let b = curvature_bundle(&m).unwrap();
        let center = geom::normalize([0.3, 0.5, 0.81, 0.0]);
        let rep = density_report(&m, &b, center, &[0.9, 0.6, 0.3]);
        assert!(!rep.under_resolved);
        assert!((rep.limit_estimate - 1.0).abs() < 0.05, "{}", rep.limit_estimate);
        // Li-Yau: θ² ≤ W/4π (+ discrete slack)
        assert!(rep.limit_estimate <= b.willmore / (4.0 * PI) + 0.05);
        let far = density_report(&m, &b, [5.0, 0.0, 0.0, 0.0], &[0.5, 0.25]);
        assert_eq!(far.ratios, vec![0.0, 0.0]);
    }
}
