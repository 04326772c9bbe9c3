//! Grassmannian Gauss-map diagnostics for surfaces in R⁴: the splitting of
//! the oriented 2-plane bundle into a pair of maps to 2-spheres, pullback
//! volume identities (K ± R), Gauss-map degrees, the Hoffman–Osserman
//! Jacobian, and the explicit primitive one-form ξ_p on S² minus a point.
//!
//! A 2-vector ξ ∈ Λ²R⁴ is stored as six coordinates in the order
//! (e₁₂, e₁₃, e₁₄, e₂₃, e₂₄, e₃₄). The self-dual/anti-self-dual unit
//! eigenbases are e₁₂± = (e₁₂ ± e₃₄)/√2, e₁₃± = (e₁₃ ∓ e₂₄)/√2,
//! e₁₄± = (e₁₄ ± e₂₃)/√2; maps φ± are expressed in these bases, with S²₋
//! carrying the reversed coordinate orientation (e₁₃⁻, e₁₄⁻ is a negative
//! tangent basis).

use alloc::vec::Vec;

use libm::{atan, fabs, sqrt, tan};

use crate::curvature::{face_shape_fit, FaceShape};
use crate::error::Error;
use crate::geom::{self, Vec4};
use crate::mesh::TriMesh;

/// |H| threshold below which the Hoffman–Osserman formula is skipped.
pub const H_THRESHOLD: f64 = 1e-8;

/// Per-face split Gauss maps and normal-curvature data.
#[derive(Debug, Clone)]
pub struct GaussSplit {
    /// φ₊ in the basis (e₁₂⁺, e₁₃⁺, e₁₄⁺); unit vectors.
    pub phi_plus: Vec<[f64; 3]>,
    /// φ₋ in the basis (e₁₂⁻, e₁₃⁻, e₁₄⁻); unit vectors.
    pub phi_minus: Vec<[f64; 3]>,
    /// Normal curvature R = 2⟨A°₁₁ ∧ A°₁₂, ν₁ ∧ ν₂⟩ per face.
    pub r: Vec<f64>,
    /// Gauss curvature of the fitted shape operator per face.
    pub k_face: Vec<f64>,
    /// Fitted shape operators (frames, second forms).
    pub shapes: Vec<FaceShape>,
}

/// Wedge coordinates of t₁ ∧ t₂.
fn wedge(t1: Vec4, t2: Vec4) -> [f64; 6] {
    let x = |i: usize, j: usize| t1[i] * t2[j] - t1[j] * t2[i];
    [x(0, 1), x(0, 2), x(0, 3), x(1, 2), x(1, 3), x(2, 3)]
}

/// φ± of an oriented orthonormal tangent frame.
pub fn split_of_frame(t1: Vec4, t2: Vec4) -> ([f64; 3], [f64; 3]) {
    let [x12, x13, x14, x23, x24, x34] = wedge(t1, t2);
    (
        [x12 + x34, x13 - x24, x14 + x23],
        [x12 - x34, x13 + x24, x14 - x23],
    )
}

pub fn grassmann_split(mesh4: &TriMesh) -> Result<GaussSplit, Error> {
    if mesh4.ambient_dim() != 4 {
        return Err(Error::AmbientDim(mesh4.ambient_dim()));
    }
    let shapes = face_shape_fit(mesh4)?;
    let nf = mesh4.face_count();
    let mut phi_plus = Vec::with_capacity(nf);
    let mut phi_minus = Vec::with_capacity(nf);
    let mut r = Vec::with_capacity(nf);
    let mut k_face = Vec::with_capacity(nf);
    for s in &shapes {
        let (p, m) = split_of_frame(s.tangent[0], s.tangent[1]);
        phi_plus.push(p);
        phi_minus.push(m);
        r.push(s.r);
        k_face.push(s.k);
    }
    Ok(GaussSplit {
        phi_plus,
        phi_minus,
        r,
        k_face,
        shapes,
    })
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    sqrt(dot3(a, a))
}

/// Signed area of the spherical triangle (a, b, c) on S², l'Huilier for the
/// magnitude and the frame orientation det[a b c] for the sign.
pub fn spherical_triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let arc = |u: [f64; 3], v: [f64; 3]| 2.0 * libm::asin((norm3(sub3(u, v)) / 2.0).min(1.0));
    let (la, lb, lc) = (arc(b, c), arc(c, a), arc(a, b));
    let s = (la + lb + lc) / 2.0;
    let t = tan(s / 2.0) * tan((s - la) / 2.0) * tan((s - lb) / 2.0) * tan((s - lc) / 2.0);
    let area = 4.0 * atan(sqrt(t.max(0.0)));
    let det = dot3(a, cross3(b, c));
    if det >= 0.0 {
        area
    } else {
        -area
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Comparison of the discrete pullback areas of φ± against (K ± R)·area.
#[derive(Debug, Clone)]
pub struct PullbackCheck {
    /// Signed spherical areas of the φ± triangles over neighbor centroids,
    /// oriented so that they approximate (K ± R)·face_area. Boundary faces
    /// (missing neighbors) hold NaN.
    pub signed_area_plus: Vec<f64>,
    pub signed_area_minus: Vec<f64>,
    /// Aggregate relative L¹ residuals over interior faces:
    /// Σ|area − (K±R)a| / Σ max(|(K±R)a|, |area|).
    pub rel_residual_plus: f64,
    pub rel_residual_minus: f64,
    /// Σ|(K±R)a|: the identity is vacuous when this is at roundoff level
    /// (e.g. flat surfaces, where both sides are zero).
    pub signal_plus: f64,
    pub signal_minus: f64,
}

pub fn pullback_area_check(mesh4: &TriMesh, split: &GaussSplit) -> PullbackCheck {
    let nf = mesh4.face_count();
    let mut sp = Vec::with_capacity(nf);
    let mut sm = Vec::with_capacity(nf);
    let mut num_p = geom::KahanSum::new();
    let mut den_p = geom::KahanSum::new();
    let mut num_m = geom::KahanSum::new();
    let mut den_m = geom::KahanSum::new();
    let mut sig_p = geom::KahanSum::new();
    let mut sig_m = geom::KahanSum::new();
    for f in 0..nf {
        let nb = mesh4.face_neighbors()[f];
        if nb.iter().any(|&g| g == usize::MAX) {
            sp.push(f64::NAN);
            sm.push(f64::NAN);
            continue;
        }
        // the triangle of neighbor centroids has (to leading order) the same
        // area and orientation as the face itself
        let ap = spherical_triangle_area(
            split.phi_plus[nb[0]],
            split.phi_plus[nb[1]],
            split.phi_plus[nb[2]],
        );
        // S²₋ orientation is reversed in coordinates
        let am = -spherical_triangle_area(
            split.phi_minus[nb[0]],
            split.phi_minus[nb[1]],
            split.phi_minus[nb[2]],
        );
        let area = mesh4.face_area(f);
        let tp = (split.k_face[f] + split.r[f]) * area;
        let tm = (split.k_face[f] - split.r[f]) * area;
        num_p.add(fabs(ap - tp));
        den_p.add(fabs(tp).max(fabs(ap)));
        num_m.add(fabs(am - tm));
        den_m.add(fabs(tm).max(fabs(am)));
        sig_p.add(fabs(tp));
        sig_m.add(fabs(tm));
        sp.push(ap);
        sm.push(am);
    }
    PullbackCheck {
        signed_area_plus: sp,
        signed_area_minus: sm,
        rel_residual_plus: num_p.value() / den_p.value(),
        rel_residual_minus: num_m.value() / den_m.value(),
        signal_plus: sig_p.value(),
        signal_minus: sig_m.value(),
    }
}

/// Gauss-map degrees with their rounding errors.
#[derive(Debug, Clone)]
pub struct DegreePair {
    pub deg_plus: i64,
    pub deg_minus: i64,
    pub err_plus: f64,
    pub err_minus: f64,
    /// Both rounding errors below 0.2.
    pub conclusive: bool,
}

/// deg(φ±) = (1/4π) Σ (K ± R)·area, rounded; the integrality is the
/// assertion under test.
pub fn degree(mesh4: &TriMesh, split: &GaussSplit) -> DegreePair {
    let mut sp = geom::KahanSum::new();
    let mut sm = geom::KahanSum::new();
    for f in 0..mesh4.face_count() {
        let a = mesh4.face_area(f);
        sp.add((split.k_face[f] + split.r[f]) * a);
        sm.add((split.k_face[f] - split.r[f]) * a);
    }
    let four_pi = 4.0 * core::f64::consts::PI;
    let dp = sp.value() / four_pi;
    let dm = sm.value() / four_pi;
    let rp = libm::round(dp);
    let rm = libm::round(dm);
    DegreePair {
        deg_plus: rp as i64,
        deg_minus: rm as i64,
        err_plus: fabs(dp - rp),
        err_minus: fabs(dm - rm),
        conclusive: fabs(dp - rp) <= 0.2 && fabs(dm - rm) <= 0.2,
    }
}

/// Two per-face Jacobian measures of the Gauss map: the closed-form
/// ½√(K² + ½|H|²|B|²) from the fitted shape operator, and an independent
/// finite-difference Jacobian ¼√det(Dφ₊ᵀDφ₊ + Dφ₋ᵀDφ₋) estimated from the
/// φ± values on neighboring faces. Faces with |H| ≤ threshold or missing
/// neighbors are skipped (NaN) and counted.
#[derive(Debug, Clone)]
pub struct JacobianCheck {
    pub closed_form: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub skipped: usize,
}

pub fn hoffman_osserman_jacobian(mesh4: &TriMesh, split: &GaussSplit) -> JacobianCheck {
    let nf = mesh4.face_count();
    let mut cf = Vec::with_capacity(nf);
    let mut fd = Vec::with_capacity(nf);
    let mut skipped = 0usize;
    for f in 0..nf {
        let s = &split.shapes[f];
        let nb = mesh4.face_neighbors()[f];
        let h_norm = sqrt(s.h_sq);
        if h_norm <= H_THRESHOLD || nb.iter().any(|&g| g == usize::MAX) {
            cf.push(f64::NAN);
            fd.push(f64::NAN);
            skipped += 1;
            continue;
        }
        // B: component of A orthogonal to the mean curvature direction
        let h = [s.a[0][0] + s.a[0][2], s.a[1][0] + s.a[1][2]];
        let mut b_sq = 0.0;
        for comp in 0..3 {
            // A components (11, 12, 22) in normal space
            let a = [s.a[0][comp], s.a[1][comp]];
            let along = (a[0] * h[0] + a[1] * h[1]) / s.h_sq;
            let b = [a[0] - along * h[0], a[1] - along * h[1]];
            let mult = if comp == 1 { 2.0 } else { 1.0 }; // off-diagonal pair
            b_sq += mult * (b[0] * b[0] + b[1] * b[1]);
        }
        cf.push(0.5 * sqrt(s.k * s.k + 0.5 * s.h_sq * b_sq));

        // finite-difference Dφ± from neighbor centroids in the face frame
        let c0 = mesh4.face_centroid(f);
        let mut g = [0.0f64; 3]; // 2x2 symmetric Gram: [ss, st, tt]
        let mut rhs_p = [[0.0f64; 2]; 3];
        let mut rhs_m = [[0.0f64; 2]; 3];
        for &gface in &nb {
            let d = geom::sub(mesh4.face_centroid(gface), c0);
            let x = geom::dot(d, s.tangent[0]);
            let y = geom::dot(d, s.tangent[1]);
            g[0] += x * x;
            g[1] += x * y;
            g[2] += y * y;
            for c in 0..3 {
                let dp = split.phi_plus[gface][c] - split.phi_plus[f][c];
                let dm = split.phi_minus[gface][c] - split.phi_minus[f][c];
                rhs_p[c][0] += dp * x;
                rhs_p[c][1] += dp * y;
                rhs_m[c][0] += dm * x;
                rhs_m[c][1] += dm * y;
            }
        }
        let det_g = g[0] * g[2] - g[1] * g[1];
        if fabs(det_g) < 1e-30 {
            cf.pop();
            cf.push(f64::NAN);
            fd.push(f64::NAN);
            skipped += 1;
            continue;
        }
        // J rows solve Gram * row = rhs; accumulate M = Σ± JᵀJ
        let mut m = [0.0f64; 3]; // [m11, m12, m22]
        for rhs in [&rhs_p, &rhs_m] {
            for c in 0..3 {
                let jx = (rhs[c][0] * g[2] - rhs[c][1] * g[1]) / det_g;
                let jy = (rhs[c][1] * g[0] - rhs[c][0] * g[1]) / det_g;
                m[0] += jx * jx;
                m[1] += jx * jy;
                m[2] += jy * jy;
            }
        }
        fd.push(0.25 * sqrt((m[0] * m[2] - m[1] * m[1]).max(0.0)));
    }
    JacobianCheck {
        closed_form: cf,
        finite_difference: fd,
        skipped,
    }
}

/// Sample of the primitive one-form ξ_p on S² ∖ {p}: ξ_p(q)·v = −⟨p×q, v⟩/(1−⟨p,q⟩).
#[derive(Debug, Clone)]
pub struct OneFormSample {
    pub p: [f64; 3],
    pub q: [f64; 3],
    /// Covector at q, tangent to S².
    pub value: [f64; 3],
}

pub fn xi_form(p: [f64; 3], q: [f64; 3]) -> Result<OneFormSample, Error> {
    if norm3(sub3(p, q)) < 1e-6 {
        return Err(Error::InvalidSpec(alloc::string::String::from(
            "xi pole: q too close to p",
        )));
    }
    let denom = 1.0 - dot3(p, q);
    let pq = cross3(p, q);
    let value = [-pq[0] / denom, -pq[1] / denom, -pq[2] / denom];
    Ok(OneFormSample { p, q, value })
}

/// Finite-difference d(ξ_p) over a geodesic square of side h at q, compared
/// against the spherical area of the same square; returns the relative error.
pub fn xi_exactness_check(p: [f64; 3], q: [f64; 3], h: f64) -> Result<f64, Error> {
    assert!(h > 0.0);
    // orthonormal tangent frame (t1, t2) with t2 = q × t1
    let seed = if fabs(q[0]) < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let mut t1 = sub3(seed, [q[0] * dot3(seed, q), q[1] * dot3(seed, q), q[2] * dot3(seed, q)]);
    let n = norm3(t1);
    t1 = [t1[0] / n, t1[1] / n, t1[2] / n];
    let t2 = cross3(q, t1);

    let exp_q = |vx: f64, vy: f64| -> [f64; 3] {
        let len = sqrt(vx * vx + vy * vy);
        if len == 0.0 {
            return q;
        }
        let (c, s) = (libm::cos(len), libm::sin(len) / len);
        [
            c * q[0] + s * (vx * t1[0] + vy * t2[0]),
            c * q[1] + s * (vx * t1[1] + vy * t2[1]),
            c * q[2] + s * (vx * t1[2] + vy * t2[2]),
        ]
    };
    let half = h / 2.0;
    let corners = [
        exp_q(-half, -half),
        exp_q(half, -half),
        exp_q(half, half),
        exp_q(-half, half),
    ];
    // midpoint-rule circulation
    let mut circ = 0.0;
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        let mid = {
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
            let n = norm3(m);
            [m[0] / n, m[1] / n, m[2] / n]
        };
        let xi = xi_form(p, mid)?;
        circ += dot3(xi.value, sub3(b, a));
    }
    let area = spherical_triangle_area(corners[0], corners[1], corners[2])
        + spherical_triangle_area(corners[0], corners[2], corners[3]);
    Ok(fabs(circ - area) / fabs(area))
}
