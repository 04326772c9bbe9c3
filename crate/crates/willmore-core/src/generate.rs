//! Analytic surface generators: round spheres, tori of revolution, the flat
//! Clifford torus in S³ ⊂ R⁴ and its stereographic image in R³, and the
//! degenerating family of two concentric spheres joined by catenoid necks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{atan2, cos, cosh, sin, sqrt};

use crate::error::Error;
use crate::mesh::TriMesh;
use crate::geom::{self, Vec4};

const PI: f64 = core::f64::consts::PI;
const TAU: f64 = core::f64::consts::TAU;

/// Parametric description of a generated test surface.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    /// Unit icosphere, `subdiv` 4-to-1 refinement levels.
    Sphere { subdiv: usize },
    /// Torus of revolution, major radius > minor radius > 0.
    TorusOfRevolution {
        major: f64,
        minor: f64,
        res_u: usize,
        res_v: usize,
    },
    /// Flat Clifford torus (cos s, sin s, cos t, sin t)/sqrt(2) in S³ ⊂ R⁴.
    CliffordR4 { res: usize },
    /// Stereographic image of the Clifford torus in R³ (W = 2π²).
    CliffordStereographic { res: usize },
    /// Two concentric spheres of radii 1 and 1+gap joined by `genus`+1
    /// catenoid necks, equally spaced on the equator.  `neck_radius` is the
    /// requested waist (must satisfy 0 < neck_radius < gap); the built waist
    /// is the doubly tangent catenoid's, the only neck that meets both
    /// spheres without a crease -- see `default_neck_radius`.
    NeckedSpheres {
        genus: usize,
        gap: f64,
        neck_radius: f64,
        subdiv: usize,
    },
}

/// Build the closed mesh for a spec. The output satisfies all `TriMesh`
/// invariants and has the genus implied by the spec.
pub fn generate(spec: &SurfaceSpec) -> Result<TriMesh, Error> {
    match *spec {
        SurfaceSpec::Sphere { subdiv } => icosphere(subdiv, 1.0),
        SurfaceSpec::TorusOfRevolution {
            major,
            minor,
            res_u,
            res_v,
        } => {
            if !(major > minor && minor > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "torus requires R > r > 0, got R={major}, r={minor}"
                )));
            }
            if res_u < 8 || res_v < 8 {
                return Err(Error::ResolutionTooLow(format!(
                    "torus grid {res_u}x{res_v}, need >= 8 per period"
                )));
            }
            torus_grid(res_u, res_v, |u, v| {
                let w = major + minor * cos(v);
                [w * cos(u), w * sin(u), minor * sin(v), 0.0]
            })
        }
        SurfaceSpec::CliffordR4 { res } => {
            if res < 8 {
                return Err(Error::ResolutionTooLow(format!("clifford grid {res}")));
            }
            let s2 = 1.0 / sqrt(2.0);
            let m = torus_grid(res, res, |s, t| {
                [s2 * cos(s), s2 * sin(s), s2 * cos(t), s2 * sin(t)]
            })?;
            // same connectivity, ambient dimension 4
            TriMesh::new(4, m.positions().to_vec(), m.faces().to_vec())
        }
        SurfaceSpec::CliffordStereographic { res } => {
            if res < 8 {
                return Err(Error::ResolutionTooLow(format!("clifford grid {res}")));
            }
            let s2 = 1.0 / sqrt(2.0);
            torus_grid(res, res, |s, t| {
                let q = [s2 * cos(s), s2 * sin(s), s2 * cos(t), s2 * sin(t)];
                // stereographic projection from the pole (0,0,0,1); the torus
                // stays at |x4| <= 1/sqrt(2) so the projection is regular
                let d = 1.0 - q[3];
                [q[0] / d, q[1] / d, q[2] / d, 0.0]
            })
        }
        SurfaceSpec::NeckedSpheres {
            genus,
            gap,
            neck_radius,
            subdiv,
        } => necked_spheres(genus, gap, neck_radius, subdiv),
    }
}

/// Icosphere of the given radius centered at the origin, oriented outward.
pub fn icosphere(subdiv: usize, radius: f64) -> Result<TriMesh, Error> {
    let (mut positions, mut faces) = icosahedron();
    for _ in 0..subdiv {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = geom::normalize(geom::add(positions[a], positions[b]));
                    positions.push(p);
                    positions.len() - 1
                });
            }
            new_faces.push([f[0], mid[0], mid[2]]);
            new_faces.push([f[1], mid[1], mid[0]]);
            new_faces.push([f[2], mid[2], mid[1]]);
            new_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = new_faces;
    }
    for p in &mut positions {
        *p = geom::scale(*p, radius);
    }
    TriMesh::new(3, positions, faces)
}

fn icosahedron() -> (Vec<Vec4>, Vec<[usize; 3]>) {
    let phi = (1.0 + sqrt(5.0)) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let positions = raw
        .iter()
        .map(|p| geom::normalize([p[0], p[1], p[2], 0.0]))
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (positions, faces)
}

/// Closed doubly periodic grid over [0,2π)², consistent orientation.
fn torus_grid(
    res_u: usize,
    res_v: usize,
    f: impl Fn(f64, f64) -> Vec4,
) -> Result<TriMesh, Error> {
    let mut positions = Vec::with_capacity(res_u * res_v);
    for i in 0..res_u {
        for j in 0..res_v {
            positions.push(f(TAU * i as f64 / res_u as f64, TAU * j as f64 / res_v as f64));
        }
    }
    let idx = |i: usize, j: usize| (i % res_u) * res_v + (j % res_v);
    let mut faces = Vec::with_capacity(2 * res_u * res_v);
    for i in 0..res_u {
        for j in 0..res_v {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(3, positions, faces)
}

// ---------------------------------------------------------------------------
// Necked-sphere family (sharpness family of the 8π threshold)
// ---------------------------------------------------------------------------

fn necked_spheres(
    genus: usize,
    gap: f64,
    neck_radius: f64,
    subdiv: usize,
) -> Result<TriMesh, Error> {
    if genus < 1 {
        return Err(Error::InvalidSpec("necked spheres need genus >= 1".into()));
    }
    if !(gap > 0.0) || !(neck_radius > 0.0) || neck_radius >= gap {
        return Err(Error::InvalidSpec(format!(
            "need 0 < neck_radius < gap, got gap={gap}, neck_radius={neck_radius}"
        )));
    }
    if subdiv < 3 {
        return Err(Error::ResolutionTooLow("necked spheres need subdiv >= 3".into()));
    }

    let tubes = genus + 1;
    let r_in = 1.0;
    let r_out = 1.0 + gap;

    let inner = icosphere(subdiv, r_in)?;
    let outer = icosphere(subdiv, r_out)?;
    // mean edge angle of the sphere triangulation
    let eta = inner.mean_edge_length() / r_in;

    // Size the tube rings for the widest circle, the junction flare.  The
    // inversion behind the profile is conformal, so a constant step
    // du = TAU/n_ring in the catenoid parameter keeps the quads near-square
    // at every radius along the tube.
    let sizing = neck_profile(gap, 0.01)?;
    let n_ring = ((TAU * sizing.rho_max / eta) as usize).clamp(8, 512);
    let prof = neck_profile(gap, TAU / n_ring as f64)?;

    let theta_cut_in = prof.theta_in + 0.9 * eta;
    let theta_cut_out = prof.theta_out + 0.9 * eta;

    let sep = TAU / tubes as f64;
    let theta_max = if theta_cut_in > theta_cut_out { theta_cut_in } else { theta_cut_out };
    // the ragged hole rims reach about one edge past the cut circle
    if tubes > 1 && sep < 2.0 * (theta_max + eta) {
        return Err(Error::ResolutionTooLow(format!(
            "{tubes} necks of angular radius {theta_max:.3} overlap"
        )));
    }
    if theta_max > 1.2 {
        return Err(Error::InvalidSpec(
            "neck flare too wide relative to the spheres".into(),
        ));
    }

    let meridian = &prof.meridian;
    let n_total = meridian.len() - 1;

    let mut positions: Vec<Vec4> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    let axes: Vec<Vec4> = (0..tubes)
        .map(|j| {
            let a = sep * j as f64;
            [cos(a), sin(a), 0.0, 0.0]
        })
        .collect();

    // Both spheres with all tube caps removed.
    let inner_loops = add_sphere_with_holes(
        &inner,
        &axes,
        theta_cut_in,
        &mut positions,
        &mut faces,
    )?;
    let outer_loops = add_sphere_with_holes(
        &outer,
        &axes,
        theta_cut_out,
        &mut positions,
        &mut faces,
    )?;

    for (j, axis) in axes.iter().enumerate() {
        // orthonormal frame (a, b) normal to the tube axis
        let fa = [-axis[1], axis[0], 0.0, 0.0];
        let fb = [0.0, 0.0, 1.0, 0.0];

        // tube rings along the meridian polyline
        let base = positions.len();
        for (ia, zr) in meridian.iter().enumerate() {
            let [z, rho] = *zr;
            for k in 0..n_ring {
                let phi = TAU * (k as f64 + 0.5) / n_ring as f64;
                let mut q = geom::axpy(z, *axis, geom::ZERO);
                q = geom::axpy(rho * cos(phi), fa, q);
                q = geom::axpy(rho * sin(phi), fb, q);
                // snap end rings onto the spheres for a watertight junction
                if ia == 0 {
                    q = geom::scale(q, r_in / geom::norm(q));
                } else if ia == n_total {
                    q = geom::scale(q, r_out / geom::norm(q));
                }
                positions.push(q);
            }
        }
        for ia in 0..n_total {
            for k in 0..n_ring {
                let a0 = base + ia * n_ring + k;
                let a1 = base + ia * n_ring + (k + 1) % n_ring;
                let b0 = a0 + n_ring;
                let b1 = a1 + n_ring;
                faces.push([a0, a1, b1]);
                faces.push([a0, b1, b0]);
            }
        }
        let ring_in: Vec<usize> = (0..n_ring).map(|k| base + k).collect();
        let ring_out: Vec<usize> = (0..n_ring).map(|k| base + n_total * n_ring + k).collect();

        stitch_annulus(&positions, &inner_loops[j], &ring_in, *axis, &mut faces)?;
        stitch_annulus(&positions, &outer_loops[j], &ring_out, *axis, &mut faces)?;
    }

    let (positions, mut faces) = compact_vertices(positions, faces);
    orient_consistently(positions.len(), &mut faces)?;
    if signed_volume(&positions, &faces) < 0.0 {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }

    let mesh = TriMesh::new(3, positions, faces)?;
    if mesh.genus() != genus {
        return Err(Error::ResolutionTooLow(format!(
            "necked-sphere construction produced genus {}, wanted {genus}",
            mesh.genus()
        )));
    }
    Ok(mesh)
}

/// Meridian of one neck in the frame of its axis: `meridian[k] = [z, rho]`
/// runs from the tangent circle on the unit sphere to the tangent circle on
/// the outer sphere.
struct NeckProfile {
    meridian: Vec<[f64; 2]>,
    /// colatitude of the junction circle on the unit sphere
    theta_in: f64,
    /// colatitude of the junction circle on the outer sphere
    theta_out: f64,
    /// smallest circle radius along the neck
    waist: f64,
    /// largest circle radius along the neck (at a junction)
    rho_max: f64,
}

fn neck_profile(gap: f64, du: f64) -> Result<NeckProfile, Error> {
    let zq = 1.0 + 0.5 * gap;
    let r_out = 1.0 + gap;
    // Images of the two spheres under x -> (x - p)/|x - p|^2 with p = -zq on
    // the neck axis: a disjoint external pair separated by a narrow slab.
    let k1 = zq * zq - 1.0;
    let zc1 = -zq + zq / k1;
    let rr1 = 1.0 / k1;
    let k2 = r_out * r_out - zq * zq;
    let zc2 = -zq - zq / k2;
    let rr2 = r_out / k2;

    // Catenoid rho = c*cosh(u), z = zm + c*u tangent to both images: tangency
    // forces cosh^2(u_i) = R_i/c at the contacts, leaving one closure
    // equation for the axial distance between the image centres.  Writing
    // c*cosh(u)*sinh(u) = sqrt(R(R-c)) keeps it stable down to c -> 0, where
    // the closure tends to R1 + R2 - |zc1 - zc2| < 0.
    let contact = |rr: f64, c: f64| {
        let q = sqrt(rr / c);
        libm::log(q + sqrt(q * q - 1.0))
    };
    let closure = |c: f64| {
        c * (contact(rr1, c) + contact(rr2, c)) + sqrt(rr1 * (rr1 - c))
            + sqrt(rr2 * (rr2 - c))
            - (zc1 - zc2)
    };
    let mut hi = 0.9 * if rr1 < rr2 { rr1 } else { rr2 };
    let mut tries = 0;
    while closure(hi) <= 0.0 {
        hi *= 0.5;
        tries += 1;
        if tries > 120 {
            return Err(Error::InvalidSpec(
                "no tangent catenoid bridges the inverted spheres".into(),
            ));
        }
    }
    let mut lo = 1e-15 * hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if closure(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let u1 = contact(rr1, c);
    let u2 = contact(rr2, c);
    let zm = zc1 - (c * u1 + sqrt(rr1 * (rr1 - c)));

    // Sample u from the inner contact down to the outer one and map back
    // through the same inversion; the end points land exactly on the spheres.
    let n = ((u1 + u2) / du) as usize + 1;
    let n = n.max(16);
    let mut meridian = Vec::with_capacity(n + 1);
    let mut waist = f64::INFINITY;
    let mut rho_max = 0.0f64;
    for k in 0..=n {
        let u = u1 - (u1 + u2) * k as f64 / n as f64;
        let rho = c * cosh(u);
        let z = zm + c * u;
        let d = rho * rho + (z + zq) * (z + zq);
        let ro = rho / d;
        let zo = (z + zq) / d - zq;
        if ro < waist {
            waist = ro;
        }
        if ro > rho_max {
            rho_max = ro;
        }
        meridian.push([zo, ro]);
    }
    let theta_in = atan2(meridian[0][1], meridian[0][0]);
    let theta_out = atan2(meridian[n][1], meridian[n][0]);
    if !(theta_in > 0.0 && theta_out > 0.0 && waist > 0.0) {
        return Err(Error::InvalidSpec(
            "degenerate neck profile for this gap".into(),
        ));
    }
    Ok(NeckProfile {
        meridian,
        theta_in,
        theta_out,
        waist,
        rho_max,
    })
}

/// Waist of the neck built for a shell of width `gap`: the waist of the
/// doubly tangent catenoid.  Any fatter or thinner tangent neck raises the
/// energy, so this is the family the shrinking-gap sweep uses.
pub fn default_neck_radius(gap: f64) -> f64 {
    match neck_profile(gap, 0.005) {
        Ok(p) => p.waist,
        Err(_) => 0.1 * gap,
    }
}

/// Copy a sphere mesh into the output buffers, removing every face with a
/// vertex inside any of the axis caps; returns one boundary loop per axis.
fn add_sphere_with_holes(
    sphere: &TriMesh,
    axes: &[Vec4],
    theta_cut: f64,
    positions: &mut Vec<Vec4>,
    faces: &mut Vec<[usize; 3]>,
) -> Result<Vec<Vec<usize>>, Error> {
    let offset = positions.len();
    positions.extend_from_slice(sphere.positions());
    let cos_cut = cos(theta_cut);

    let in_cap = |p: Vec4, axis: Vec4| -> bool {
        geom::dot(geom::normalize(p), axis) > cos_cut
    };

    let mut kept: Vec<[usize; 3]> = Vec::new();
    for f in sphere.faces() {
        let removed = axes.iter().any(|axis| {
            f.iter().any(|&v| in_cap(sphere.positions()[v], *axis))
        });
        if !removed {
            kept.push([f[0] + offset, f[1] + offset, f[2] + offset]);
        }
    }

    // Extract the hole rims, dropping any kept face whose three corners all
    // sit on a rim: projecting such a face onto the cut circle flattens it
    // into a folded sliver.  Removing one can expose another, so iterate.
    let loops: Vec<Vec<usize>> = loop {
        // boundary edges of the kept submesh, directed as they appear in faces
        let mut boundary: BTreeMap<usize, usize> = BTreeMap::new(); // from -> to
        let mut undirected: BTreeMap<(usize, usize), i32> = BTreeMap::new();
        for f in &kept {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for f in &kept {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if undirected[&(a.min(b), a.max(b))] == 1 {
                    if boundary.insert(a, b).is_some() {
                        return Err(Error::ResolutionTooLow(
                            "non-manifold hole boundary on sphere".into(),
                        ));
                    }
                }
            }
        }

        let rim: alloc::collections::BTreeSet<usize> = boundary.keys().copied().collect();
        let before = kept.len();
        kept.retain(|f| !(rim.contains(&f[0]) && rim.contains(&f[1]) && rim.contains(&f[2])));
        if kept.len() != before {
            continue;
        }

        // chain boundary edges into loops
        let mut loops: Vec<Vec<usize>> = Vec::new();
        let mut visited: BTreeMap<usize, bool> = BTreeMap::new();
        let starts: Vec<usize> = boundary.keys().copied().collect();
        for s in starts {
            if visited.get(&s).copied().unwrap_or(false) {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = s;
            loop {
                cycle.push(v);
                visited.insert(v, true);
                v = *boundary.get(&v).ok_or_else(|| {
                    Error::ResolutionTooLow("open hole boundary chain".into())
                })?;
                if v == s {
                    break;
                }
            }
            loops.push(cycle);
        }
        if loops.len() != axes.len() {
            return Err(Error::ResolutionTooLow(format!(
                "expected {} hole loops, found {}",
                axes.len(),
                loops.len()
            )));
        }
        break loops;
    };
    // match loops to axes by the loop centroid direction
    let mut per_axis: Vec<Vec<usize>> = vec![Vec::new(); axes.len()];
    for lp in loops {
        let mut centroid = geom::ZERO;
        for &v in &lp {
            centroid = geom::add(centroid, positions[v]);
        }
        let dir = geom::normalize(centroid);
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, axis) in axes.iter().enumerate() {
            let d = geom::dot(dir, *axis);
            if d > best_dot {
                best_dot = d;
                best = i;
            }
        }
        if !per_axis[best].is_empty() {
            return Err(Error::ResolutionTooLow(
                "two hole loops matched one neck axis".into(),
            ));
        }
        per_axis[best] = lp;
    }

    // project each boundary vertex onto the exact cut circle; the ragged
    // lattice boundary otherwise turns the stitch annulus into a wavy band
    // whose bending energy does not vanish with the gap
    let radius = geom::norm(sphere.positions()[0]);
    for (axis, lp) in axes.iter().zip(per_axis.iter()) {
        for &v in lp {
            let p = positions[v];
            let axial = geom::dot(p, *axis);
            let w = geom::axpy(-axial, *axis, p);
            let wn = geom::norm(w);
            if wn <= 1e-12 {
                return Err(Error::ResolutionTooLow(
                    "hole boundary vertex on the neck axis".into(),
                ));
            }
            let mut q = geom::scale(*axis, radius * cos(theta_cut));
            q = geom::axpy(radius * libm::sin(theta_cut) / wn, w, q);
            positions[v] = q;
        }
    }

    // Projection can collapse near-meridional boundary edges (two rim
    // vertices with almost the same angle around the axis) or invert the
    // angular order along the rim; either folds the triangles behind the
    // rim.  Weld such vertex pairs and drop the faces that degenerate.
    let eta = sphere.mean_edge_length() / radius;
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for (axis, lp) in axes.iter().zip(per_axis.iter_mut()) {
        let fa = geom::normalize(if axis[0].abs() < 0.9 {
            geom::cross3([1.0, 0.0, 0.0, 0.0], *axis)
        } else {
            geom::cross3([0.0, 1.0, 0.0, 0.0], *axis)
        });
        let fb = geom::cross3(*axis, fa);
        let ang = |p: Vec4| atan2(geom::dot(p, fb), geom::dot(p, fa));
        // winding sign of the loop around the axis
        let mut winding = 0.0;
        for i in 0..lp.len() {
            let mut d = ang(positions[lp[(i + 1) % lp.len()]]) - ang(positions[lp[i]]);
            if d > PI {
                d -= TAU;
            } else if d < -PI {
                d += TAU;
            }
            winding += d;
        }
        let orient = if winding >= 0.0 { 1.0 } else { -1.0 };
        loop {
            let n = lp.len();
            if n < 8 {
                return Err(Error::ResolutionTooLow("hole rim degenerated".into()));
            }
            let mut welded = false;
            for i in 0..n {
                let (a, b) = (lp[i], lp[(i + 1) % n]);
                let d = geom::norm(geom::sub(positions[a], positions[b]));
                let mut step = ang(positions[b]) - ang(positions[a]);
                if step > PI {
                    step -= TAU;
                } else if step < -PI {
                    step += TAU;
                }
                if d < 0.35 * eta * radius || orient * step < 0.0 {
                    remap.insert(b, a);
                    lp.remove((i + 1) % n);
                    welded = true;
                    break;
                }
            }
            if !welded {
                break;
            }
        }
    }
    if !remap.is_empty() {
        let resolve = |mut v: usize| {
            while let Some(&t) = remap.get(&v) {
                v = t;
            }
            v
        };
        for f in &mut kept {
            for k in 0..3 {
                f[k] = resolve(f[k]);
            }
        }
        kept.retain(|f| f[0] != f[1] && f[1] != f[2] && f[2] != f[0]);
    }

    // The projection drags some boundary vertices by up to a mesh edge,
    // which can squash or fold the triangles just outside the circle.
    // Relax the nearby interior vertices along the sphere (boundary fixed,
    // everything stays on the sphere, so this costs no energy).
    let cos_relax = cos(theta_cut + 3.0 * eta);
    let mut nbrs: BTreeMap<usize, alloc::collections::BTreeSet<usize>> = BTreeMap::new();
    for f in &kept {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            nbrs.entry(a).or_default().insert(b);
            nbrs.entry(b).or_default().insert(a);
        }
    }
    let fixed: alloc::collections::BTreeSet<usize> =
        per_axis.iter().flatten().copied().collect();
    let movable: Vec<usize> = nbrs
        .keys()
        .copied()
        .filter(|v| !fixed.contains(v))
        .filter(|v| {
            axes.iter()
                .any(|axis| geom::dot(geom::normalize(positions[*v]), *axis) > cos_relax)
        })
        .collect();
    for _ in 0..20 {
        for &v in &movable {
            let mut acc = geom::ZERO;
            for &u in &nbrs[&v] {
                acc = geom::add(acc, positions[u]);
            }
            positions[v] = geom::scale(geom::normalize(acc), radius);
        }
    }

    faces.extend_from_slice(&kept);
    Ok(per_axis)
}

/// Triangulate the annulus between two vertex loops encircling `axis`.
/// Face orientation is normalized globally afterwards.
fn stitch_annulus(
    positions: &[Vec4],
    loop_a: &[usize],
    loop_b: &[usize],
    axis: Vec4,
    faces: &mut Vec<[usize; 3]>,
) -> Result<(), Error> {
    if loop_a.len() < 3 || loop_b.len() < 3 {
        return Err(Error::ResolutionTooLow("degenerate stitch loop".into()));
    }
    let fa = geom::normalize([-axis[1], axis[0], 0.0, 0.0]);
    let fb = [0.0, 0.0, 1.0, 0.0];
    let angle = |v: usize| -> f64 {
        let p = positions[v];
        atan2(geom::dot(p, fb), geom::dot(p, fa))
    };

    // unwrapped angular parameters, both loops forced counterclockwise
    let unwrap = |lp: &[usize]| -> (Vec<usize>, Vec<f64>) {
        let mut phis = Vec::with_capacity(lp.len());
        let mut acc = angle(lp[0]);
        phis.push(acc);
        for w in 1..lp.len() {
            let mut d = angle(lp[w]) - angle(lp[w - 1]);
            while d > PI {
                d -= TAU;
            }
            while d <= -PI {
                d += TAU;
            }
            acc += d;
            phis.push(acc);
        }
        let total = phis[phis.len() - 1] - phis[0]
            + {
                let mut d = angle(lp[0]) - angle(lp[lp.len() - 1]);
                while d > PI {
                    d -= TAU;
                }
                while d <= -PI {
                    d += TAU;
                }
                d
            };
        if total < 0.0 {
            let mut rev: Vec<usize> = lp.to_vec();
            rev.reverse();
            unwrap_ccw(&rev, &angle)
        } else {
            (lp.to_vec(), phis)
        }
    };
    fn unwrap_ccw(lp: &[usize], angle: &dyn Fn(usize) -> f64) -> (Vec<usize>, Vec<f64>) {
        let mut phis = Vec::with_capacity(lp.len());
        let mut acc = angle(lp[0]);
        phis.push(acc);
        for w in 1..lp.len() {
            let mut d = angle(lp[w]) - angle(lp[w - 1]);
            while d > PI {
                d -= TAU;
            }
            while d <= -PI {
                d += TAU;
            }
            acc += d;
            phis.push(acc);
        }
        (lp.to_vec(), phis)
    }

    let (av, mut aphi) = unwrap(loop_a);
    let (bv, mut bphi) = unwrap(loop_b);

    // rotate loop B so its start is angularly nearest to A's start
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &phi) in bphi.iter().enumerate() {
        let mut d = phi - aphi[0];
        while d > PI {
            d -= TAU;
        }
        while d <= -PI {
            d += TAU;
        }
        if libm::fabs(d) < best_d {
            best_d = libm::fabs(d);
            best = i;
        }
    }
    let bv: Vec<usize> = bv[best..].iter().chain(bv[..best].iter()).copied().collect();
    // recompute unwrapped angles from the new start, aligned near aphi[0]
    {
        let mut acc = angle(bv[0]);
        let mut d0 = acc - aphi[0];
        while d0 > PI {
            d0 -= TAU;
        }
        while d0 <= -PI {
            d0 += TAU;
        }
        acc = aphi[0] + d0;
        bphi.clear();
        bphi.push(acc);
        for w in 1..bv.len() {
            let mut d = angle(bv[w]) - angle(bv[w - 1]);
            while d > PI {
                d -= TAU;
            }
            while d <= -PI {
                d += TAU;
            }
            acc += d;
            bphi.push(acc);
        }
    }
    // also normalize A's angles to start at aphi[0] (already true)
    let m = av.len();
    let n = bv.len();
    aphi.push(aphi[0] + TAU);
    bphi.push(bphi[0] + TAU);

    let (mut i, mut j) = (0usize, 0usize);
    while i < m || j < n {
        let advance_a = if i >= m {
            false
        } else if j >= n {
            true
        } else {
            aphi[i + 1] <= bphi[j + 1]
        };
        if advance_a {
            faces.push([av[i % m], av[(i + 1) % m], bv[j % n]]);
            i += 1;
        } else {
            faces.push([bv[(j + 1) % n], bv[j % n], av[i % m]]);
            j += 1;
        }
    }
    Ok(())
}

/// Drop unreferenced vertices and remap face indices.
fn compact_vertices(
    positions: Vec<Vec4>,
    faces: Vec<[usize; 3]>,
) -> (Vec<Vec4>, Vec<[usize; 3]>) {
    let mut used = vec![false; positions.len()];
    for f in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; positions.len()];
    let mut out = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = out.len();
            out.push(positions[i]);
        }
    }
    let faces = faces
        .into_iter()
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    (out, faces)
}

/// Flip faces until orientations agree across every shared edge (BFS over
/// the undirected face adjacency). Fails on non-manifold edges.
fn orient_consistently(nv: usize, faces: &mut [[usize; 3]]) -> Result<(), Error> {
    let _ = nv;
    let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_map.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    for (e, fs) in &edge_map {
        if fs.len() > 2 {
            return Err(Error::OpenSurface {
                edge: *e,
                faces: fs.len(),
            });
        }
    }
    let has_directed = |f: &[usize; 3], a: usize, b: usize| -> bool {
        (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
    };
    let mut state = vec![0u8; faces.len()]; // 0 unvisited, 1 queued/kept, 2 flipped
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..faces.len() {
        if state[start] != 0 {
            continue;
        }
        state[start] = 1;
        stack.push(start);
        while let Some(fi) = stack.pop() {
            let f = faces[fi];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                for &nf in &edge_map[&key] {
                    if nf == fi {
                        continue;
                    }
                    // consistent neighbors carry the edge in reverse direction
                    let consistent = has_directed(&faces[nf], b, a);
                    if state[nf] == 0 {
                        if !consistent {
                            faces[nf].swap(1, 2);
                        }
                        state[nf] = 1;
                        stack.push(nf);
                    } else if !has_directed(&faces[nf], b, a) {
                        return Err(Error::InconsistentOrientation { edge: key });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Signed volume enclosed by an R³ mesh (divergence theorem).
fn signed_volume(positions: &[Vec4], faces: &[[usize; 3]]) -> f64 {
    geom::ksum(faces.iter().map(|f| {
        let a = positions[f[0]];
        let b = positions[f[1]];
        let c = positions[f[2]];
        geom::dot(a, geom::cross3(b, c)) / 6.0
    }))
}
