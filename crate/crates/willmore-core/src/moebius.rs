//! Möbius group action on meshes and the normalization that places a
//! surface inside the unit ball with tracefree energy at most E/2 in every
//! ball of radius ϱ0.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::curvature::{curvature_bundle, CurvatureBundle};
use crate::error::Error;
use crate::geom::{self, Vec4};
use crate::mesh::TriMesh;

/// Minimum inversion-center clearance, relative to mesh diameter.
pub const INVERSION_CLEARANCE_REL: f64 = 1e-9;
/// Relative bisection tolerance for the dilation calibration.
pub const CALIBRATION_REL_TOL: f64 = 1e-3;
/// Empty-ball lattice pitch.
pub const SHELL_PITCH: f64 = 0.5;
/// Empty-ball search radius cap.
pub const SEARCH_RADIUS_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub enum MobiusStep {
    Translate(Vec4),
    /// λ > 0.
    Dilate(f64),
    /// Unit-sphere inversion about a center: x ↦ (x−c)/|x−c|² + c.
    Invert(Vec4),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MobiusMap {
    pub steps: Vec<MobiusStep>,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn then(mut self, step: MobiusStep) -> Self {
        if let MobiusStep::Dilate(l) = step {
            assert!(l > 0.0, "dilation factor must be positive");
        }
        self.steps.push(step);
        self
    }
}

/// Apply the map step by step; connectivity is unchanged. Inversion centers
/// must keep a relative clearance from every vertex.
pub fn apply(map: &MobiusMap, mesh: &TriMesh) -> Result<TriMesh, Error> {
    let mut pos = mesh.positions().to_vec();
    for step in &map.steps {
        match step {
            MobiusStep::Translate(t) => {
                for p in pos.iter_mut() {
                    *p = geom::add(*p, *t);
                }
            }
            MobiusStep::Dilate(l) => {
                for p in pos.iter_mut() {
                    *p = geom::scale(*p, *l);
                }
            }
            MobiusStep::Invert(c) => {
                let diam = bbox_diameter(&pos);
                let min_clear = INVERSION_CLEARANCE_REL * diam;
                for p in pos.iter() {
                    if geom::dist(*p, *c) < min_clear {
                        return Err(Error::SingularInversion);
                    }
                }
                for p in pos.iter_mut() {
                    let d = geom::sub(*p, *c);
                    *p = geom::add(geom::scale(d, 1.0 / geom::norm_sq(d)), *c);
                }
            }
        }
    }
    mesh.with_positions(pos)
}

fn bbox_diameter(pos: &[Vec4]) -> f64 {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for p in pos {
        for k in 0..4 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    geom::norm(geom::sub(hi, lo))
}

/// Per-vertex tracefree-energy atoms, clamped at zero: discrete Ao_sq may
/// dip slightly negative on near-umbilic meshes and would otherwise poison
/// the E/2 split.
pub fn energy_atoms(bundle: &CurvatureBundle) -> Vec<f64> {
    bundle
        .ao_sq
        .iter()
        .zip(&bundle.area)
        .map(|(o, a)| o.max(0.0) * a)
        .collect()
}

/// Max over candidate centers of the atom mass inside the open ball of
/// `radius`. Candidates are lattice points of `pitch` within `radius` of
/// some vertex, plus the vertex positions themselves. Deterministic:
/// candidates are visited in lexicographic order and ties keep the first.
fn max_ball_energy(
    dim: usize,
    positions: &[Vec4],
    atoms: &[f64],
    radius: f64,
    pitch: f64,
    clip_norm: Option<f64>,
) -> (f64, Vec4) {
    // vertex buckets of size `radius` for O(1) neighborhoods
    let bucket = |p: &Vec4| -> [i64; 4] {
        let mut k = [0i64; 4];
        for a in 0..dim {
            k[a] = libm::floor(p[a] / radius) as i64;
        }
        k
    };
    let mut buckets: alloc::collections::BTreeMap<[i64; 4], Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (i, p) in positions.iter().enumerate() {
        buckets.entry(bucket(p)).or_default().push(i);
    }
    let eval = |x: Vec4| -> f64 {
        let kb = bucket(&x);
        let mut s = geom::KahanSum::new();
        let r2 = radius * radius;
        let span = 1i64; // ball radius == bucket size
        let mut offs = [[0i64; 4]; 81];
        let mut cnt = 0usize;
        enumerate_offsets(dim, span, &mut |o| {
            offs[cnt] = *o;
            cnt += 1;
        });
        for o in offs.iter().take(cnt) {
            let key = [kb[0] + o[0], kb[1] + o[1], kb[2] + o[2], kb[3] + o[3]];
            if let Some(list) = buckets.get(&key) {
                for &i in list {
                    if geom::norm_sq(geom::sub(positions[i], x)) < r2 {
                        s.add(atoms[i]);
                    }
                }
            }
        }
        s.value()
    };

    // candidate lattice points near the surface
    let mut cells: BTreeSet<[i64; 4]> = BTreeSet::new();
    for p in positions {
        let mut lo = [0i64; 4];
        let mut hi = [0i64; 4];
        for a in 0..dim {
            lo[a] = libm::ceil((p[a] - radius) / pitch) as i64;
            hi[a] = libm::floor((p[a] + radius) / pitch) as i64;
        }
        collect_cells(dim, &lo, &hi, p, radius, pitch, &mut cells);
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_x = geom::ZERO;
    for cell in &cells {
        let x = [
            cell[0] as f64 * pitch,
            cell[1] as f64 * pitch,
            cell[2] as f64 * pitch,
            cell[3] as f64 * pitch,
        ];
        if let Some(c) = clip_norm {
            if geom::norm(x) > c {
                continue;
            }
        }
        let e = eval(x);
        if e > best {
            best = e;
            best_x = x;
        }
    }
    for p in positions {
        if let Some(c) = clip_norm {
            if geom::norm(*p) > c {
                continue;
            }
        }
        let e = eval(*p);
        if e > best {
            best = e;
            best_x = *p;
        }
    }
    (best, best_x)
}

fn enumerate_offsets(dim: usize, span: i64, visit: &mut impl FnMut(&[i64; 4])) {
    let mut o = [0i64; 4];
    fn rec(a: usize, dim: usize, span: i64, o: &mut [i64; 4], visit: &mut impl FnMut(&[i64; 4])) {
        if a == dim {
            visit(o);
            return;
        }
        for v in -span..=span {
            o[a] = v;
            rec(a + 1, dim, span, o, visit);
        }
    }
    rec(0, dim, span, &mut o, visit);
}

fn collect_cells(
    dim: usize,
    lo: &[i64; 4],
    hi: &[i64; 4],
    p: &Vec4,
    radius: f64,
    pitch: f64,
    out: &mut BTreeSet<[i64; 4]>,
) {
    let mut k = [0i64; 4];
    fn rec(
        a: usize,
        dim: usize,
        lo: &[i64; 4],
        hi: &[i64; 4],
        p: &Vec4,
        r2: f64,
        pitch: f64,
        k: &mut [i64; 4],
        out: &mut BTreeSet<[i64; 4]>,
    ) {
        if a == dim {
            let x = [
                k[0] as f64 * pitch,
                k[1] as f64 * pitch,
                k[2] as f64 * pitch,
                k[3] as f64 * pitch,
            ];
            if geom::norm_sq(geom::sub(x, *p)) < r2 {
                out.insert(*k);
            }
            return;
        }
        for v in lo[a]..=hi[a] {
            k[a] = v;
            rec(a + 1, dim, lo, hi, p, r2, pitch, k, out);
        }
    }
    rec(0, dim, lo, hi, p, radius * radius, pitch, &mut k, out);
}

/// Smallest dilation λ after which every unit ball carries at most E/2 of
/// the tracefree energy. Returns (λ, x0) with x0 — expressed in the dilated
/// coordinates — a center attaining the max at the bisection boundary.
///
/// Internally bisects the equivalent ball radius r = 1/λ on the original
/// coordinates, with search grid pitch r/4 plus all vertex positions.
pub fn calibrate_dilation(
    mesh: &TriMesh,
    bundle: &CurvatureBundle,
) -> Result<(f64, Vec4), Error> {
    let atoms = energy_atoms(bundle);
    let e_total = geom::ksum(atoms.iter().copied());
    let max_atom = atoms.iter().fold(0.0f64, |m, a| m.max(*a));
    if max_atom > 0.5 * e_total {
        return Err(Error::AtomicConcentration);
    }
    let dim = mesh.ambient_dim();
    let pos = mesh.positions();
    let half = 0.5 * e_total;

    let feasible = |r: f64| -> (bool, f64, Vec4) {
        let (e, x) = max_ball_energy(dim, pos, &atoms, r, r / 4.0, None);
        (e <= half, e, x)
    };

    // bracket: small radii are feasible (atoms < E/2), the full diameter is not
    let mut r_lo = mesh.mean_edge_length() * 1e-2;
    let mut r_hi = mesh.diameter() * 2.0;
    let (lo_ok, _, mut x_best) = feasible(r_lo);
    if !lo_ok {
        return Err(Error::AtomicConcentration);
    }
    loop {
        let (ok, _, x) = feasible(r_hi);
        if !ok {
            break;
        }
        // entire surface already satisfies the split at huge radius:
        // keep enlarging the bracket is pointless — r_hi is feasible, done
        x_best = x;
        r_lo = r_hi;
        r_hi *= 2.0;
        if r_hi > mesh.diameter() * 16.0 {
            break;
        }
    }
    while (r_hi - r_lo) / r_hi > CALIBRATION_REL_TOL {
        let r_mid = 0.5 * (r_lo + r_hi);
        let (ok, _, x) = feasible(r_mid);
        if ok {
            x_best = x;
            r_lo = r_mid;
        } else {
            r_hi = r_mid;
        }
    }
    let lambda = 1.0 / r_lo;
    Ok((lambda, geom::scale(x_best, lambda)))
}

/// Point whose closed unit ball misses every triangle, found on expanding
/// Chebyshev shells of a half-pitch lattice centered at `x0`; within the
/// first successful shell the Euclidean distance to `x0` is minimized.
pub fn find_empty_ball(mesh: &TriMesh, x0: Vec4) -> Result<Vec4, Error> {
    let dim = mesh.ambient_dim();
    let pos = mesh.positions();
    let faces = mesh.faces();
    let clear = |x: Vec4| -> bool {
        // cheap vertex prefilter, then the exact triangle distance
        for p in pos {
            if geom::norm_sq(geom::sub(*p, x)) <= 1.0 {
                return false;
            }
        }
        for f in faces {
            if geom::point_triangle_dist_sq(x, pos[f[0]], pos[f[1]], pos[f[2]]) <= 1.0 {
                return false;
            }
        }
        true
    };

    let max_shell = (SEARCH_RADIUS_CAP / SHELL_PITCH) as i64;
    for m in 0..=max_shell {
        let mut best: Option<(f64, [i64; 4])> = None;
        let mut k = [0i64; 4];
        shell_points(dim, m, &mut k, &mut |k: &[i64; 4]| {
            let x = geom::add(
                x0,
                [
                    k[0] as f64 * SHELL_PITCH,
                    k[1] as f64 * SHELL_PITCH,
                    k[2] as f64 * SHELL_PITCH,
                    k[3] as f64 * SHELL_PITCH,
                ],
            );
            if clear(x) {
                let d = geom::dist(x, x0);
                let better = match &best {
                    None => true,
                    Some((bd, bk)) => d < *bd - 1e-15 || (fabs(d - *bd) <= 1e-15 && k < bk),
                };
                if better {
                    best = Some((d, *k));
                }
            }
        });
        if let Some((_, k)) = best {
            return Ok(geom::add(
                x0,
                [
                    k[0] as f64 * SHELL_PITCH,
                    k[1] as f64 * SHELL_PITCH,
                    k[2] as f64 * SHELL_PITCH,
                    k[3] as f64 * SHELL_PITCH,
                ],
            ));
        }
    }
    Err(Error::EmptyBallSearchFailed)
}

fn shell_points(dim: usize, m: i64, k: &mut [i64; 4], visit: &mut impl FnMut(&[i64; 4])) {
    // lattice points with Chebyshev norm exactly m over the first `dim` axes
    fn rec(
        a: usize,
        dim: usize,
        m: i64,
        on_boundary: bool,
        k: &mut [i64; 4],
        visit: &mut impl FnMut(&[i64; 4]),
    ) {
        if a == dim {
            if on_boundary {
                visit(k);
            }
            return;
        }
        for v in -m..=m {
            k[a] = v;
            rec(a + 1, dim, m, on_boundary || v.abs() == m, k, visit);
        }
    }
    rec(0, dim, m, m == 0, k, visit);
}

/// Proof-of-normalization data attached to the transformed mesh.
#[derive(Debug, Clone)]
pub struct NormalizationCertificate {
    pub map: MobiusMap,
    /// ϱ0 = ½(√(1 + R⁻²) − 1), R = |x − x0| + 1.
    pub rho0: f64,
    /// Max tracefree energy over balls of radius ϱ0 (grid pitch ϱ0/4 inside
    /// B_2(0), plus vertex centers), on the output mesh.
    pub max_ball_energy: f64,
    /// Max |position| of the output mesh; at most 1 up to roundoff.
    pub enclosing_radius: f64,
}

/// Dilate, translate the empty-ball point to the origin and invert: the
/// image lies in the closed unit ball and no ϱ0-ball carries more than half
/// the tracefree energy.
pub fn normalize(
    mesh: &TriMesh,
    bundle: &CurvatureBundle,
) -> Result<(NormalizationCertificate, TriMesh), Error> {
    let (lambda, x0) = calibrate_dilation(mesh, bundle)?;
    let dilated = apply(
        &MobiusMap::identity().then(MobiusStep::Dilate(lambda)),
        mesh,
    )?;
    let x = find_empty_ball(&dilated, x0)?;

    let map = MobiusMap::identity()
        .then(MobiusStep::Dilate(lambda))
        .then(MobiusStep::Translate(geom::scale(x, -1.0)))
        .then(MobiusStep::Invert(geom::ZERO));
    let out = apply(
        &MobiusMap::identity()
            .then(MobiusStep::Translate(geom::scale(x, -1.0)))
            .then(MobiusStep::Invert(geom::ZERO)),
        &dilated,
    )?;

    let r_dist = geom::dist(x, x0) + 1.0;
    let rho0 = 0.5 * (sqrt(1.0 + 1.0 / (r_dist * r_dist)) - 1.0);

    let out_bundle = curvature_bundle(&out)?;
    let atoms = energy_atoms(&out_bundle);
    let (max_ball, _) = max_ball_energy(
        out.ambient_dim(),
        out.positions(),
        &atoms,
        rho0,
        rho0 / 4.0,
        Some(2.0),
    );
    let enclosing_radius = out
        .positions()
        .iter()
        .fold(0.0f64, |m, p| m.max(geom::norm(*p)));

    Ok((
        NormalizationCertificate {
            map,
            rho0,
            max_ball_energy: max_ball,
            enclosing_radius,
        },
        out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, icosphere, SurfaceSpec};

    #[test]
    fn identity_is_bit_exact_and_dilation_preserves_willmore() {
        let m = icosphere(3, 1.0).unwrap();
        let same = apply(&MobiusMap::identity(), &m).unwrap();
        assert_eq!(m.positions(), same.positions());

        let b0 = curvature_bundle(&m).unwrap();
        let d = apply(
            &MobiusMap::identity().then(MobiusStep::Dilate(2.7)),
            &m,
        )
        .unwrap();
        let b1 = curvature_bundle(&d).unwrap();
        assert!((b0.willmore - b1.willmore).abs() < 1e-10);
    }

    #[test]
    fn distant_inversion_nearly_preserves_willmore() {
        let m = icosphere(4, 1.0).unwrap();
        let b0 = curvature_bundle(&m).unwrap();
        let inv = apply(
            &MobiusMap::identity().then(MobiusStep::Invert([4.0, 0.5, 0.0, 0.0])),
            &m,
        )
        .unwrap();
        let b1 = curvature_bundle(&inv).unwrap();
        assert!(
            (b0.willmore - b1.willmore).abs() / b0.willmore < 0.01,
            "{} vs {}",
            b0.willmore,
            b1.willmore
        );
    }

    #[test]
    fn singular_inversion_rejected() {
        let m = icosphere(2, 1.0).unwrap();
        let center = m.positions()[0];
        let err = apply(
            &MobiusMap::identity().then(MobiusStep::Invert(center)),
            &m,
        )
        .unwrap_err();
        assert_eq!(err, Error::SingularInversion);
    }

    #[test]
    fn empty_ball_near_icosphere() {
        let m = icosphere(2, 1.0).unwrap();
        let x = find_empty_ball(&m, geom::ZERO).unwrap();
        // exterior point at distance about 2 works; verify disjointness
        for f in m.faces() {
            let p = m.positions();
            assert!(geom::point_triangle_dist_sq(x, p[f[0]], p[f[1]], p[f[2]]) > 1.0);
        }
        assert!(geom::norm(x) <= 2.5 + 1e-12);
    }

    #[test]
    fn normalize_torus_certificate() {
        let m = generate(&SurfaceSpec::TorusOfRevolution {
            major: 2.0,
            minor: 1.0,
            res_u: 48,
            res_v: 32,
        })
        .unwrap();
        let b = curvature_bundle(&m).unwrap();
        let (cert, out) = normalize(&m, &b).unwrap();
        assert!(cert.enclosing_radius <= 1.0 + 1e-6, "{}", cert.enclosing_radius);
        let out_b = curvature_bundle(&out).unwrap();
        let e = energy_atoms(&out_b).iter().sum::<f64>();
        assert!(
            cert.max_ball_energy <= 0.5 * e + 0.05 * e,
            "max ball {} vs E/2 {}",
            cert.max_ball_energy,
            0.5 * e
        );
        assert!(cert.rho0 > 0.0 && cert.rho0 < 0.5);
        assert_eq!(out.genus(), 1);

        // determinism: identical input bits give identical certificate bits
        let (cert2, _) = normalize(&m, &b).unwrap();
        assert_eq!(cert.rho0.to_bits(), cert2.rho0.to_bits());
        assert_eq!(cert.max_ball_energy.to_bits(), cert2.max_ball_energy.to_bits());
        assert_eq!(cert.enclosing_radius.to_bits(), cert2.enclosing_radius.to_bits());
    }
}
