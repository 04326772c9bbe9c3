//! Command implementations behind the CLI: each builds a serializable report
//! from a mesh source. File writing stays in the binary so tests can call
//! these directly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use willmore_core::curvature::{curvature_bundle, density_report, gauss_bonnet_total};
use willmore_core::gaussmap4::{
    degree, grassmann_split, hoffman_osserman_jacobian, pullback_area_check, xi_exactness_check,
};
use willmore_core::geom::{self, Vec4};
use willmore_core::mesh::TriMesh;
use willmore_core::moduli::{compactness_sweep, torus_modulus};
use willmore_core::moebius::{normalize, MobiusStep, NormalizationCertificate};
use willmore_core::uniformize::{class_membership, omega_constant, solve_liouville};

use crate::error::LabError;
use crate::io::fmt_f64;
use crate::report::tool_version;
use crate::source::MeshSource;

/// Named tolerance overrides from `--tol NAME=VALUE`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Tolerances(pub BTreeMap<String, f64>);

impl Tolerances {
    pub fn get(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }
}

/// Default β table: β₀ = 4π; β₁ = 2π² is conjectural, all higher genera must
/// be supplied explicitly.
pub fn default_beta_table() -> BTreeMap<usize, f64> {
    let mut t = BTreeMap::new();
    t.insert(0, 4.0 * PI);
    t.insert(1, 2.0 * PI * PI);
    t
}

pub const BETA_NOTE: &str = "beta(1) = 2*pi^2 is conjectured, not proven";

/// `count` points on the surface: faces sampled by area, uniform barycentric
/// coordinates within each face. Deterministic for a fixed seed.
pub fn random_surface_points(mesh: &TriMesh, count: usize, seed: u64) -> Vec<Vec4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cumulative: Vec<f64> = {
        let mut acc = 0.0;
        (0..mesh.face_count())
            .map(|f| {
                acc += mesh.face_area(f);
                acc
            })
            .collect()
    };
    let total = *cumulative.last().expect("nonempty mesh");
    (0..count)
        .map(|_| {
            let t = rng.gen::<f64>() * total;
            let f = cumulative.partition_point(|&c| c < t).min(mesh.face_count() - 1);
            let [a, b, c] = mesh.faces()[f];
            // uniform barycentric via the square-root trick
            let r1 = rng.gen::<f64>().sqrt();
            let r2 = rng.gen::<f64>();
            let (wa, wb, wc) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
            let pos = mesh.positions();
            let mut p = geom::scale(pos[a], wa);
            p = geom::axpy(wb, pos[b], p);
            geom::axpy(wc, pos[c], p)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct AnalyzeConfig {
    pub command: &'static str,
    pub source: MeshSource,
    pub n: usize,
    pub delta: Option<f64>,
    pub beta_table: BTreeMap<usize, f64>,
    pub seed: u64,
    pub tol: Tolerances,
}

#[derive(Serialize)]
pub struct DensitySample {
    pub center: Vec<f64>,
    pub ratios: Vec<f64>,
    pub limit: f64,
    pub under_resolved: bool,
}

#[derive(Serialize)]
pub struct LiYauReport {
    /// W / 4π: the density bound.
    pub bound: f64,
    pub radii: Vec<f64>,
    pub samples: Vec<DensitySample>,
    pub max_limit: f64,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct MembershipReport {
    pub n: usize,
    pub delta: f64,
    pub beta_tilde: f64,
    pub omega: f64,
    pub member: bool,
    pub beta_note: &'static str,
}

#[derive(Serialize)]
pub struct AnalyzeReport {
    pub config: AnalyzeConfig,
    pub version: &'static str,
    pub vertices: usize,
    pub faces: usize,
    pub genus: usize,
    pub euler_characteristic: i64,
    pub area: f64,
    pub willmore: f64,
    pub willmore_over_4pi: f64,
    pub tracefree_energy: f64,
    pub gauss_bonnet_residual: f64,
    pub gauss_bonnet_pass: bool,
    pub li_yau: LiYauReport,
    pub membership: Option<MembershipReport>,
}

pub fn cmd_analyze(config: AnalyzeConfig) -> Result<AnalyzeReport, LabError> {
    let mesh = config.source.load()?;
    let bundle = curvature_bundle(&mesh)?;
    let chi = mesh.euler_characteristic();
    let gb_residual = (gauss_bonnet_total(&bundle) - 2.0 * PI * chi as f64).abs();
    let gb_tol = config.tol.get("gauss-bonnet", 1e-10);

    let diam = mesh.diameter();
    let radii: Vec<f64> = [0.45, 0.3, 0.15].iter().map(|s| s * diam).collect();
    let dim = mesh.ambient_dim();
    let mut samples = Vec::new();
    let mut max_limit = f64::NEG_INFINITY;
    for center in random_surface_points(&mesh, 8, config.seed) {
        let rep = density_report(&mesh, &bundle, center, &radii);
        max_limit = max_limit.max(rep.limit_estimate);
        samples.push(DensitySample {
            center: center[..dim].to_vec(),
            ratios: rep.ratios,
            limit: rep.limit_estimate,
            under_resolved: rep.under_resolved,
        });
    }
    let bound = bundle.willmore / (4.0 * PI);
    let li_yau = LiYauReport {
        bound,
        radii,
        max_limit,
        pass: max_limit <= bound + config.tol.get("li-yau", 0.05),
        samples,
    };

    let genus = mesh.genus();
    let membership = match config.delta {
        Some(delta) if genus >= 1 => {
            let thresholds = omega_constant(config.n, genus, &config.beta_table)?;
            Some(MembershipReport {
                n: config.n,
                delta,
                beta_tilde: thresholds.beta_tilde,
                omega: thresholds.omega,
                member: class_membership(bundle.willmore, &thresholds, delta),
                beta_note: BETA_NOTE,
            })
        }
        _ => None,
    };

    Ok(AnalyzeReport {
        version: tool_version(),
        vertices: mesh.vertex_count(),
        faces: mesh.face_count(),
        genus,
        euler_characteristic: chi,
        area: bundle.total_area,
        willmore: bundle.willmore,
        willmore_over_4pi: bound,
        tracefree_energy: bundle.tracefree_energy,
        gauss_bonnet_residual: gb_residual,
        gauss_bonnet_pass: gb_residual <= gb_tol,
        li_yau,
        membership,
        config,
    })
}

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct NormalizeConfig {
    pub command: &'static str,
    pub source: MeshSource,
    pub tol: Tolerances,
}

#[derive(Serialize)]
pub struct NormalizeReport {
    pub config: NormalizeConfig,
    pub version: &'static str,
    pub steps: Vec<String>,
    pub rho0: f64,
    pub max_ball_energy: f64,
    pub half_energy: f64,
    pub enclosing_radius: f64,
    pub willmore: f64,
    pub tracefree_energy: f64,
}

fn render_step(step: &MobiusStep) -> String {
    let v = |x: Vec4, d: usize| {
        x[..d]
            .iter()
            .map(|c| fmt_f64(*c))
            .collect::<Vec<_>>()
            .join(" ")
    };
    match step {
        MobiusStep::Translate(t) => format!("translate {}", v(*t, 4)),
        MobiusStep::Dilate(l) => format!("dilate {}", fmt_f64(*l)),
        MobiusStep::Invert(c) => format!("invert {}", v(*c, 4)),
    }
}

pub fn cmd_normalize(
    config: NormalizeConfig,
) -> Result<(NormalizeReport, NormalizationCertificate, TriMesh), LabError> {
    let mesh = config.source.load()?;
    let bundle = curvature_bundle(&mesh)?;
    let (cert, out_mesh) = normalize(&mesh, &bundle)?;
    let out_bundle = curvature_bundle(&out_mesh)?;
    let report = NormalizeReport {
        version: tool_version(),
        steps: cert.map.steps.iter().map(render_step).collect(),
        rho0: cert.rho0,
        max_ball_energy: cert.max_ball_energy,
        half_energy: 0.5 * out_bundle.tracefree_energy,
        enclosing_radius: cert.enclosing_radius,
        willmore: out_bundle.willmore,
        tracefree_energy: out_bundle.tracefree_energy,
        config,
    };
    Ok((report, cert, out_mesh))
}

// ---------------------------------------------------------------------------
// uniformize / modulus
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct UniformizeConfig {
    pub command: &'static str,
    pub source: MeshSource,
    pub tol: Tolerances,
}

#[derive(Serialize)]
pub struct UniformizeReport {
    pub config: UniformizeConfig,
    pub version: &'static str,
    pub genus: usize,
    pub max_abs_u: f64,
    pub osc_u: f64,
    pub residual_inf: f64,
    pub k_g0: f64,
    pub area_g: f64,
    pub area_g0: f64,
}

pub fn cmd_uniformize(config: UniformizeConfig) -> Result<UniformizeReport, LabError> {
    let mesh = config.source.load()?;
    let r = solve_liouville(&mesh)?;
    Ok(UniformizeReport {
        version: tool_version(),
        genus: mesh.genus(),
        max_abs_u: r.max_abs_u,
        osc_u: r.osc_u,
        residual_inf: r.residual_inf,
        k_g0: r.k_g0,
        area_g: r.area_g,
        area_g0: r.area_g0,
        config,
    })
}

#[derive(Serialize)]
pub struct ModulusReport {
    pub config: UniformizeConfig,
    pub version: &'static str,
    pub a: f64,
    pub b: f64,
    pub systole: f64,
    pub period_matrix: [[f64; 2]; 2],
    pub max_abs_u: f64,
    pub residual_inf: f64,
}

pub fn cmd_modulus(config: UniformizeConfig) -> Result<ModulusReport, LabError> {
    let mesh = config.source.load()?;
    let r = solve_liouville(&mesh)?;
    let m = torus_modulus(&mesh, &r)?;
    Ok(ModulusReport {
        version: tool_version(),
        a: m.a,
        b: m.b,
        systole: m.systole,
        period_matrix: m.period_matrix,
        max_abs_u: r.max_abs_u,
        residual_inf: r.residual_inf,
        config,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// Necked spheres with shrinking gaps.  The neck waist is neck_ratio·gap
    /// when given, otherwise the tangency-balanced waist for each gap.
    Necked {
        genus: usize,
        gaps: Vec<f64>,
        neck_ratio: Option<f64>,
        subdiv: usize,
    },
    /// Tori of revolution with varying aspect ratio (minor radius 1).
    Revolution {
        ratios: Vec<f64>,
        res_u: usize,
        res_v: usize,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<Vec<(String, TriMesh)>, LabError> {
        use crate::source::GenSpec;
        let mut family = Vec::new();
        match self {
            FamilySpec::Necked {
                genus,
                gaps,
                neck_ratio,
                subdiv,
            } => {
                for &gap in gaps {
                    let neck = match neck_ratio {
                        Some(r) => r * gap,
                        None => willmore_core::generate::default_neck_radius(gap),
                    };
                    let spec = GenSpec::Necked {
                        genus: *genus,
                        gap,
                        neck,
                        subdiv: *subdiv,
                    };
                    family.push((spec.id(), spec.build()?));
                }
            }
            FamilySpec::Revolution { ratios, res_u, res_v } => {
                for &ratio in ratios {
                    let spec = GenSpec::Torus {
                        major: ratio,
                        minor: 1.0,
                        res_u: *res_u,
                        res_v: *res_v,
                    };
                    family.push((spec.id(), spec.build()?));
                }
            }
        }
        Ok(family)
    }
}

#[derive(Serialize)]
pub struct SweepConfig {
    pub command: &'static str,
    pub family: FamilySpec,
    pub n: usize,
    pub delta: f64,
    pub beta_table: BTreeMap<usize, f64>,
    pub tol: Tolerances,
}

#[derive(Serialize)]
pub struct SweepRowOut {
    pub mesh_id: String,
    pub willmore: f64,
    pub tracefree_energy: f64,
    pub member: bool,
    pub a: f64,
    pub b: f64,
    pub systole: f64,
    pub max_abs_u: f64,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub version: &'static str,
    pub beta_note: &'static str,
    pub rows: Vec<SweepRowOut>,
}

pub fn cmd_sweep(config: SweepConfig) -> Result<SweepReport, LabError> {
    let family = config.family.build()?;
    let rows = compactness_sweep(&family, config.n, config.delta, &config.beta_table)?;
    Ok(SweepReport {
        version: tool_version(),
        beta_note: BETA_NOTE,
        rows: rows
            .into_iter()
            .map(|r| SweepRowOut {
                mesh_id: r.mesh_id,
                willmore: r.willmore,
                tracefree_energy: r.tracefree_energy,
                member: r.member,
                a: r.a,
                b: r.b,
                systole: r.systole,
                max_abs_u: r.max_abs_u,
            })
            .collect(),
        config,
    })
}

pub fn sweep_csv_rows(report: &SweepReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    use crate::report::csv_f64;
    let header = vec![
        "mesh_id",
        "willmore",
        "tracefree_energy",
        "member",
        "a",
        "b",
        "systole",
        "max_abs_u",
    ];
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.mesh_id.clone(),
                csv_f64(r.willmore),
                csv_f64(r.tracefree_energy),
                r.member.to_string(),
                csv_f64(r.a),
                csv_f64(r.b),
                csv_f64(r.systole),
                csv_f64(r.max_abs_u),
            ]
        })
        .collect();
    (header, rows)
}

// ---------------------------------------------------------------------------
// gausscheck
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct GausscheckConfig {
    pub command: &'static str,
    pub source: MeshSource,
    pub seed: u64,
    pub tol: Tolerances,
}

#[derive(Serialize)]
pub struct GausscheckReport {
    pub config: GausscheckConfig,
    pub version: &'static str,
    /// R³ input embedded into R⁴ with zero fourth coordinate.
    pub lifted_from_r3: bool,
    pub faces: usize,
    /// max over faces of |R| − ½|A°|².
    pub r_bound_max_excess: f64,
    pub r_bound_pass: bool,
    pub pullback_rel_residual_plus: f64,
    pub pullback_rel_residual_minus: f64,
    /// Σ|(K±R)·area|; on (near-)flat surfaces the pullback identity is 0 ≈ 0
    /// and the relative residual carries no information.
    pub pullback_signal_plus: f64,
    pub pullback_signal_minus: f64,
    pub pullback_vacuous: bool,
    pub pullback_pass: bool,
    pub deg_plus: i64,
    pub deg_minus: i64,
    pub deg_err_plus: f64,
    pub deg_err_minus: f64,
    pub deg_conclusive: bool,
    pub jacobian_max_rel_disagreement: f64,
    pub jacobian_skipped: usize,
    pub jacobian_pass: bool,
    pub xi_pairs: usize,
    pub xi_step: f64,
    pub xi_max_error: f64,
    pub xi_pass: bool,
}

fn random_unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            2.0 * rng.gen::<f64>() - 1.0,
            2.0 * rng.gen::<f64>() - 1.0,
            2.0 * rng.gen::<f64>() - 1.0,
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 0.01 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn cmd_gausscheck(config: GausscheckConfig) -> Result<GausscheckReport, LabError> {
    let input = config.source.load()?;
    let lifted = input.ambient_dim() == 3;
    let mesh = if lifted {
        TriMesh::new(4, input.positions().to_vec(), input.faces().to_vec())?
    } else {
        input
    };
    let split = grassmann_split(&mesh)?;

    let mut excess = f64::NEG_INFINITY;
    for f in 0..mesh.face_count() {
        excess = excess.max(split.r[f].abs() - 0.5 * split.shapes[f].ao_sq);
    }

    let pull = pullback_area_check(&mesh, &split);
    let deg = degree(&mesh, &split);
    let jac = hoffman_osserman_jacobian(&mesh, &split);
    let mut jac_worst = 0.0f64;
    for f in 0..mesh.face_count() {
        let (a, b) = (jac.closed_form[f], jac.finite_difference[f]);
        if a.is_nan() || b.is_nan() {
            continue;
        }
        jac_worst = jac_worst.max((a - b).abs() / a.abs().max(1e-12));
    }

    let pairs = 100;
    let h = config.tol.get("xi-step", 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut xi_max = 0.0f64;
    for _ in 0..pairs {
        let p = random_unit3(&mut rng);
        let q = loop {
            let q = random_unit3(&mut rng);
            let d2 = (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum::<f64>();
            // the form blows up like 2/|p−q| at the pole and the quadrature
            // error like h²/|p−q|⁴; |p−q| ≥ 0.35 keeps it below 1e−6 at h=1e−4
            if d2 > 0.35 * 0.35 {
                break q;
            }
        };
        xi_max = xi_max.max(xi_exactness_check(p, q, h)?);
    }

    Ok(GausscheckReport {
        version: tool_version(),
        lifted_from_r3: lifted,
        faces: mesh.face_count(),
        r_bound_max_excess: excess,
        r_bound_pass: excess <= config.tol.get("r-bound", 1e-6),
        pullback_rel_residual_plus: pull.rel_residual_plus,
        pullback_rel_residual_minus: pull.rel_residual_minus,
        pullback_signal_plus: pull.signal_plus,
        pullback_signal_minus: pull.signal_minus,
        pullback_vacuous: {
            // total |K±R| mass at discretization-noise level
            let floor = 1e-6 * mesh.face_count() as f64;
            pull.signal_plus < floor && pull.signal_minus < floor
        },
        pullback_pass: {
            let tol = config.tol.get("pullback", 0.05);
            let floor = 1e-6 * mesh.face_count() as f64;
            (pull.signal_plus < floor && pull.signal_minus < floor)
                || (pull.rel_residual_plus <= tol && pull.rel_residual_minus <= tol)
        },
        deg_plus: deg.deg_plus,
        deg_minus: deg.deg_minus,
        deg_err_plus: deg.err_plus,
        deg_err_minus: deg.err_minus,
        deg_conclusive: deg.conclusive,
        jacobian_max_rel_disagreement: jac_worst,
        jacobian_skipped: jac.skipped,
        jacobian_pass: jac_worst <= config.tol.get("jacobian", 0.05),
        xi_pairs: pairs,
        xi_step: h,
        xi_max_error: xi_max,
        xi_pass: xi_max <= config.tol.get("xi", 1e-6),
        config,
    })
}
