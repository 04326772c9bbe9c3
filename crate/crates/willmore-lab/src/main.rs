use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use willmore_lab::error::LabError;
use willmore_lab::io::save_obj;
use willmore_lab::pipeline::{
    cmd_analyze, cmd_gausscheck, cmd_modulus, cmd_normalize, cmd_sweep, cmd_uniformize,
    default_beta_table, sweep_csv_rows, AnalyzeConfig, FamilySpec, GausscheckConfig,
    NormalizeConfig, SweepConfig, Tolerances, UniformizeConfig,
};
use willmore_lab::report::{write_csv, write_json};
use willmore_lab::source::{GenSpec, MeshSource};

#[derive(Parser)]
#[command(name = "willmore", version, about = "Willmore-energy laboratory for closed triangle meshes in R3/R4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energies, Gauss-Bonnet residual, density (Li-Yau) samples, class membership
    Analyze(AnalyzeArgs),
    /// Moebius normalization: unit enclosing ball + E/2 ball-energy certificate
    Normalize(PlainArgs),
    /// Constant-curvature conformal factor (Liouville solve)
    Uniformize(PlainArgs),
    /// Flat-torus modulus (a, b) and systole for genus-1 meshes
    Modulus(PlainArgs),
    /// Energies, membership and moduli across a parametric genus-1 family
    Sweep(SweepArgs),
    /// Split Gauss-map diagnostics in R4 (R3 inputs are lifted)
    Gausscheck(GausscheckArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Generator: sphere | torus | clifford | clifford-stereo | necked
    #[arg(long = "gen", conflicts_with = "input")]
    gen: Option<String>,
    /// Mesh file: .obj (3 or 4 floats per vertex line) or .json
    #[arg(long)]
    input: Option<PathBuf>,
    /// Refinement level for sphere / necked generators
    #[arg(long, default_value_t = 4)]
    subdiv: usize,
    /// Grid resolution per period for torus generators
    #[arg(long, default_value_t = 64)]
    res: usize,
    /// Major radius for --gen torus (default sqrt(2))
    #[arg(long)]
    major: Option<f64>,
    /// Minor radius for --gen torus
    #[arg(long, default_value_t = 1.0)]
    minor: f64,
    /// Genus for --gen necked
    #[arg(long, default_value_t = 1)]
    genus: usize,
    /// Sphere gap for --gen necked
    #[arg(long, default_value_t = 0.2)]
    gap: f64,
    /// Neck waist radius for --gen necked
    #[arg(long, default_value_t = 0.05)]
    neck: f64,
}

impl SourceArgs {
    fn to_source(&self) -> Result<MeshSource, LabError> {
        if let Some(path) = &self.input {
            return Ok(MeshSource::Input(path.clone()));
        }
        let name = self
            .gen
            .as_deref()
            .ok_or_else(|| LabError::Config("exactly one of --gen or --input is required".into()))?;
        let spec = match name {
            "sphere" => GenSpec::Sphere {
                subdiv: self.subdiv,
            },
            "torus" => GenSpec::Torus {
                major: self.major.unwrap_or(std::f64::consts::SQRT_2),
                minor: self.minor,
                res_u: self.res,
                res_v: self.res,
            },
            "clifford" => GenSpec::Clifford { res: self.res },
            "clifford-stereo" => GenSpec::CliffordStereo { res: self.res },
            "necked" => GenSpec::Necked {
                genus: self.genus,
                gap: self.gap,
                neck: self.neck,
                subdiv: self.subdiv,
            },
            other => {
                return Err(LabError::Config(format!(
                    "unknown generator '{other}' (sphere | torus | clifford | clifford-stereo | necked)"
                )))
            }
        };
        Ok(MeshSource::Gen(spec))
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory for reports
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Tolerance override NAME=VALUE (repeatable)
    #[arg(long = "tol", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
}

impl CommonArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances(self.tol.iter().cloned().collect())
    }
}

#[derive(Args)]
struct PlainArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Ambient dimension for energy thresholds
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    n: u8,
    /// Margin below omega for class membership (enables the membership block)
    #[arg(long)]
    delta: Option<f64>,
    /// Beta-table entry GENUS=VALUE (repeatable; defaults: 0=4pi, 1=2pi^2 conjectured)
    #[arg(long = "beta", value_parser = parse_beta)]
    beta: Vec<(usize, f64)>,
    /// Seed for density sample points
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Family: necked | revolution
    #[arg(long)]
    family: String,
    /// Genus of the necked family
    #[arg(long = "p", default_value_t = 1)]
    genus: usize,
    /// Comma-separated gaps for the necked family
    #[arg(long, value_delimiter = ',')]
    gaps: Vec<f64>,
    /// Neck waist = neck-ratio * gap (default: tangency-balanced per gap)
    #[arg(long)]
    neck_ratio: Option<f64>,
    /// Refinement level for the necked family
    #[arg(long, default_value_t = 4)]
    subdiv: usize,
    /// Comma-separated aspect ratios for the revolution family (minor radius 1)
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    /// Grid resolution per period for the revolution family
    #[arg(long, default_value_t = 64)]
    res: usize,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    n: u8,
    /// Membership margin below omega
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long = "beta", value_parser = parse_beta)]
    beta: Vec<(usize, f64)>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GausscheckArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Seed for the random (p, q) pairs of the exactness check
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value.parse().map_err(|_| format!("bad value in '{s}'"))?;
    Ok((name.to_string(), value))
}

fn parse_beta(s: &str) -> Result<(usize, f64), String> {
    let (genus, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected GENUS=VALUE, got '{s}'"))?;
    let genus: usize = genus.parse().map_err(|_| format!("bad genus in '{s}'"))?;
    let value: f64 = value.parse().map_err(|_| format!("bad value in '{s}'"))?;
    if value <= 0.0 {
        return Err(format!("beta must be positive, got '{s}'"));
    }
    Ok((genus, value))
}

fn beta_table(overrides: &[(usize, f64)]) -> BTreeMap<usize, f64> {
    let mut table = default_beta_table();
    for &(g, v) in overrides {
        table.insert(g, v);
    }
    table
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Analyze(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let report = cmd_analyze(AnalyzeConfig {
                command: "analyze",
                source: args.source.to_source()?,
                n: args.n as usize,
                delta: args.delta,
                beta_table: beta_table(&args.beta),
                seed: args.seed,
                tol: args.common.tolerances(),
            })?;
            let path = args.common.out.join("analyze.json");
            write_json(&path, &report)?;
            println!(
                "analyze {}: W = {:.6}, W/4pi = {:.6}, report {}",
                report.config.source.id(),
                report.willmore,
                report.willmore_over_4pi,
                path.display()
            );
        }
        Command::Normalize(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let (report, _cert, mesh) = cmd_normalize(NormalizeConfig {
                command: "normalize",
                source: args.source.to_source()?,
                tol: args.common.tolerances(),
            })?;
            let mesh_path = args.common.out.join("normalized.obj");
            save_obj(&mesh, &mesh_path)?;
            let path = args.common.out.join("normalize.json");
            write_json(&path, &report)?;
            println!(
                "normalize {}: enclosing radius {:.6}, ball energy {:.6} <= E/2 = {:.6}, mesh {}",
                report.config.source.id(),
                report.enclosing_radius,
                report.max_ball_energy,
                report.half_energy,
                mesh_path.display()
            );
        }
        Command::Uniformize(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let report = cmd_uniformize(UniformizeConfig {
                command: "uniformize",
                source: args.source.to_source()?,
                tol: args.common.tolerances(),
            })?;
            let path = args.common.out.join("uniformize.json");
            write_json(&path, &report)?;
            println!(
                "uniformize {}: max|u| = {:.6}, residual {:.3e}, report {}",
                report.config.source.id(),
                report.max_abs_u,
                report.residual_inf,
                path.display()
            );
        }
        Command::Modulus(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let report = cmd_modulus(UniformizeConfig {
                command: "modulus",
                source: args.source.to_source()?,
                tol: args.common.tolerances(),
            })?;
            let path = args.common.out.join("modulus.json");
            write_json(&path, &report)?;
            println!(
                "modulus {}: (a, b) = ({:.6}, {:.6}), systole {:.6}, report {}",
                report.config.source.id(),
                report.a,
                report.b,
                report.systole,
                path.display()
            );
        }
        Command::Sweep(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let family = match args.family.as_str() {
                "necked" => {
                    if args.gaps.is_empty() {
                        return Err(LabError::Config("--gaps required for --family necked".into()));
                    }
                    FamilySpec::Necked {
                        genus: args.genus,
                        gaps: args.gaps.clone(),
                        neck_ratio: args.neck_ratio,
                        subdiv: args.subdiv,
                    }
                }
                "revolution" => {
                    if args.ratios.is_empty() {
                        return Err(LabError::Config(
                            "--ratios required for --family revolution".into(),
                        ));
                    }
                    FamilySpec::Revolution {
                        ratios: args.ratios.clone(),
                        res_u: args.res,
                        res_v: args.res,
                    }
                }
                other => {
                    return Err(LabError::Config(format!(
                        "unknown family '{other}' (necked | revolution)"
                    )))
                }
            };
            let report = cmd_sweep(SweepConfig {
                command: "sweep",
                family,
                n: args.n as usize,
                delta: args.delta,
                beta_table: beta_table(&args.beta),
                tol: args.common.tolerances(),
            })?;
            let json_path = args.common.out.join("sweep.json");
            write_json(&json_path, &report)?;
            let (header, rows) = sweep_csv_rows(&report);
            let csv_path = args.common.out.join("sweep.csv");
            write_csv(&csv_path, &header, &rows)?;
            println!(
                "sweep: {} meshes, reports {} and {}",
                report.rows.len(),
                json_path.display(),
                csv_path.display()
            );
        }
        Command::Gausscheck(args) => {
            std::fs::create_dir_all(&args.common.out)?;
            let report = cmd_gausscheck(GausscheckConfig {
                command: "gausscheck",
                source: args.source.to_source()?,
                seed: args.seed,
                tol: args.common.tolerances(),
            })?;
            let path = args.common.out.join("gausscheck.json");
            write_json(&path, &report)?;
            println!(
                "gausscheck {}: deg = ({}, {}), pullback residuals ({:.4}, {:.4}), xi max error {:.3e}, report {}",
                report.config.source.id(),
                report.deg_plus,
                report.deg_minus,
                report.pullback_rel_residual_plus,
                report.pullback_rel_residual_minus,
                report.xi_max_error,
                path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
