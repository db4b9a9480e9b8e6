//! `geomreach`: generate synthetic shapes, analyse point clouds, verify
//! reach inequalities.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geomreach::geodesics::GraphParams;
use geomreach::io::{self, Manifest, ShapeRecord};
use geomreach::patch::random_angle_bound_sweep;
use geomreach::report::{self, AnalysisConfig, Tolerances};
use geomreach::shapes::ShapeArgs;
use geomreach::{Error, PointCloud};
use serde_json::json;

#[derive(Parser)]
#[command(name = "geomreach", version, about = "Reach estimation for sampled manifolds and closed sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic shape to CSV, with a manifest and its ground truth.
    Gen(GenArgs),
    /// Estimate every reach quantity and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Run the verification checks; exit 1 if any fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// circle, sphere, ellipse, torus, two_spheres, fillet, fillet_extruded,
    /// segment or plane_patch.
    #[arg(long)]
    shape: String,
    /// Radius (circle, sphere, each of two_spheres) or major radius (torus).
    #[arg(long = "R")]
    big_r: Option<f64>,
    /// Minor radius of the torus.
    #[arg(long = "r")]
    small_r: Option<f64>,
    /// Ellipse semi-axis along x.
    #[arg(long)]
    a: Option<f64>,
    /// Ellipse semi-axis along y.
    #[arg(long)]
    b: Option<f64>,
    /// Half the distance between the two spheres.
    #[arg(long)]
    g: Option<f64>,
    /// Fillet radius.
    #[arg(long)]
    rho: Option<f64>,
    /// Fillet leg length and extrusion width, segment length, plane side.
    #[arg(long)]
    extent: Option<f64>,
    /// Number of samples (per sphere for two_spheres).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; defaults to `<shape>.csv`.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Point CSV. A `<stem>.manifest.json` next to it is read if present.
    input: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for diagnostic CSVs.
    #[arg(long)]
    plots_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Point CSV; not needed with --sweep.
    input: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Verify against this reach value instead of the estimate.
    #[arg(long)]
    rch_value: Option<f64>,
    /// Verdict JSON path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Check the operator-norm angle bound on random pairs of linear maps
    /// instead of a point cloud.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value_t = 1000)]
    sweep_pairs: usize,
    #[arg(long, default_value_t = 5)]
    sweep_max_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricChoice {
    /// Closed-form distances when the manifest names a shape that
    /// reproduces the file exactly, graph paths otherwise.
    Auto,
    Graph,
    /// Closed-form distances; an error when they are unavailable.
    Exact,
}

#[derive(Args)]
struct ConfigArgs {
    /// Source of intrinsic distances.
    #[arg(long, value_enum, default_value_t = MetricChoice::Auto)]
    metric: MetricChoice,
    /// k-nearest-neighbour graph (default max(2n, 6)).
    #[arg(long, conflicts_with = "radius")]
    knn: Option<usize>,
    /// Radius graph.
    #[arg(long)]
    radius: Option<f64>,
    /// Strictly decreasing local-reach radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,
    #[arg(long)]
    emptiness_tol: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    alpha: Option<f64>,
    /// Replace tangent columns by local PCA estimates.
    #[arg(long)]
    estimate_tangents: bool,
    /// Intrinsic dimension, needed when the input has no tangent columns.
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    #[arg(long = "tol-lemma-2-2")]
    tol_lemma_2_2: Option<f64>,
    #[arg(long = "tol-theorem-2")]
    tol_theorem_2: Option<f64>,
    #[arg(long = "tol-theorem-3")]
    tol_theorem_3: Option<f64>,
    #[arg(long = "tol-lemma-7-5")]
    tol_lemma_7_5: Option<f64>,
    #[arg(long = "tol-lemma-6-6")]
    tol_lemma_6_6: Option<f64>,
    #[arg(long = "tol-lemma-6-7")]
    tol_lemma_6_7: Option<f64>,
    #[arg(long = "tol-lemma-6-8")]
    tol_lemma_6_8: Option<f64>,
    #[arg(long = "tol-lemma-6-10")]
    tol_lemma_6_10: Option<f64>,
}

impl ConfigArgs {
    fn build(&self, rch_value: Option<f64>, cloud: &PointCloud, manifest: Option<&Manifest>) -> Result<AnalysisConfig, Error> {
        let geodesic = match (self.metric, manifest) {
            (MetricChoice::Graph, _) => None,
            (_, Some(m)) => m.analytic_geodesic(cloud)?,
            (_, None) => None,
        };
        if self.metric == MetricChoice::Exact && geodesic.is_none() {
            return Err(Error::InvalidParameter(
                "--metric exact needs a manifest naming a shape with closed-form geodesics that reproduces the input"
                    .into(),
            ));
        }
        let d = Tolerances::default();
        Ok(AnalysisConfig {
            geodesic,
            graph: match (self.knn, self.radius) {
                (Some(k), _) => Some(GraphParams::Knn(k)),
                (_, Some(r)) => Some(GraphParams::Radius(r)),
                _ => None,
            },
            rho_grid: self.rho_grid.clone(),
            emptiness_tol: self.emptiness_tol,
            epsilon: self.epsilon,
            alpha: self.alpha,
            tolerances: Tolerances {
                lemma_2_2: self.tol_lemma_2_2.unwrap_or(d.lemma_2_2),
                theorem_2: self.tol_theorem_2.unwrap_or(d.theorem_2),
                theorem_3: self.tol_theorem_3.unwrap_or(d.theorem_3),
                lemma_7_5: self.tol_lemma_7_5.unwrap_or(d.lemma_7_5),
                lemma_6_6: self.tol_lemma_6_6.unwrap_or(d.lemma_6_6),
                lemma_6_7: self.tol_lemma_6_7.unwrap_or(d.lemma_6_7),
                lemma_6_8: self.tol_lemma_6_8.unwrap_or(d.lemma_6_8),
                lemma_6_10: self.tol_lemma_6_10.unwrap_or(d.lemma_6_10),
            },
            estimate_tangents: self.estimate_tangents,
            intrinsic_dim: self.intrinsic_dim,
            rch_value,
            ..AnalysisConfig::default()
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a).map(|_| true),
        Command::Analyze(a) => cmd_analyze(&a).map(|_| true),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GEOMREACH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GEOMREACH_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn cmd_gen(a: &GenArgs) -> Result<(), Error> {
    let shape = ShapeArgs {
        big_r: a.big_r,
        small_r: a.small_r,
        a: a.a,
        b: a.b,
        g: a.g,
        rho: a.rho,
        extent: a.extent,
    }
    .build(&a.shape)?;
    let sample = shape.generate(a.n, a.seed)?;
    let out = a.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", shape.name())));
    io::write_csv(&out, &sample.cloud)?;
    let mut manifest = Manifest::for_cloud(&sample.cloud);
    manifest.shape = Some(ShapeRecord {
        shape,
        samples: a.n,
        seed: a.seed,
    });
    manifest.ground_truth = Some(sample.ground_truth);
    io::write_json(&io::manifest_path(&out), &manifest.to_json())?;
    io::write_json(&io::ground_truth_path(&out), &io::ground_truth_json(&sample.ground_truth))?;
    eprintln!(
        "wrote {} points of {} to {}",
        sample.cloud.len(),
        shape.name(),
        out.display()
    );
    Ok(())
}

fn load(input: &Path) -> Result<(PointCloud, Option<Manifest>), Error> {
    let cloud = io::read_csv(input)?;
    let mpath = io::manifest_path(input);
    if !mpath.exists() {
        return Ok((cloud, None));
    }
    let manifest = io::read_manifest(&mpath)?;
    manifest.check(&cloud)?;
    let cloud = match manifest.n {
        Some(n) if cloud.intrinsic_dim().is_none() => cloud.with_intrinsic_dim(n)?,
        _ => cloud,
    };
    Ok((cloud, Some(manifest)))
}

fn emit(path: Option<&Path>, v: &serde_json::Value) -> Result<(), Error> {
    match path {
        Some(p) => io::write_json(p, v),
        None => {
            println!("{}", serde_json::to_string_pretty(v)?);
            Ok(())
        }
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), Error> {
    let (cloud, manifest) = load(&a.input)?;
    let config = a.config.build(None, &cloud, manifest.as_ref())?;
    let analysis = report::analyze(&cloud, &config, manifest.and_then(|m| m.ground_truth))?;
    if let Some(dir) = &a.plots_dir {
        report::write_plots(&analysis, dir)?;
    }
    emit(a.report.as_deref(), &analysis.report.to_json(&config))
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool, Error> {
    if a.sweep {
        let s = random_angle_bound_sweep(a.sweep_pairs, a.sweep_max_dim, a.seed)?;
        let pass = s.failures == 0;
        let v = json!({
            "checks": {
                "lemma_6_8": {
                    "pass": pass,
                    "value": io::json_f64(s.worst_excess),
                    "bound": 1e-12,
                    "pairs": s.pairs,
                    "failures": s.failures,
                }
            },
            "pass": pass,
        });
        emit(a.report.as_deref(), &v)?;
        eprintln!("lemma_6_8 sweep: {} pairs, {} failures", s.pairs, s.failures);
        return Ok(pass);
    }
    let input = a
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("verify needs an input CSV unless --sweep is given".into()))?;
    let (cloud, manifest) = load(input)?;
    let config = a.config.build(a.rch_value, &cloud, manifest.as_ref())?;
    let analysis = report::analyze(&cloud, &config, manifest.and_then(|m| m.ground_truth))?;
    let r = &analysis.report;
    let mut v = r.to_json(&config);
    v["pass"] = json!(r.all_pass());
    emit(a.report.as_deref(), &v)?;
    eprint!("{}", report::verdict_table(r));
    for (name, c) in &r.checks {
        if !c.pass() {
            eprintln!(
                "{name} failed: value {} bound {} witness {}",
                io::format_f64(c.value),
                io::format_f64(c.bound),
                c.witness.as_ref().map_or("none".to_string(), |w| w.to_string())
            );
        }
    }
    Ok(r.all_pass())
}
