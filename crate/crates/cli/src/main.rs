use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use spherefield::capacity::{
    capacity_from_quadrature, integrability_test, resolvable_eps, EnergyQuadrature, QuadratureSpec, FAMILY_GAMMAS,
};
use spherefield::covariance::{write_table_csv, CovarianceModel, TableKind};
use spherefield::experiments::criteria::{run_criterion, CRITERIA};
use spherefield::experiments::diagnostics::{
    default_c_grid, fit_oscillation_constant, hitting_scan, level_set_runs, oscillation_tail, slnd_scan,
    smooth_event, OscillationTailSetup, SmoothEventSetup,
};
use spherefield::experiments::report::{aggregate, merge_tables, stamp_csv, theory_header, RunRecord, VerifyReport};
use spherefield::experiments::{ExperimentConfig, SpectrumSpec};
use spherefield::geom::{Cap, SpherePoint};
use spherefield::grid::{EquiangularGrid, Grid};
use spherefield::level_set::{default_tolerance, extract_level_set};
use spherefield::local_time::{default_bandwidth, local_time_estimate, Region};
use spherefield::rng::derive_seed;
use spherefield::spectrum::PowerSpectrum;
use spherefield::stats::{linear_fit, median};
use spherefield::synthesis::vector_field;
use spherefield::voronoi::VoronoiHierarchy;
use spherefield::Error;

/// Replicate floor of `oscillation-tail`.
const OSCILLATION_REPLICATES: usize = 500;

#[derive(Parser)]
#[command(name = "spherefield", version, about = "Isotropic Gaussian random fields on the sphere")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: `<output_dir>/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one field and write it in binary form.
    Simulate,
    /// Covariance table on the configured angles.
    Covariance,
    /// Variogram table and its log-log slope.
    Variogram,
    /// Minimum SLND ratios over random configurations at each configured radius.
    Slnd,
    /// Local time at level 0 for each replicate and bandwidth.
    Localtime,
    /// Level-set points of one replicate.
    Levelset,
    /// Box-counting dimension, premeasure and local time per replicate.
    Dimension,
    /// Energies, traces and capacity of a polar cap.
    Capacity,
    /// ε-hitting frequencies of level 0 across dimensions.
    Hitting,
    /// Oscillation tails of the full field and of the band remainder.
    OscillationTail,
    /// Frequency of the smooth event over a constant grid.
    SmoothEvent,
    /// Run the verification suite.
    VerifyTheory {
        /// Criterion ids, comma separated (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<String>,
    },
    /// Aggregate earlier run records into plot-ready tables.
    Report {
        /// Results root (default: the configured output directory, else `results`).
        input: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Covariance => "covariance",
            Command::Variogram => "variogram",
            Command::Slnd => "slnd",
            Command::Localtime => "localtime",
            Command::Levelset => "levelset",
            Command::Dimension => "dimension",
            Command::Capacity => "capacity",
            Command::Hitting => "hitting",
            Command::OscillationTail => "oscillation-tail",
            Command::SmoothEvent => "smooth-event",
            Command::VerifyTheory { .. } => "verify-theory",
            Command::Report { .. } => "report",
        }
    }
}

enum Failure {
    Hard(String),
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Hard(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Hard(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_) => Failure::Io(msg),
            Error::Csv(ref c) if c.is_io_error() => Failure::Io(msg),
            Error::InvalidParameter { .. }
            | Error::Format(_)
            | Error::Json(_)
            | Error::InsufficientReplicates { .. }
            | Error::GridTooCoarse(_) => Failure::Config(msg),
            _ => Failure::Hard(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Run {
    cfg: ExperimentConfig,
    hash: String,
    seed: u64,
    dir: PathBuf,
    record: RunRecord,
    started: Instant,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.record.outputs.push(name.to_string());
        self.dir.join(name)
    }

    /// Writes `value` with the config hash and seed in front.
    fn json(&mut self, name: &str, value: Value) -> Outcome {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), json!(self.hash));
        obj.insert("seed".into(), json!(self.seed));
        match value {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let path = self.path(name);
        std::fs::write(path, serde_json::to_string_pretty(&Value::Object(obj)).map_err(Error::from)?)?;
        Ok(())
    }

    /// Writes a headed CSV and stamps it with the config hash and seed.
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Outcome {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
        w.write_record(header).map_err(Error::from)?;
        for r in rows {
            w.write_record(r).map_err(Error::from)?;
        }
        w.flush()?;
        drop(w);
        stamp_csv(&path, &self.hash, self.seed)?;
        Ok(())
    }

    fn finish(mut self, summary: Value) -> Outcome {
        self.record.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        self.record.summary = summary;
        self.record.write(&self.dir)?;
        Ok(())
    }

    fn spectrum(&self) -> Result<PowerSpectrum, Failure> {
        Ok(self.cfg.spectrum.build()?)
    }

    fn alpha(&self) -> Result<f64, Failure> {
        self.cfg
            .spectrum
            .alpha()
            .ok_or_else(|| Failure::Config("this command needs a spectrum with a declared α".into()))
    }

    /// Configured grid, or the smallest alias-free full-sphere grid for the degree.
    fn grid(&self, l_max: usize) -> Result<EquiangularGrid, Failure> {
        match &self.cfg.grid {
            Some(g) => Ok(g.build()?),
            None => Ok(EquiangularGrid::for_degree(l_max, 1)),
        }
    }

    /// Polar cap of the configured grid radius, or the whole sphere.
    fn region(&self) -> Result<Region, Failure> {
        match self.cfg.grid.as_ref().and_then(|g| g.cap_radius) {
            Some(r) => Ok(Region::Cap(Cap::new(SpherePoint::north_pole(), r)?)),
            None => Ok(Region::Sphere),
        }
    }

    /// Model with the high-degree tail folded in for declared power laws.
    fn model(&self, s: PowerSpectrum) -> CovarianceModel {
        match self.cfg.spectrum {
            SpectrumSpec::PowerLaw { .. } => CovarianceModel::with_tail_correction(s),
            _ => CovarianceModel::new(s),
        }
    }

    fn level(&self) -> Vec<f64> {
        vec![0.0; self.cfg.d]
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    if let Command::Report { input } = &cli.command {
        let cfg = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
        let root = input
            .clone()
            .or_else(|| cfg.map(|c| c.output_dir))
            .unwrap_or_else(|| PathBuf::from("results"));
        return report(&root, cli.out.as_deref()).map_err(|e| match e {
            Failure::Config(m) => Failure::Io(m),
            other => other,
        });
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config(format!("`{}` needs --config PATH", cli.command.name())))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Io(format!("{}: {io}", path.display())),
        other => Failure::Config(format!("{}: {other}", path.display())),
    })?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let theory = matches!(
        cli.command,
        Command::Dimension
            | Command::Capacity
            | Command::Hitting
            | Command::OscillationTail
            | Command::SmoothEvent
            | Command::VerifyTheory { .. }
    );
    for w in cfg.validate(theory)? {
        eprintln!("warning: {w}");
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.join(cli.command.name()));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let hash = cfg.hash();
    let seed = cfg.seed;
    let run = Run {
        record: RunRecord::new(cli.command.name(), &hash, seed),
        cfg,
        hash,
        seed,
        dir,
        started: Instant::now(),
    };
    match cli.command {
        Command::Simulate => simulate(run),
        Command::Covariance => table(run, TableKind::Covariance),
        Command::Variogram => table(run, TableKind::Variogram),
        Command::Slnd => slnd(run),
        Command::Localtime => localtime(run),
        Command::Levelset => levelset(run),
        Command::Dimension => dimension(run),
        Command::Capacity => capacity(run),
        Command::Hitting => hitting(run),
        Command::OscillationTail => oscillation(run),
        Command::SmoothEvent => smooth(run),
        Command::VerifyTheory { criteria } => verify(run, criteria),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn simulate(mut run: Run) -> Outcome {
    let s = run.spectrum()?;
    let l = s.l_max();
    let grid = Grid::Equiangular(run.grid(l)?);
    let f = vector_field(&s, run.cfg.d, (0, l), &grid, run.seed)?;
    let (mean, variance) = f.summary();
    f.write_binary(&run.path("field.bin"))?;
    let g = grid.equiangular()?;
    let meta = json!({
        "d": f.d(),
        "n_theta": g.n_theta(),
        "n_phi": g.n_phi(),
        "theta_range": g.theta_range(),
        "l_max": l,
        "spectrum_hash": format!("{:016x}", s.hash64()),
        "mean": mean,
        "variance": variance,
        "max_imaginary": f.max_imaginary(),
    });
    run.json("field.json", meta.clone())?;
    println!("mean {mean:.6}  variance {variance:.6}  points {}  components {}", f.len(), f.d());
    run.finish(meta)
}

fn angles(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.radii.is_empty() {
        (0..=180).map(|i| std::f64::consts::PI * i as f64 / 180.0).collect()
    } else {
        cfg.radii.clone()
    }
}

fn table(mut run: Run, kind: TableKind) -> Outcome {
    let model = CovarianceModel::new(run.spectrum()?);
    let thetas = angles(&run.cfg);
    let rows = model.table(&thetas, kind)?;
    let name = match kind {
        TableKind::Covariance => "covariance.csv",
        TableKind::Variogram => "variogram.csv",
    };
    let path = run.path(name);
    write_table_csv(&rows, &path)?;
    stamp_csv(&path, &run.hash, run.seed)?;
    let mut summary = json!({ "rows": rows.len() });
    if kind == TableKind::Variogram {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.theta > 0.0 && r.theta <= 0.1 && r.value > 0.0)
            .map(|r| (r.theta.ln(), r.value.ln()))
            .unzip();
        if x.len() >= 3 {
            let fit = linear_fit(&x, &y)?;
            println!("log-log slope on (0, 0.1]: {:.4}", fit.slope);
            summary["slope"] = json!(fit.slope);
        }
    }
    run.finish(summary)
}

fn slnd(mut run: Run) -> Outcome {
    let model = run.model(run.spectrum()?);
    let scales = if run.cfg.radii.is_empty() { vec![1e-3, 1e-2, 1e-1] } else { run.cfg.radii.clone() };
    let rows = slnd_scan(&model, &scales, run.cfg.replicates, run.seed)?;
    for r in &rows {
        println!("scale {:e}: min {:.4}  median {:.4}", r.scale, r.min, r.median);
    }
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.scale.to_string(), r.configs.to_string(), r.min.to_string(), r.median.to_string()])
        .collect();
    run.csv("slnd.csv", &["scale", "configs", "min", "median"], &out)?;
    run.finish(json!({ "rows": rows }))
}

fn localtime(mut run: Run) -> Outcome {
    let s = run.spectrum()?;
    let l = s.l_max();
    let g = run.grid(l)?;
    let eps = if run.cfg.eps.is_empty() {
        vec![default_bandwidth(run.alpha()?, g.spacing())?]
    } else {
        run.cfg.eps.clone()
    };
    let grid = Grid::Equiangular(g);
    let region = run.region()?;
    let t = run.level();
    let (d, seed) = (run.cfg.d, run.seed);
    let rows: Vec<Vec<Vec<String>>> = (0..run.cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let f = vector_field(&s, d, (0, l), &grid, derive_seed(seed, rep as u64))?;
            eps.iter()
                .map(|&e| {
                    let est = local_time_estimate(&f, &t, &region, e)?;
                    Ok(vec![
                        rep.to_string(),
                        e.to_string(),
                        est.value.to_string(),
                        est.under_resolved.to_string(),
                    ])
                })
                .collect::<spherefield::Result<Vec<_>>>()
        })
        .collect::<spherefield::Result<_>>()?;
    let rows: Vec<Vec<String>> = rows.into_iter().flatten().collect();
    run.csv("localtime.csv", &["replicate", "eps", "local_time", "under_resolved"], &rows)?;
    run.finish(json!({ "rows": rows.len() }))
}

fn levelset(mut run: Run) -> Outcome {
    let s = run.spectrum()?;
    let l = s.l_max();
    let grid = Grid::Equiangular(run.grid(l)?);
    let f = vector_field(&s, run.cfg.d, (0, l), &grid, run.seed)?;
    let eps = match run.cfg.eps.first() {
        Some(&e) => e,
        None => {
            let alpha = run.alpha()?;
            let k = fit_oscillation_constant(&f, alpha, 200)?;
            default_tolerance(alpha, grid.spacing()?, k)?
        }
    };
    let ls = extract_level_set(&f, &run.level(), eps)?;
    let path = run.path("levelset.csv");
    ls.write_csv(&path)?;
    stamp_csv(&path, &run.hash, run.seed)?;
    println!("eps {eps:e}: {} points, {} crossings", ls.points.len(), ls.crossings.len());
    run.finish(json!({ "eps": eps, "points": ls.points.len(), "crossings": ls.crossings.len() }))
}

/// Finest level whose separation `2^{-k}` is at least two grid spacings.
fn default_k_max(g: &EquiangularGrid) -> usize {
    ((1.0 / (2.0 * g.spacing())).log2().floor() as usize).max(2)
}

fn dimension(mut run: Run) -> Outcome {
    if run.cfg.d != 1 {
        return Err(Failure::Config("dimension runs the scalar level set; set d = 1".into()));
    }
    let s = run.spectrum()?;
    let alpha = run.alpha()?;
    let g = run.grid(s.l_max())?;
    let k = run.cfg.k_max.unwrap_or_else(|| default_k_max(&g));
    let h = VoronoiHierarchy::build(k, &g)?;
    let runs = level_set_runs(&s, &h, 0.0, run.cfg.replicates, run.seed)?;
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            let (slope, stderr) = r.fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.slope, f.stderr));
            vec![
                alpha.to_string(),
                "1".into(),
                r.replicate.to_string(),
                r.seed.to_string(),
                r.k_osc.to_string(),
                r.eps.to_string(),
                slope.to_string(),
                stderr.to_string(),
                r.premeasure.to_string(),
                r.local_time.to_string(),
                r.ratio.to_string(),
            ]
        })
        .collect();
    run.csv(
        "dimension.csv",
        &[
            "alpha", "d", "replicate", "replicate_seed", "k_osc", "eps", "slope", "stderr", "premeasure", "local_time",
            "ratio",
        ],
        &rows,
    )?;
    let slopes: Vec<f64> = runs.iter().filter_map(|r| r.fit.as_ref().map(|f| f.slope)).collect();
    let predicted = 2.0 - (alpha - 2.0) / 2.0;
    let m = median(&slopes);
    println!("median slope {m:.4} over {} fits (predicted {predicted})", slopes.len());
    run.finish(json!({ "median_slope": m, "predicted": predicted, "k_max": k }))
}

fn capacity(mut run: Run) -> Outcome {
    let alpha = run.alpha()?;
    let model = run.model(run.spectrum()?);
    let radius = run.cfg.radii.first().copied().unwrap_or(0.1);
    let q = EnergyQuadrature::new(&model, radius, &QuadratureSpec::for_model(&model))?;
    let mut trace = Vec::new();
    let mut results = Vec::new();
    for d in run.cfg.d_values() {
        let est = capacity_from_quadrature(&q, d)?;
        let integrability = match integrability_test(alpha, d, radius) {
            Ok(r) => json!(r.classification),
            Err(Error::Disagreement(m)) => json!(format!("disagreement: {m}")),
            Err(e) => return Err(e.into()),
        };
        for (gamma, e) in FAMILY_GAMMAS.iter().zip(&est.energies) {
            for (j, row) in e.trace.iter().enumerate() {
                trace.push(vec![
                    alpha.to_string(),
                    d.to_string(),
                    gamma.to_string(),
                    j.to_string(),
                    row.theta.to_string(),
                    row.increment.to_string(),
                    row.cumulative.to_string(),
                ]);
            }
        }
        println!("d = {d}: capacity {:e}", est.value);
        results.push(json!({
            "d": d,
            "criterion": 4.0 - (alpha - 2.0) * d as f64,
            "capacity": est.value,
            "integrability": integrability,
            "energies": est.energies.iter().map(|e| json!({
                "measure": e.measure, "status": e.status, "value": e.value, "slope": e.slope,
            })).collect::<Vec<_>>(),
        }));
    }
    run.json("capacity.json", json!({ "alpha": alpha, "radius": radius, "results": results }))?;
    run.csv(
        "energy_trace.csv",
        &["alpha", "d", "gamma", "level", "theta", "increment", "cumulative"],
        &trace,
    )?;
    run.finish(json!({ "radius": radius, "var_identity_residual": q.var_identity_residual() }))
}

fn hitting(mut run: Run) -> Outcome {
    let alpha = run.alpha()?;
    let s = run.spectrum()?;
    let g = run.grid(s.l_max())?;
    let cap = match run.region()? {
        Region::Cap(c) => c,
        Region::Sphere => Cap::sphere(),
    };
    let eps = if run.cfg.eps.is_empty() {
        let floor = resolvable_eps(&CovarianceModel::new(s.clone()), g.spacing())?;
        [8.0, 4.0, 2.0, 1.0].iter().map(|k| k * floor).collect()
    } else {
        run.cfg.eps.clone()
    };
    let ds = run.cfg.d_values();
    let tables = hitting_scan(&s, &ds, cap, &Grid::Equiangular(g), &eps, run.cfg.replicates, run.seed)?;
    let mut rows = Vec::new();
    for t in &tables {
        println!("d = {}: finest-ε frequency {:.3} ({:?})", t.d, t.finest().frequency, t.trend);
        for r in &t.rows {
            rows.push(vec![
                alpha.to_string(),
                t.d.to_string(),
                r.eps.to_string(),
                r.hits.to_string(),
                r.replicates.to_string(),
                r.frequency.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
            ]);
        }
    }
    run.csv(
        "hitting.csv",
        &["alpha", "d", "eps", "hits", "replicates", "frequency", "ci_low", "ci_high"],
        &rows,
    )?;
    run.finish(json!({ "tables": tables }))
}

fn oscillation(mut run: Run) -> Outcome {
    if run.cfg.replicates < OSCILLATION_REPLICATES {
        return Err(Error::InsufficientReplicates {
            min: OSCILLATION_REPLICATES,
            got: run.cfg.replicates,
        }
        .into());
    }
    let band = run
        .cfg
        .band
        .clone()
        .ok_or_else(|| Failure::Config("oscillation-tail needs a `band` section".into()))?;
    let beta = run.cfg.beta().ok_or_else(|| Failure::Config("β is undetermined for this spectrum".into()))?;
    let s = run.spectrum()?;
    let (nt, np) = run.cfg.grid.as_ref().map_or((16, 2 * s.l_max() + 2), |g| (g.n_theta, g.n_phi));
    let g = EquiangularGrid::polar_cap(band.radius, nt, np)?;
    let rep = oscillation_tail(&OscillationTailSetup {
        spectrum: &s,
        d: run.cfg.d,
        radius: band.radius,
        b: band.b.clone(),
        beta,
        replicates: run.cfg.replicates,
        batches: 5,
        seed: run.seed,
        grid: &g,
    })?;
    let mut rows = vec![vec![
        "full".into(),
        String::new(),
        rep.full.slope.to_string(),
        rep.full.r_squared.to_string(),
    ]];
    for b in &rep.bands {
        rows.push(vec![
            "remainder".into(),
            b.b.to_string(),
            b.median_slope.to_string(),
            String::new(),
        ]);
    }
    println!(
        "full field slope {:.4} (R² {:.4}); remainder slope magnitude increasing in B: {}",
        rep.full.slope,
        rep.full.r_squared,
        rep.slope_magnitude_increases()
    );
    run.csv("oscillation_tail.csv", &["series", "b", "slope", "r_squared"], &rows)?;
    run.json("oscillation_tail.json", serde_json::to_value(&rep).map_err(Error::from)?)?;
    run.finish(json!({ "increasing": rep.slope_magnitude_increases(), "full_r_squared": rep.full.r_squared }))
}

fn smooth(mut run: Run) -> Outcome {
    let s = run.spectrum()?;
    let r0 = run.cfg.radii.first().copied().unwrap_or(0.05);
    let (nt, np) = run.cfg.grid.as_ref().map_or((24, 2 * s.l_max() + 2), |g| (g.n_theta, g.n_phi));
    let g = EquiangularGrid::polar_cap(r0, nt, np)?;
    let rep = smooth_event(&SmoothEventSetup {
        spectrum: &s,
        d: run.cfg.d,
        r0,
        radii: (run.cfg.radii.len() > 1).then(|| run.cfg.radii[1..].to_vec()),
        c_grid: default_c_grid(),
        replicates: run.cfg.replicates,
        seed: run.seed,
        grid: &g,
    })?;
    println!(
        "best C {} frequency {:.3} (target {:.3})",
        rep.best_c, rep.best_frequency, rep.target
    );
    let rows: Vec<Vec<String>> = rep
        .frequencies
        .iter()
        .map(|(c, f)| vec![c.to_string(), f.to_string()])
        .collect();
    run.csv("smooth_event.csv", &["c", "frequency"], &rows)?;
    run.json("smooth_event.json", serde_json::to_value(&rep).map_err(Error::from)?)?;
    run.finish(json!({ "best_c": rep.best_c, "best_frequency": rep.best_frequency, "target": rep.target }))
}

fn verify(mut run: Run, ids: Vec<String>) -> Outcome {
    let alpha = run.alpha()?;
    let ids: Vec<String> = if ids.is_empty() { CRITERIA.iter().map(|s| s.to_string()).collect() } else { ids };
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(&i.as_str())) {
        return Err(Failure::Config(format!("unknown criterion `{bad}`; known: {}", CRITERIA.join(", "))));
    }
    let header = theory_header(alpha, &run.cfg.d_values())?;
    for h in &header {
        match h.predicted_dimension {
            Some(dim) => println!("α = {}, d = {}: hitting predicted, level-set dimension {dim}", h.alpha, h.d),
            None => println!("α = {}, d = {}: hitting predicted impossible, capacity {}", h.alpha, h.d, h.capacity),
        }
    }
    let mut results = Vec::new();
    for id in &ids {
        let r = run_criterion(id)?;
        println!("{}", r.line());
        run.record.timings.insert(format!("criterion {id}"), r.seconds);
        results.push(r);
    }
    let report = VerifyReport::new(&run.hash, run.seed, header, results);
    let path = run.path("verify_report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    let path = run.path("verify_report.csv");
    report.write_csv(&path)?;
    let blocking = report.blocking_failures.clone();
    for w in &report.warnings {
        eprintln!("warning: criterion {w} missed its tolerance (within twice the tolerance)");
    }
    run.finish(json!({ "blocking_failures": blocking, "warnings": report.warnings }))?;
    if blocking.is_empty() {
        Ok(())
    } else {
        Err(Failure::Hard(format!("failed criteria: {}", blocking.join(", "))))
    }
}

fn report(root: &Path, out: Option<&Path>) -> Outcome {
    let rep = aggregate(root)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| root.join("report"));
    let written = merge_tables(&rep, root, &out)?;
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&rep).map_err(Error::from)?,
    )?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    if !rep.missing.is_empty() {
        return Err(Failure::Io(format!("missing inputs: {}", rep.missing.join(", "))));
    }
    Ok(())
}
