use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pdelin::bases::{darcy1d_system, heat_system, laplacian_system, volterra_system, DarcyBoundary};
use pdelin::experiments::{
    contraction_study, coverage_study, darcy_refinement_study, fit_posterior, noiseless_error, run_figure_experiment,
    summarize_band, Check, ContractionConfig, CoverageConfig, CoverageTruth, ExperimentConfig, FigureCase,
    FigureReport, Instance, PriorMode,
};
use pdelin::observe::simulate_whitenoise;
use pdelin::pdes::heat_discrete_system;
use pdelin::{DesignObservation, Error, SeqObservation};
use serde::Serialize;

use crate::config::Config;
use crate::{AuditArgs, ExperimentArgs, InferArgs, SimulateArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Acceptance assertions that failed.
    Acceptance(Vec<String>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(Error::Config(_) | Error::Parse(_) | Error::Dimension(_) | Error::Io(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Acceptance(items) => write!(f, "acceptance failed:\n  {}", items.join("\n  ")),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    args: Vec<String>,
    config: Option<String>,
    seed: u64,
    version: &'static str,
    outputs: Vec<String>,
    wall_time_s: f64,
    status: String,
}

/// Writes `manifest.json` listing every file under `out`.
fn write_manifest(out: &Path, command: &str, config: Option<&Path>, seed: u64, start: Instant, status: &str) -> CliResult {
    let mut outputs = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(Error::from)? {
            let p = entry.map_err(Error::from)?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "manifest.json") {
                outputs.push(p.strip_prefix(out).unwrap_or(&p).display().to_string());
            }
        }
    }
    outputs.sort();
    let m = RunManifest {
        command: command.to_owned(),
        args: std::env::args().skip(1).collect(),
        config: config.map(|p| p.display().to_string()),
        seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
        status: status.to_owned(),
    };
    pdelin::io::write_json(&out.join("manifest.json"), &m)?;
    Ok(())
}

fn case_of(cfg: &Config) -> Result<FigureCase, Error> {
    cfg.require::<String>("problem.case")?.parse()
}

fn design_dim(case: FigureCase) -> usize {
    if case == FigureCase::Schrodinger2d {
        2
    } else {
        1
    }
}

fn seed_of(flag: Option<u64>, cfg: &Config, key: &str) -> Result<u64, Error> {
    Ok(match flag {
        Some(s) => s,
        None => cfg.get::<u64>(key)?.unwrap_or(0),
    })
}

pub fn simulate(a: &SimulateArgs) -> CliResult {
    let start = Instant::now();
    let cfg = Config::load(&a.config)?;
    let case = case_of(&cfg)?;
    let seed = seed_of(a.seed, &cfg, "data.seed")?;
    let model = cfg.get::<String>("data.model")?.unwrap_or_else(|| "whitenoise".into());
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    match model.as_str() {
        "whitenoise" => {
            let n: f64 = cfg.require("data.n")?;
            if !(n > 1.0) {
                return Err(Error::Config(format!("data.n must exceed 1, got {n}")).into());
            }
            let inst = case.build(n)?;
            let obs = simulate_whitenoise(&inst.v0, &inst.system, n, seed)?;
            obs.write_csv(&a.out.join("observation.csv"))?;
            inst.v0.write_csv(&a.out.join("truth.csv"))?;
        }
        "design" => {
            let m = cfg.count("data.m")?.ok_or_else(|| Error::Config("missing required key `data.m`".into()))?;
            let inst = case.build((m as f64).powi(design_dim(case) as i32))?;
            let obs = inst.simulate_design(m, seed)?;
            obs.write_csv(&a.out.join("observation.csv"))?;
            inst.v0.write_csv(&a.out.join("truth.csv"))?;
        }
        other => return Err(Error::Config(format!("data.model must be whitenoise or design, got `{other}`")).into()),
    }
    write_manifest(&a.out, "simulate", Some(&a.config), seed, start, "ok")
}

/// Loads `observation.csv` from a data directory together with the instance
/// its coefficients live on.
fn load_data(dir: &Path, case: FigureCase) -> Result<(Instance, SeqObservation), Error> {
    let path = dir.join("observation.csv");
    let table = pdelin::io::read_csv(&path)?;
    if table.header.first().map(String::as_str) == Some("ell") {
        let side: serde_json::Value = pdelin::io::read_json(&pdelin::io::sidecar_path(&path))?;
        let n = side["n"].as_f64().ok_or_else(|| Error::Parse("observation sidecar lacks `n`".into()))?;
        let inst = case.build(n)?;
        let obs = SeqObservation::read_csv(&path, &inst.system)?;
        Ok((inst, obs))
    } else {
        let design = DesignObservation::read_csv(&path)?;
        if design.d != design_dim(case) {
            return Err(Error::Dimension(format!("design data are {}-dimensional, case {} is not", design.d, case.name())));
        }
        let inst = case.build(design.n() as f64)?;
        let obs = inst.design_sequence(&design)?;
        Ok((inst.on_design_span(design.m)?, obs))
    }
}

pub fn infer(a: &InferArgs) -> CliResult {
    let start = Instant::now();
    let cfg = Config::load(&a.config)?;
    let case = case_of(&cfg)?;
    let seed = seed_of(a.seed, &cfg, "band.seed")?;
    let prior = if let Some(alpha) = a.alpha {
        PriorMode::Fixed(alpha)
    } else if a.eb {
        PriorMode::Eb
    } else if a.hb {
        PriorMode::Hb
    } else {
        cfg.get::<String>("prior.mode")?.map_or(Ok(PriorMode::Eb), |s| s.parse())?
    };
    let tau = cfg.get::<f64>("prior.tau")?.unwrap_or(1.0);
    let draws = a.draws.or(cfg.count("band.draws")?).unwrap_or(500);
    let level = a.level.or(cfg.get("band.level")?).unwrap_or(0.95);
    let delta0 = a.delta0.or(cfg.get("band.delta0")?);
    let keep = cfg.count("band.keep_draws")?.unwrap_or(20);
    let max_excluded = a.max_excluded.or(cfg.get("band.max_excluded")?).unwrap_or(0.01);
    if draws < 2 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Config("draws must be at least 2 and level in (0, 1)".into()).into());
    }

    let (inst, obs) = load_data(&a.data, case)?;
    let fit = fit_posterior(&obs, prior, tau, draws, seed)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    fit.write_csv(&a.out.join("posterior.csv"))?;
    if let Some(eb) = &fit.eb {
        eb.write_trace(&a.out.join("eb_trace.csv"))?;
    }
    let band = summarize_band(&inst, obs.n, &fit, level, delta0, keep)?;
    let (excluded, worst, floor) = (band.excluded_fraction, band.excluded_min, band.floor);
    let report = FigureReport { case: case.name().into(), prior, draws, level, seed, bands: vec![band] };
    report.write(&a.out)?;
    if excluded > max_excluded {
        write_manifest(&a.out, "infer", Some(&a.config), seed, start, "domain-error")?;
        return Err(Error::Domain(format!(
            "{:.2}% of draws left the inversion domain (limit {:.2}%); failing minimum {:.6e} against floor {floor:.6e}",
            100.0 * excluded,
            100.0 * max_excluded,
            worst.unwrap_or(f64::NAN)
        ))
        .into());
    }
    write_manifest(&a.out, "infer", Some(&a.config), seed, start, "ok")
}

fn finish_study(out: &Path, cfg: &Config, seed: u64, start: Instant, checks: &[Check]) -> CliResult {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    let status = if failed.is_empty() { "ok" } else { "acceptance-failure" };
    write_manifest(out, "experiment", cfg.path.as_deref(), seed, start, status)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed))
    }
}

pub fn experiment(a: &ExperimentArgs) -> CliResult {
    let start = Instant::now();
    let cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = seed_of(a.seed, &cfg, "experiment.seed")?;
    let out: PathBuf = a.out.clone();
    let key = |k: &str| format!("experiment.{k}");
    let checks = match a.study.as_str() {
        "figure" => {
            let name = match a.case.clone().or(cfg.get::<String>(&key("case"))?) {
                Some(c) => c,
                None => return Err(Error::Config("the figure study needs a case".into()).into()),
            };
            let mut ec = ExperimentConfig::figure(name.parse()?);
            if let Some(v) = cfg.list(&key("n_list"))? {
                ec.n_list = v;
            }
            if let Some(p) = cfg.get::<String>(&key("prior"))? {
                ec.prior = p.parse()?;
            }
            ec.tau = cfg.get(&key("tau"))?.unwrap_or(ec.tau);
            ec.draws = cfg.count(&key("draws"))?.unwrap_or(ec.draws);
            ec.level = cfg.get(&key("level"))?.unwrap_or(ec.level);
            ec.keep_draws = cfg.count(&key("keep_draws"))?.unwrap_or(ec.keep_draws);
            ec.delta0 = cfg.get(&key("delta0"))?;
            ec.seed = seed;
            ec.out_dir = Some(out.clone());
            run_figure_experiment(&ec)?.checks()
        }
        "contraction" => {
            let mut cc = ContractionConfig { seed, ..Default::default() };
            if let Some(v) = cfg.list(&key("n_list"))? {
                cc.n_list = v;
            }
            cc.alpha = cfg.get(&key("alpha"))?.unwrap_or(cc.alpha);
            cc.beta = cfg.get(&key("beta"))?.unwrap_or(cc.beta);
            cc.replications = cfg.count(&key("replications"))?.unwrap_or(cc.replications);
            cc.draws = cfg.count(&key("draws"))?.unwrap_or(cc.draws);
            cc.len = cfg.count(&key("len"))?.unwrap_or(cc.len);
            let well = contraction_study(&cc)?;
            well.write(&out.join("well-specified"))?;
            let mis_alpha = cfg.get(&key("misspecified_alpha"))?.unwrap_or(3.0);
            let mis = contraction_study(&ContractionConfig { alpha: mis_alpha, ..cc.clone() })?;
            mis.write(&out.join("misspecified"))?;
            let inst = Instance::volterra_sequence(cc.beta, cc.len, cc.g0, cc.eval)?;
            let noiseless = noiseless_error(&inst, cc.alpha, 1e12)?;
            println!("noiseless error at n = 1e12: {noiseless:.4e}");
            vec![
                well.check_window(-0.35, -0.15),
                Check::new(
                    format!("misspecified slope alpha={mis_alpha}"),
                    mis.slope.abs() <= well.slope.abs() + 0.05,
                    format!("|{:.4}| <= |{:.4}| + 0.05", mis.slope, well.slope),
                ),
            ]
        }
        "coverage" => {
            let mut vc = CoverageConfig { seed, ..Default::default() };
            vc.n = cfg.get(&key("n"))?.unwrap_or(vc.n);
            vc.replications = cfg.count(&key("replications"))?.unwrap_or(vc.replications);
            vc.level = cfg.get(&key("level"))?.unwrap_or(vc.level);
            vc.mc_draws = cfg.count(&key("mc_draws"))?.unwrap_or(vc.mc_draws);
            vc.len = cfg.count(&key("len"))?.unwrap_or(vc.len);
            if let Some(c) = cfg.list(&key("c"))? {
                vc.inflations = c;
            }
            let beta = cfg.get(&key("beta"))?.unwrap_or(1.0);
            vc.truth = CoverageTruth::Sequence { beta };
            let under = CoverageConfig { alpha: cfg.get(&key("alpha"))?.unwrap_or(0.5), ..vc.clone() };
            let over = CoverageConfig { alpha: cfg.get(&key("alpha_over"))?.unwrap_or(2.0), ..vc };
            let ru = coverage_study(&under)?;
            ru.write(&out.join(format!("alpha-{}", under.alpha)))?;
            let ro = coverage_study(&over)?;
            ro.write(&out.join(format!("alpha-{}", over.alpha)))?;
            println!("coverage with alpha = {} > beta: {:?}", over.alpha, ro.coverage);
            let c1 = ru.coverage.first().copied().unwrap_or((1.0, 0.0));
            vec![Check::new(
                format!("coverage alpha={} c={}", under.alpha, c1.0),
                c1.1 >= 0.90,
                format!("{:.3} >= 0.90", c1.1),
            )]
        }
        "darcy-refinement" => {
            let m_list: Vec<usize> = match cfg.list(&key("m_list"))? {
                Some(v) => v.into_iter().map(|x| x as usize).collect(),
                None => vec![32, 64, 128],
            };
            let r = darcy_refinement_study(&m_list)?;
            r.write(&out)?;
            r.checks()
        }
        other => {
            return Err(Error::Config(format!(
                "unknown study `{other}`; expected figure, contraction, coverage or darcy-refinement"
            ))
            .into())
        }
    };
    finish_study(&out, &cfg, seed, start, &checks)
}

pub fn basis_audit(a: &AuditArgs) -> CliResult {
    let time = a.time.unwrap_or(a.size);
    let system = match a.system.as_str() {
        "laplacian" => laplacian_system(a.d, a.size)?,
        "volterra" => volterra_system(a.size)?,
        "darcy1d" => darcy1d_system(a.size, DarcyBoundary::Dirichlet)?,
        "darcy1d-mixed" => darcy1d_system(a.size, DarcyBoundary::Mixed)?,
        "heat" => heat_system(a.d, a.size, time)?,
        "heat-discrete" => heat_discrete_system(a.d, a.size, time)?,
        other => return Err(Error::Config(format!("unknown system `{other}`")).into()),
    };
    system.write_audit(&a.out)?;
    println!("{}: {} triples, p = {:.3}", system.id, system.len(), system.p);
    Ok(())
}
