use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::data::{bundled, load_study_file, Dataset, StudyFile};
use super::output::{sha256_hex, write_atomic, ChainRates, RunManifest};
use crate::error::{Error, Result};
use crate::inference::{
    chain_seed, gelman_rubin, run_chains, Approach, BiasPriorSpec, ChainTrace, HyperParam, MetaModel, Priors,
    RunConfig,
};
use crate::likelihood::{CovSimulation, QuadratureSpec};
use crate::posterior::{chain_curves, fine_ages, posterior_curve, PosteriorCurve, DECADE_AGES};
use crate::seeds::derive_seed;
use crate::simgen::{run_sim, ControlAges, SimDesign, SimModelConfig, SimReport, TruthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

pub const RHAT_THRESHOLD: f64 = 1.1;

const COV_STREAM: u64 = 0x636f_7600;

fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Input-side errors map to the usage exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Contract(_) | Error::InvalidStudy { .. } | Error::Domain(_) | Error::Json(_) => {
            EXIT_USAGE
        }
        _ => EXIT_FAILURE,
    }
}

const HYPER_NAMES: [(&str, HyperParam); 4] = [
    ("a", HyperParam::A),
    ("b", HyperParam::B),
    ("c", HyperParam::C),
    ("d", HyperParam::D),
];

/// R-hat of each hyperparameter across chains; `None` where undefined.
pub fn hyper_rhat(traces: &[ChainTrace]) -> BTreeMap<String, Option<f64>> {
    HYPER_NAMES
        .iter()
        .map(|&(name, p)| {
            let cols: Vec<Vec<f64>> = traces.iter().map(|t| t.hyper_column(p)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            (name.to_string(), gelman_rubin(&refs).ok())
        })
        .collect()
}

pub fn converged(rhat: &BTreeMap<String, Option<f64>>) -> bool {
    rhat.values().all(|r| matches!(r, Some(x) if *x < RHAT_THRESHOLD))
}

/// A fitted meta-analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub traces: Vec<ChainTrace>,
    pub chain_seeds: Vec<u64>,
    /// Ages 20 to 95.
    pub curve: PosteriorCurve,
    pub decades: PosteriorCurve,
    pub chain_decades: Vec<PosteriorCurve>,
    pub rhat: BTreeMap<String, Option<f64>>,
}

impl Analysis {
    pub fn converged(&self) -> bool {
        converged(&self.rhat)
    }
}

/// Fit the hierarchical model to a study file. Same inputs, same output.
pub fn analyze(file: &StudyFile, config: &RunConfig, priors: Priors) -> Result<Analysis> {
    config.validate()?;
    let covs = file.penetrance_covs(&CovSimulation::default(), derive_seed(config.seed, COV_STREAM))?;
    let model = MetaModel::new(
        &file.studies,
        config.approach,
        priors,
        &file.baseline(),
        &QuadratureSpec::default(),
        &covs,
    )?;
    if model.is_empty() {
        return Err(Error::Contract("no studies left to analyse".into()));
    }
    let traces = run_chains(&model, config)?;
    Ok(Analysis {
        chain_seeds: (0..config.chains).map(|k| chain_seed(config.seed, k)).collect(),
        curve: posterior_curve(&traces, &fine_ages(), 0.95)?,
        decades: posterior_curve(&traces, &DECADE_AGES, 0.95)?,
        chain_decades: chain_curves(&traces, &DECADE_AGES, 0.95)?,
        rhat: hyper_rhat(&traces),
        traces,
    })
}

fn parse_approach(s: &str) -> std::result::Result<Approach, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Study file (JSON).
    #[arg(long, required_unless_present = "dataset", conflicts_with = "dataset")]
    pub studies: Option<PathBuf>,
    /// Bundled dataset instead of a study file.
    #[arg(long, value_enum)]
    pub dataset: Option<Dataset>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 15_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 20_240_510)]
    pub seed: u64,
    /// adjust, noadjust or exclude.
    #[arg(long, default_value = "adjust", value_parser = parse_approach)]
    pub approach: Approach,
    #[arg(long, default_value_t = 0.9)]
    pub sigma_or: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_rr: f64,
}

impl RunArgs {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            studies: None,
            dataset: None,
            out: out.into(),
            iterations: 30_000,
            burn_in: 15_000,
            chains: 4,
            seed: 20_240_510,
            approach: Approach::Adjust,
            sigma_or: 0.9,
            sigma_rr: 0.5,
        }
    }

    pub fn config(&self) -> RunConfig {
        RunConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            chains: self.chains,
            seed: self.seed,
            approach: self.approach,
            ..RunConfig::default()
        }
    }

    pub fn priors(&self) -> Priors {
        Priors {
            bias: BiasPriorSpec {
                sigma_or: self.sigma_or,
                sigma_rr: self.sigma_rr,
            },
            ..Priors::default()
        }
    }

    pub fn load(&self) -> Result<StudyFile> {
        match (&self.studies, self.dataset) {
            (Some(p), None) => load_study_file(p),
            (None, Some(d)) => Ok(bundled(d)),
            _ => Err(Error::Contract("give exactly one of --studies and --dataset".into())),
        }
    }
}

fn csv_to(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    write_atomic(path, f)
}

/// Write curve, trace and manifest files for a finished analysis.
pub fn write_analysis(out: &Path, a: &Analysis, manifest: &RunManifest) -> Result<()> {
    std::fs::create_dir_all(out)?;
    csv_to(&out.join("curve.csv"), |w| a.curve.write_csv(w))?;
    csv_to(&out.join("curve_decades.csv"), |w| a.decades.write_csv(w))?;
    for (k, t) in a.traces.iter().enumerate() {
        csv_to(&out.join(format!("trace_chain{}.csv", k + 1)), |w| t.write_csv(w))?;
    }
    csv_to(&out.join("curve_chains.csv"), |w| {
        writeln!(w, "chain,age,mean,cri_low,cri_high")?;
        for (k, c) in a.chain_decades.iter().enumerate() {
            for j in 0..c.ages.len() {
                writeln!(
                    w,
                    "{},{},{:.10},{:.10},{:.10}",
                    k + 1,
                    c.ages[j],
                    c.mean[j],
                    c.cri_low[j],
                    c.cri_high[j]
                )?;
            }
        }
        Ok(())
    })?;
    manifest.write(&out.join("manifest.json"))
}

pub fn cmd_run(args: &RunArgs) -> Result<i32> {
    let start = Instant::now();
    let file = args.load()?;
    let config = args.config();
    let priors = args.priors();
    let analysis = analyze(&file, &config, priors)?;
    let manifest = RunManifest {
        command: "run".into(),
        version: version(),
        config: json!({
            "run": config,
            "priors": priors,
            "baseline": file.baseline(),
            "quadrature": QuadratureSpec::default(),
            "studies": args.studies,
            "dataset": args.dataset.map(|d| format!("{d:?}").to_lowercase()),
        }),
        seed: config.seed,
        input_sha256: sha256_hex(file.canonical_json().as_bytes()),
        chains: analysis
            .traces
            .iter()
            .zip(&analysis.chain_seeds)
            .enumerate()
            .map(|(k, (t, &s))| ChainRates::from_trace(k + 1, s, t))
            .collect(),
        gelman_rubin: analysis.rhat.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_analysis(&args.out, &analysis, &manifest)?;
    let n = analysis.traces.first().map_or(0, |t| t.ids.len());
    println!("studies used: {n}");
    for &age in &[50.0, 80.0] {
        if let Some((m, lo, hi)) = analysis.decades.at(age) {
            println!("penetrance at {age}: {:.4} ({:.4} - {:.4})", m, lo, hi);
        }
    }
    for (name, r) in &analysis.rhat {
        println!("rhat {name}: {}", r.map_or("undefined".into(), |x| format!("{x:.4}")));
    }
    Ok(if analysis.converged() {
        EXIT_OK
    } else {
        eprintln!("warning: some hyperparameter R-hat >= {RHAT_THRESHOLD}");
        EXIT_NOT_CONVERGED
    })
}

fn parse_control_ages(s: &str) -> std::result::Result<ControlAges, String> {
    match s {
        "cases" => Ok(ControlAges::Cases),
        "sampled" => Ok(ControlAges::Sampled),
        other => Err(format!("unknown control-age mode `{other}` (expected cases or sampled)")),
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    pub setting: u8,
    #[arg(long, default_value_t = 1)]
    pub scenario: u8,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    /// Comma-separated approaches, by name or number.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',', value_parser = parse_approach)]
    pub approaches: Vec<Approach>,
    #[arg(long, default_value_t = 20_240_510)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 2)]
    pub chains: usize,
    #[arg(long, default_value_t = 0.9)]
    pub sigma_or: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_rr: f64,
    /// Age summary given to OR controls: cases or sampled.
    #[arg(long, default_value = "cases", value_parser = parse_control_ages)]
    pub control_ages: ControlAges,
    /// Simulated cohort size per replicate.
    #[arg(long, default_value_t = 2_000_000)]
    pub population: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub oracle_draws: usize,
    /// Also write per-replicate estimates.
    #[arg(long)]
    pub dump_replicates: bool,
}

impl SimulateArgs {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            setting: 1,
            scenario: 1,
            replicates: 50,
            approaches: Approach::ALL.to_vec(),
            seed: 20_240_510,
            out: out.into(),
            iterations: 10_000,
            burn_in: 5_000,
            chains: 2,
            sigma_or: 0.9,
            sigma_rr: 0.5,
            control_ages: ControlAges::Cases,
            population: 2_000_000,
            oracle_draws: 1_000_000,
            dump_replicates: false,
        }
    }

    pub fn design(&self) -> Result<SimDesign> {
        let mut d = SimDesign::new(self.setting, self.scenario, self.replicates, self.seed)?;
        d.approaches = self.approaches.clone();
        d.approaches.sort();
        d.approaches.dedup();
        d.control_ages = self.control_ages;
        d.validate()?;
        Ok(d)
    }

    pub fn truth(&self) -> TruthSpec {
        TruthSpec {
            population: self.population,
            ..TruthSpec::default()
        }
    }

    pub fn model(&self) -> SimModelConfig {
        let base = SimModelConfig::default();
        SimModelConfig {
            run: RunConfig {
                iterations: self.iterations,
                burn_in: self.burn_in,
                chains: self.chains,
                ..base.run
            },
            priors: Priors {
                bias: BiasPriorSpec {
                    sigma_or: self.sigma_or,
                    sigma_rr: self.sigma_rr,
                },
                ..base.priors
            },
            oracle_draws: self.oracle_draws,
            ..base
        }
    }
}

/// Simulation study as configured by `args`, without writing anything.
pub fn simulate(args: &SimulateArgs) -> Result<SimReport> {
    run_sim(&args.design()?, &args.truth(), &args.model())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let start = Instant::now();
    let design = args.design()?;
    let model = args.model();
    let report = run_sim(&design, &args.truth(), &model)?;
    std::fs::create_dir_all(&args.out)?;
    csv_to(&args.out.join("sim_report.csv"), |w| report.write_csv(w))?;
    if args.dump_replicates {
        csv_to(&args.out.join("sim_replicates.csv"), |w| report.write_replicates_csv(w))?;
    }
    let design_json = serde_json::to_string(&design)?;
    RunManifest {
        command: "simulate".into(),
        version: version(),
        config: json!({
            "design": design,
            "run": model.run,
            "priors": model.priors,
            "population": args.population,
            "oracle_draws": model.oracle_draws,
            "level": model.level,
        }),
        seed: args.seed,
        input_sha256: sha256_hex(design_json.as_bytes()),
        chains: Vec::new(),
        gelman_rubin: BTreeMap::new(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    }
    .write(&args.out.join("manifest.json"))?;
    for r in report.rows.iter().filter(|r| r.age == 80.0) {
        println!(
            "approach {} age 80: mean {:.4} (true {:.4}), rmse/true {:.4}, coverage {:.3}",
            r.approach.number(),
            r.mean_estimate,
            r.truth,
            r.rmse_over_true,
            r.coverage
        );
    }
    if report.failures > 0 {
        eprintln!("{} replicate(s) failed and were dropped", report.failures);
    }
    Ok(EXIT_OK)
}

/// Parsed `trace_chain*.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("{name}: empty file")))?
            .split(',')
            .map(str::to_string)
            .collect();
        if header.first().map(String::as_str) != Some("iteration") {
            return Err(Error::Parse(format!("{name}: header must start with `iteration`")));
        }
        let rows = lines
            .enumerate()
            .map(|(i, l)| {
                let row: Vec<f64> = l
                    .split(',')
                    .map(|x| x.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse(format!("{name} line {}: {e}", i + 2)))?;
                if row.len() != header.len() {
                    return Err(Error::Parse(format!(
                        "{name} line {}: {} fields, header has {}",
                        i + 2,
                        row.len(),
                        header.len()
                    )));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Trace files in `dir`, ordered by chain number.
pub fn read_traces(dir: &Path) -> Result<Vec<TraceTable>> {
    let mut files: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let k = name.strip_prefix("trace_chain")?.strip_suffix(".csv")?.parse().ok()?;
            Some((k, e.path()))
        })
        .collect();
    files.sort();
    files
        .iter()
        .map(|(_, p)| TraceTable::parse(&std::fs::read_to_string(p)?, &p.display().to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    /// Every traced parameter with its R-hat (`None` where undefined).
    pub rhat: Vec<(String, Option<f64>)>,
    pub chains: usize,
    pub draws: usize,
}

impl Diagnosis {
    pub fn hyper(&self) -> BTreeMap<String, Option<f64>> {
        self.rhat
            .iter()
            .filter(|(n, _)| HYPER_NAMES.iter().any(|(h, _)| h == n))
            .cloned()
            .collect()
    }
}

pub fn diagnose(tables: &[TraceTable]) -> Result<Diagnosis> {
    if tables.len() < 2 {
        return Err(Error::Contract(format!("need at least 2 chain traces, found {}", tables.len())));
    }
    let first = &tables[0];
    for t in &tables[1..] {
        if t.header != first.header {
            return Err(Error::Parse("trace files have different columns".into()));
        }
        if t.rows.len() != first.rows.len() {
            return Err(Error::Parse("trace files have different lengths".into()));
        }
    }
    let rhat = (1..first.header.len())
        .map(|j| {
            let cols: Vec<Vec<f64>> = tables.iter().map(|t| t.column(j)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            (first.header[j].clone(), gelman_rubin(&refs).ok())
        })
        .collect();
    Ok(Diagnosis {
        rhat,
        chains: tables.len(),
        draws: first.rows.len(),
    })
}

#[derive(Debug, Clone, clap::Args)]
pub struct DiagnoseArgs {
    /// Directory holding trace_chain*.csv files.
    #[arg(long)]
    pub traces: PathBuf,
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<i32> {
    let d = diagnose(&read_traces(&args.traces)?)?;
    println!("{} chains, {} draws each", d.chains, d.draws);
    println!("{:<24} {:>10}", "parameter", "rhat");
    for (name, r) in &d.rhat {
        println!("{:<24} {:>10}", name, r.map_or("undefined".into(), |x| format!("{x:.4}")));
    }
    Ok(if converged(&d.hyper()) { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
