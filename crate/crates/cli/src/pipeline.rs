//! Pipeline stages. Each stage either recomputes its prefix from `--input` or
//! loads the artifacts left in the output directory by earlier stages.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{debug, info, warn};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::Serialize;
use setmffu::campaign::{compare_methods, plan, CampaignError, CampaignReport, Method};
use setmffu::cones::{enumerate_fault_sites, extract_all_cones, FaultSite};
use setmffu::ffsets::{collect_cone_sets, collect_static_sets, SetCollection};
use setmffu::netlist::{parse_bench, Circuit, JsonCircuit, NetlistError};
use setmffu::propagation::{
    analyze_sites, build_miter, encode_cnf, optimize_sets, PatternConfig, PropagationError, ReplacementPolicy,
    SiteAnalysis,
};
use thiserror::Error;

use crate::artifacts::{self, ArtifactError, ConesFile, PatternsFile, ReportFile, SetsFile, SitesFile};
use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: NetlistError },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{stage}` needs {file} in {dir}; run `{producer}` first or pass --input")]
    MissingArtifact {
        stage: &'static str,
        file: &'static str,
        producer: &'static str,
        dir: String,
    },
    #[error("{file}: malformed artifact: {message}")]
    BadArtifact { file: &'static str, message: String },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Syntax { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::MissingArtifact { .. } => 4,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
    text.push('\n');
    let path = dir.join(file);
    write_text(&path, &text)?;
    debug!("wrote {}", path.display());
    Ok(())
}

fn read_json<T: DeserializeOwned>(
    dir: &Path,
    file: &'static str,
    stage: &'static str,
    producer: &'static str,
) -> Result<T, CliError> {
    let path = dir.join(file);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::MissingArtifact {
                stage,
                file,
                producer,
                dir: dir.display().to_string(),
            })
        }
        Err(e) => return Err(io_err(&path)(e)),
    };
    serde_json::from_str(&text).map_err(|e| CliError::BadArtifact {
        file,
        message: e.to_string(),
    })
}

fn with_exclusions(mut j: JsonCircuit, exclude: &[String]) -> JsonCircuit {
    for e in exclude {
        if !j.excluded.contains(e) {
            j.excluded.push(e.clone());
        }
    }
    j
}

/// Read a `.bench` file, or a native JSON circuit when the extension is `.json`.
pub fn read_circuit(path: &Path, exclude: &[String]) -> Result<Circuit, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let display = path.display().to_string();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let j: JsonCircuit = serde_json::from_str(&text).map_err(|e| CliError::Syntax {
            path: display.clone(),
            message: e.to_string(),
        })?;
        with_exclusions(j, exclude)
            .to_circuit()
            .map_err(|source| CliError::Parse { path: display, source })
    } else {
        parse_bench(&text, exclude).map_err(|source| CliError::Parse { path: display, source })
    }
}

/// Circuit from `--input` (also saved as `circuit.json`), else from the
/// output directory.
fn circuit(cfg: &RunConfig, stage: &'static str) -> Result<Circuit, CliError> {
    match &cfg.input {
        Some(path) => {
            let c = read_circuit(path, &cfg.exclude)?;
            let s = c.stats();
            info!(
                "{}: {} gates, {} flip-flops, {} inputs, {} outputs, {} nets",
                path.display(),
                s.num_gates,
                s.num_ffs,
                s.num_pis,
                s.num_pos,
                s.num_nets
            );
            write_json(&cfg.out, artifacts::CIRCUIT, &JsonCircuit::from(&c))?;
            Ok(c)
        }
        None => {
            let j: JsonCircuit = read_json(&cfg.out, artifacts::CIRCUIT, stage, "parse")?;
            with_exclusions(j, &cfg.exclude)
                .to_circuit()
                .map_err(|source| CliError::Parse {
                    path: cfg.out.join(artifacts::CIRCUIT).display().to_string(),
                    source,
                })
        }
    }
}

fn sites(cfg: &RunConfig, c: &Circuit, stage: &'static str) -> Result<Vec<FaultSite>, CliError> {
    if cfg.input.is_some() {
        return Ok(enumerate_fault_sites(c, cfg.mode));
    }
    let file: SitesFile = read_json(&cfg.out, artifacts::SITES, stage, "cones")?;
    Ok(file.to_sites(c)?)
}

fn static_cone_view(c: &Circuit, sites: &[FaultSite]) -> SetCollection {
    let static_sets: BTreeMap<_, _> = sites
        .iter()
        .filter_map(|s| setmffu::ffsets::FfSet::new(s.static_ffs.iter().copied()).map(|f| (s.net, f)))
        .collect();
    collect_cone_sets(c.ff_names(), &extract_all_cones(c), sites, |s| static_sets.get(&s.net))
}

pub fn stage_parse(cfg: &RunConfig) -> Result<Circuit, CliError> {
    if cfg.input.is_none() {
        return Err(CliError::Usage("`parse` needs --input".into()));
    }
    let c = circuit(cfg, "parse")?;
    let stats = c.stats();
    println!(
        "{}",
        serde_json::json!({
            "num_ffs": stats.num_ffs,
            "num_gates": stats.num_gates,
            "num_pis": stats.num_pis,
            "num_pos": stats.num_pos,
            "num_nets": stats.num_nets,
        })
    );
    Ok(c)
}

pub fn stage_cones(cfg: &RunConfig) -> Result<(), CliError> {
    let c = circuit(cfg, "cones")?;
    let cones = extract_all_cones(&c);
    let sites = enumerate_fault_sites(&c, cfg.mode);
    write_cones(cfg, &c, &cones, &sites)
}

fn write_cones(
    cfg: &RunConfig,
    c: &Circuit,
    cones: &[setmffu::cones::FaninCone],
    sites: &[FaultSite],
) -> Result<(), CliError> {
    info!(
        "{} cones, {} fault sites ({} reach no flip-flop)",
        cones.len(),
        sites.len(),
        sites.iter().filter(|s| s.po_only()).count()
    );
    write_json(&cfg.out, artifacts::CONES, &ConesFile::new(c, cones))?;
    write_json(&cfg.out, artifacts::SITES, &SitesFile::new(c, cfg.mode, sites))
}

fn write_sets(cfg: &RunConfig, c: &Circuit, sites: &[FaultSite]) -> Result<SetCollection, CliError> {
    let sets = collect_static_sets(c.ff_names(), sites);
    info!(
        "static sets: {} raw, {} unique, max multiplicity {}",
        sets.num_sets(),
        sets.num_unique(),
        sets.max_multiplicity()
    );
    write_json(&cfg.out, artifacts::SETS, &SetsFile::new(c, &sets, &static_cone_view(c, sites)))?;
    Ok(sets)
}

pub fn stage_sets(cfg: &RunConfig) -> Result<(), CliError> {
    let c = circuit(cfg, "sets")?;
    let sites = sites(cfg, &c, "sets")?;
    write_sets(cfg, &c, &sites).map(|_| ())
}

fn pattern_config(cfg: &RunConfig) -> PatternConfig {
    PatternConfig {
        cap: cfg.pattern_cap,
        conflict_cap: cfg.conflict_cap,
        seed: cfg.seed,
    }
}

fn write_dimacs(cfg: &RunConfig, c: &Circuit, sites: &[FaultSite]) -> Result<(), CliError> {
    let dir = cfg.out.join("cnf");
    for s in sites.iter().filter(|s| !s.po_only()) {
        let m = build_miter(c, s)?;
        let path = dir.join(format!("site_{}.cnf", s.net.0));
        let mut text = format!("c site {}\n", c.net_name(s.net));
        text.push_str(&encode_cnf(&m).to_dimacs_string());
        write_text(&path, &text)?;
    }
    Ok(())
}

fn write_propagation(
    cfg: &RunConfig,
    c: &Circuit,
    sites: &[FaultSite],
    static_sets: &SetCollection,
) -> Result<SetCollection, CliError> {
    let pc = pattern_config(cfg);
    let analyzable = sites.iter().filter(|s| !s.po_only()).count();
    info!("propagation analysis of {analyzable} sites, jobs = {}", cfg.jobs);
    let start = Instant::now();
    let results: Vec<SiteAnalysis> = analyze_sites(c, sites, &pc, cfg.jobs);
    for r in &results {
        debug!(
            "site {}: {} sets, {} SAT calls, {} conflicts, {:.3} ms{}",
            c.net_name(r.site),
            r.outcome.sets().len(),
            r.sat_calls,
            r.conflicts,
            r.elapsed.as_secs_f64() * 1e3,
            if r.outcome.is_overflow() { " (overflow)" } else { "" }
        );
    }
    let file = PatternsFile::new(c, sites, &results, cfg.pattern_cap, cfg.conflict_cap, cfg.seed);
    if file.overflow_sites + file.unknown_sites > 0 {
        warn!(
            "{} sites exceeded the pattern cap and {} hit the conflict cap; their static sets are kept",
            file.overflow_sites, file.unknown_sites
        );
    }
    info!(
        "propagation done in {:.2} s; {} sites never reach a flip-flop",
        start.elapsed().as_secs_f64(),
        file.sites_without_patterns
    );
    write_json(&cfg.out, artifacts::PATTERNS, &file)?;

    let outcomes: BTreeMap<_, _> = results.into_iter().map(|r| (r.site, r.outcome)).collect();
    let optimized = optimize_sets(static_sets, &outcomes, ReplacementPolicy::CostGuarded)?;
    let cone_view = collect_cone_sets(c.ff_names(), &extract_all_cones(c), sites, |s| {
        outcomes.get(&s.net).map(|o| o.sets()).unwrap_or_default()
    });
    info!(
        "optimized sets: {} raw, {} unique, max multiplicity {}",
        optimized.num_sets(),
        optimized.num_unique(),
        optimized.max_multiplicity()
    );
    write_json(&cfg.out, artifacts::OPTIMIZED, &SetsFile::new(c, &optimized, &cone_view))?;
    if cfg.dimacs {
        write_dimacs(cfg, c, sites)?;
    }
    Ok(optimized)
}

pub fn stage_propagate(cfg: &RunConfig) -> Result<(), CliError> {
    let c = circuit(cfg, "propagate")?;
    let sites = sites(cfg, &c, "propagate")?;
    let static_sets = if cfg.input.is_some() {
        collect_static_sets(c.ff_names(), &sites)
    } else {
        read_json::<SetsFile>(&cfg.out, artifacts::SETS, "propagate", "sets")?.to_collection(artifacts::SETS)?
    };
    write_propagation(cfg, &c, &sites, &static_sets).map(|_| ())
}

fn write_report(
    cfg: &RunConfig,
    num_ffs: usize,
    static_sets: &SetCollection,
    optimized: &SetCollection,
) -> Result<CampaignReport, CliError> {
    let report = compare_methods(num_ffs, static_sets, optimized, &cfg.margins, cfg.confidence)?;
    if !report.monotone {
        warn!("propagated fault space exceeds the static one");
    }
    for r in &report.methods {
        info!("{:>10}: total faults {} ({})", r.method, r.total_faults, r.total_faults_sci);
    }
    write_json(
        &cfg.out,
        artifacts::REPORT_JSON,
        &ReportFile {
            flip_flops: num_ffs,
            report: report.clone(),
        },
    )?;
    let csv = artifacts::report_csv(&report).map_err(|e| CliError::Usage(e.to_string()))?;
    write_text(&cfg.out.join(artifacts::REPORT_CSV), &csv)?;
    Ok(report)
}

pub fn stage_report(cfg: &RunConfig) -> Result<(), CliError> {
    let report = if cfg.input.is_some() {
        run_pipeline(cfg)?
    } else {
        let s: SetsFile = read_json(&cfg.out, artifacts::SETS, "report", "sets")?;
        let o: SetsFile = read_json(&cfg.out, artifacts::OPTIMIZED, "report", "propagate")?;
        if s.flip_flops != o.flip_flops {
            return Err(CliError::BadArtifact {
                file: artifacts::OPTIMIZED,
                message: "flip-flop list differs from sets.json".into(),
            });
        }
        write_report(
            cfg,
            s.flip_flops.len(),
            &s.to_collection(artifacts::SETS)?,
            &o.to_collection(artifacts::OPTIMIZED)?,
        )?
    };
    print!("{}", artifacts::report_csv(&report).map_err(|e| CliError::Usage(e.to_string()))?);
    Ok(())
}

/// Sample sizes for a population given directly, without any circuit.
pub fn sfi_only(cfg: &RunConfig, population: &str) -> Result<String, CliError> {
    let n = BigUint::parse_bytes(population.trim().as_bytes(), 10)
        .ok_or_else(|| CliError::Usage(format!("population `{population}` is not a nonnegative integer")))?;
    let mut header = vec!["population".to_string(), "confidence".to_string()];
    let mut row = vec![n.to_string(), cfg.confidence.to_string()];
    for &m in &cfg.margins {
        header.push(format!("n({})", artifacts::margin_label(m)));
        let p = plan(Method::Random, &n, m, cfg.confidence)?;
        row.push(p.sample.map_or_else(String::new, |s| s.to_string()));
    }
    Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
}

/// Full pipeline with every artifact written.
pub fn run_pipeline(cfg: &RunConfig) -> Result<CampaignReport, CliError> {
    let c = circuit(cfg, "run")?;
    let cones = extract_all_cones(&c);
    let sites = enumerate_fault_sites(&c, cfg.mode);
    write_cones(cfg, &c, &cones, &sites)?;
    let static_sets = write_sets(cfg, &c, &sites)?;
    let optimized = write_propagation(cfg, &c, &sites, &static_sets)?;
    write_report(cfg, c.stats().num_ffs, &static_sets, &optimized)
}
