//! On-disk JSON/CSV documents and their conversion to library types.
//!
//! Everything references nets and flip-flops by name, with numeric ids kept
//! alongside where a later stage needs to rebuild exact library values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use setmffu::campaign::{fault_space_total, CampaignReport, Method};
use setmffu::cones::{FaninCone, FaultSite, SiteKind, SiteMode};
use setmffu::ffsets::{FfSet, RawSet, SetCollection, SetOrigin};
use setmffu::netlist::{Circuit, FfId, NetId};
use setmffu::propagation::{OverflowReason, PatternOutcome, SiteAnalysis};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{file}: unknown net `{name}`")]
    UnknownNet { file: &'static str, name: String },
    #[error("{file}: unknown flip-flop `{name}`")]
    UnknownFf { file: &'static str, name: String },
    #[error("{file}: empty flip-flop set")]
    EmptySet { file: &'static str },
}

pub const CIRCUIT: &str = "circuit.json";
pub const CONES: &str = "cones.json";
pub const SITES: &str = "sites.json";
pub const SETS: &str = "sets.json";
pub const PATTERNS: &str = "patterns.json";
pub const OPTIMIZED: &str = "optimized_sets.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeRow {
    pub ff: String,
    pub ff_id: u32,
    pub member_nets: Vec<String>,
    pub support: Vec<String>,
    pub gate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConesFile {
    pub cones: Vec<ConeRow>,
}

impl ConesFile {
    pub fn new(c: &Circuit, cones: &[FaninCone]) -> Self {
        let names = |ns: &[NetId]| ns.iter().map(|&n| c.net_name(n).to_string()).collect();
        Self {
            cones: cones
                .iter()
                .map(|k| ConeRow {
                    ff: c.ff_name(k.ff).to_string(),
                    ff_id: k.ff.0,
                    member_nets: names(&k.members),
                    support: names(&k.support),
                    gate_count: k.gate_count(c),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRow {
    pub site_net: String,
    pub net_id: u32,
    pub kind: SiteKind,
    pub represented_nets: Vec<String>,
    pub static_ffs: Vec<String>,
    pub po_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SitesFile {
    pub mode: SiteMode,
    pub sites: Vec<SiteRow>,
}

fn net_id(c: &Circuit, file: &'static str, name: &str) -> Result<NetId, ArtifactError> {
    c.find_net(name).ok_or_else(|| ArtifactError::UnknownNet {
        file,
        name: name.to_string(),
    })
}

fn ff_id_by_name(c: &Circuit, file: &'static str, name: &str) -> Result<FfId, ArtifactError> {
    c.find_ff(name).ok_or_else(|| ArtifactError::UnknownFf {
        file,
        name: name.to_string(),
    })
}

impl SitesFile {
    pub fn new(c: &Circuit, mode: SiteMode, sites: &[FaultSite]) -> Self {
        Self {
            mode,
            sites: sites
                .iter()
                .map(|s| SiteRow {
                    site_net: c.net_name(s.net).to_string(),
                    net_id: s.net.0,
                    kind: s.kind,
                    represented_nets: s.represented.iter().map(|&n| c.net_name(n).to_string()).collect(),
                    static_ffs: s.static_ffs.iter().map(|&f| c.ff_name(f).to_string()).collect(),
                    po_only: s.po_only(),
                })
                .collect(),
        }
    }

    pub fn to_sites(&self, c: &Circuit) -> Result<Vec<FaultSite>, ArtifactError> {
        self.sites
            .iter()
            .map(|r| {
                Ok(FaultSite {
                    net: net_id(c, SITES, &r.site_net)?,
                    kind: r.kind,
                    represented: r
                        .represented_nets
                        .iter()
                        .map(|n| net_id(c, SITES, n))
                        .collect::<Result<_, _>>()?,
                    static_ffs: r
                        .static_ffs
                        .iter()
                        .map(|n| ff_id_by_name(c, SITES, n))
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRef {
    pub net: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetRow {
    pub members: Vec<String>,
    pub multiplicity: usize,
    pub sites: Vec<SiteRef>,
}

/// Union of per-site sets over the sites lying in one flip-flop's cone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSetRow {
    pub cone: String,
    pub members: Vec<String>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetsFile {
    pub flip_flops: Vec<String>,
    pub num_sets: usize,
    pub num_unique: usize,
    pub max_multiplicity: usize,
    pub total_faults: String,
    pub sets: Vec<SetRow>,
    pub affected_cones: Vec<ConeSetRow>,
}

fn member_names(names: &[String], set: &FfSet) -> Vec<String> {
    set.members().iter().map(|f| names[f.index()].clone()).collect()
}

impl SetsFile {
    /// `cone_view` is the affected-cone collection (origins are cones).
    pub fn new(c: &Circuit, sets: &SetCollection, cone_view: &SetCollection) -> Self {
        let names = sets.ff_names();
        let rows = sets
            .unique()
            .iter()
            .map(|set| SetRow {
                members: member_names(names, set),
                multiplicity: set.multiplicity(),
                sites: sets
                    .origins_of(set)
                    .filter_map(|o| match o {
                        SetOrigin::Site(n) => Some(SiteRef {
                            net: n.0,
                            name: c.net_name(n).to_string(),
                        }),
                        SetOrigin::Cone(_) => None,
                    })
                    .collect(),
            })
            .collect();
        let affected_cones = cone_view
            .raw()
            .iter()
            .map(|r| ConeSetRow {
                cone: match r.origin {
                    SetOrigin::Cone(f) => c.ff_name(f).to_string(),
                    SetOrigin::Site(n) => c.net_name(n).to_string(),
                },
                members: member_names(names, &r.set),
                multiplicity: r.set.multiplicity(),
            })
            .collect();
        Self {
            flip_flops: names.to_vec(),
            num_sets: sets.num_sets(),
            num_unique: sets.num_unique(),
            max_multiplicity: sets.max_multiplicity(),
            total_faults: fault_space_total(sets).to_string(),
            sets: rows,
            affected_cones,
        }
    }

    /// Rebuild the site-origin collection.
    pub fn to_collection(&self, file: &'static str) -> Result<SetCollection, ArtifactError> {
        let index: BTreeMap<&str, FfId> = self
            .flip_flops
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), FfId::from_index(i)))
            .collect();
        let mut raw = Vec::new();
        for row in &self.sets {
            let members = row
                .members
                .iter()
                .map(|m| {
                    index.get(m.as_str()).copied().ok_or_else(|| ArtifactError::UnknownFf {
                        file,
                        name: m.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let set = FfSet::new(members).ok_or(ArtifactError::EmptySet { file })?;
            raw.extend(row.sites.iter().map(|s| RawSet {
                origin: SetOrigin::Site(NetId(s.net)),
                set: set.clone(),
            }));
        }
        raw.sort_by(|a, b| a.origin.cmp(&b.origin).then_with(|| a.set.cmp(&b.set)));
        Ok(SetCollection::from_raw(self.flip_flops.clone(), raw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternStatus {
    Exact,
    Overflow,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRow {
    pub site: String,
    pub net: u32,
    pub static_ffs: Vec<String>,
    pub status: PatternStatus,
    /// Canonically sorted. For overflow/unknown sites: the patterns found
    /// before giving up.
    pub patterns: Vec<Vec<String>>,
    /// Sets used downstream: the patterns, or the static fallback.
    pub effective: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternsFile {
    pub pattern_cap: usize,
    pub conflict_cap: u64,
    pub seed: u64,
    pub sites_analyzed: usize,
    pub sites_without_patterns: usize,
    pub overflow_sites: usize,
    pub unknown_sites: usize,
    pub sites: Vec<PatternRow>,
}

impl PatternsFile {
    pub fn new(c: &Circuit, sites: &[FaultSite], results: &[SiteAnalysis], cap: usize, conflict_cap: u64, seed: u64) -> Self {
        let by_net: BTreeMap<NetId, &FaultSite> = sites.iter().map(|s| (s.net, s)).collect();
        let ffs = |set: &FfSet| -> Vec<String> { set.members().iter().map(|&f| c.ff_name(f).to_string()).collect() };
        let rows: Vec<PatternRow> = results
            .iter()
            .map(|r| {
                let site = by_net[&r.site];
                let (status, found): (PatternStatus, BTreeSet<Vec<String>>) = match &r.outcome {
                    PatternOutcome::Exact(ps) => (PatternStatus::Exact, ps.iter().map(|p| ffs(&p.pattern)).collect()),
                    PatternOutcome::Overflow { reason, .. } => (
                        match reason {
                            OverflowReason::CapExceeded => PatternStatus::Overflow,
                            OverflowReason::SolverUnknown => PatternStatus::Unknown,
                        },
                        BTreeSet::new(),
                    ),
                };
                let effective: BTreeSet<Vec<String>> = r.outcome.sets().into_iter().map(ffs).collect();
                PatternRow {
                    site: c.net_name(r.site).to_string(),
                    net: r.site.0,
                    static_ffs: site.static_ffs.iter().map(|&f| c.ff_name(f).to_string()).collect(),
                    status,
                    patterns: found.into_iter().collect(),
                    effective: effective.into_iter().collect(),
                }
            })
            .collect();
        Self {
            pattern_cap: cap,
            conflict_cap,
            seed,
            sites_analyzed: rows.len(),
            sites_without_patterns: rows.iter().filter(|r| r.effective.is_empty()).count(),
            overflow_sites: rows.iter().filter(|r| r.status == PatternStatus::Overflow).count(),
            unknown_sites: rows.iter().filter(|r| r.status == PatternStatus::Unknown).count(),
            sites: rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub flip_flops: usize,
    pub report: CampaignReport,
}

/// `0.05` → `5%`, `0.001` → `0.1%`.
pub fn margin_label(m: f64) -> String {
    let s = format!("{:.6}", m * 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

pub fn report_csv(report: &CampaignReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "method",
        "num_sets",
        "num_unique",
        "max_multiplicity",
        "total_faults",
        "total_faults_sci",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(report.margins.iter().map(|&m| format!("n({})", margin_label(m))));
    w.write_record(&header)?;
    for m in Method::ALL {
        let r = report.method(m);
        let mut row = vec![
            m.to_string(),
            r.num_sets.to_string(),
            r.num_unique.to_string(),
            r.max_multiplicity.to_string(),
            r.total_faults.to_string(),
            r.total_faults_sci.clone(),
        ];
        row.extend(report.margins.iter().map(|&e| {
            report
                .plan(m, e)
                .and_then(|p| p.sample)
                .map_or_else(String::new, |n| n.to_string())
        }));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
