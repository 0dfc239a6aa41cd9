//! SAT-based propagation analysis of SET fault sites.
//!
//! For a site we build a single-frame miter: one fault-free copy of every
//! net feeding the affected flip-flops, a second copy of just the nets
//! downstream of the site with the site itself inverted, and one difference
//! variable per affected flip-flop. All-solutions enumeration projected onto
//! the difference variables yields every achievable simultaneous-upset
//! combination.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::cones::{extract_fanin_cone, FaultSite};
use crate::ffsets::{FfSet, RawSet, SetCollection, SetOrigin};
use crate::netlist::{Circuit, FfId, GateId, GateKind, NetId};
use crate::oracle::Assignment;
use crate::sat::{CnfFormula, Lit, SolveResult, Solver, SolverConfig, Var};

pub const DEFAULT_PATTERN_CAP: usize = 4096;
pub const DEFAULT_CONFLICT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropagationError {
    #[error("site `{0}` reaches no flip-flop")]
    PoOnly(String),
    #[error("no propagation result for site net {0}")]
    MissingResult(u32),
}

/// One achievable combination of simultaneously upset flip-flops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferencePattern {
    pub site: NetId,
    pub pattern: FfSet,
    /// Support assignment under which the pattern is observed.
    pub witness: Assignment,
}

#[derive(Debug, Clone)]
pub struct MiterInstance<'c> {
    circuit: &'c Circuit,
    pub site: NetId,
    pub static_ffs: Vec<FfId>,
    /// Free nets (PIs, flip-flop outputs) shared by both copies.
    pub support: Vec<NetId>,
    pub good: BTreeMap<NetId, Var>,
    /// Nets downstream of the site. The site maps to the negated good literal.
    pub faulty: BTreeMap<NetId, Lit>,
    pub diffs: Vec<(FfId, Var)>,
    pub good_gates: Vec<GateId>,
    pub faulty_gates: Vec<GateId>,
    num_vars: u32,
}

impl MiterInstance<'_> {
    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Gates present in the faulty copy.
    pub fn duplicated_gates(&self) -> usize {
        self.faulty_gates.len()
    }

    fn faulty_or_good(&self, n: NetId) -> Lit {
        self.faulty
            .get(&n)
            .copied()
            .unwrap_or_else(|| self.good[&n].pos())
    }
}

pub fn build_miter<'c>(c: &'c Circuit, site: &FaultSite) -> Result<MiterInstance<'c>, PropagationError> {
    if site.po_only() {
        return Err(PropagationError::PoOnly(c.net_name(site.net).to_string()));
    }
    let mut region = BTreeSet::new();
    let mut support = BTreeSet::new();
    for &f in &site.static_ffs {
        let cone = extract_fanin_cone(c, f);
        region.extend(cone.members.iter().copied());
        region.extend(cone.support.iter().copied());
        support.extend(cone.support.iter().copied());
    }

    let mut next = 0u32;
    let mut fresh = || {
        let v = Var(next);
        next += 1;
        v
    };
    let good: BTreeMap<NetId, Var> = region.iter().map(|&n| (n, fresh())).collect();
    let good_gates: Vec<GateId> = c
        .topo_order()
        .iter()
        .copied()
        .filter(|&g| region.contains(&c.gate(g).output))
        .collect();

    let mut faulty = BTreeMap::new();
    faulty.insert(site.net, good[&site.net].neg());
    let mut faulty_gates = Vec::new();
    for &g in &good_gates {
        let gate = c.gate(g);
        if gate.output != site.net && gate.inputs.iter().any(|i| faulty.contains_key(i)) {
            faulty.insert(gate.output, fresh().pos());
            faulty_gates.push(g);
        }
    }
    let diffs = site.static_ffs.iter().map(|&f| (f, fresh())).collect();

    Ok(MiterInstance {
        circuit: c,
        site: site.net,
        static_ffs: site.static_ffs.clone(),
        support: support.into_iter().collect(),
        good,
        faulty,
        diffs,
        good_gates,
        faulty_gates,
        num_vars: next,
    })
}

fn and_clauses(f: &mut CnfFormula, out: Lit, ins: &[Lit]) {
    for &i in ins {
        f.add_clause([!out, i]);
    }
    f.add_clause(std::iter::once(out).chain(ins.iter().map(|&i| !i)));
}

fn or_clauses(f: &mut CnfFormula, out: Lit, ins: &[Lit]) {
    for &i in ins {
        f.add_clause([out, !i]);
    }
    f.add_clause(std::iter::once(!out).chain(ins.iter().copied()));
}

fn xor2_clauses(f: &mut CnfFormula, out: Lit, a: Lit, b: Lit) {
    f.add_clause([!out, a, b]);
    f.add_clause([!out, !a, !b]);
    f.add_clause([out, !a, b]);
    f.add_clause([out, a, !b]);
}

fn xor_clauses(f: &mut CnfFormula, out: Lit, ins: &[Lit]) {
    let (last, head) = ins.split_last().expect("xor has inputs");
    let mut acc = head[0];
    for &i in &head[1..] {
        let t = f.new_var().pos();
        xor2_clauses(f, t, acc, i);
        acc = t;
    }
    xor2_clauses(f, out, acc, *last);
}

/// Append the Tseitin clauses defining `out = kind(ins)`. n-ary XOR/XNOR
/// allocate chain variables in `f`.
pub fn tseitin_gate(f: &mut CnfFormula, kind: GateKind, out: Lit, ins: &[Lit]) {
    match kind {
        GateKind::And => and_clauses(f, out, ins),
        GateKind::Nand => and_clauses(f, !out, ins),
        GateKind::Or => or_clauses(f, out, ins),
        GateKind::Nor => or_clauses(f, !out, ins),
        GateKind::Xor => xor_clauses(f, out, ins),
        GateKind::Xnor => xor_clauses(f, !out, ins),
        GateKind::Not => {
            f.add_clause([out, ins[0]]);
            f.add_clause([!out, !ins[0]]);
        }
        GateKind::Buff => {
            f.add_clause([!out, ins[0]]);
            f.add_clause([out, !ins[0]]);
        }
    }
}

/// CNF of the miter plus the clause requiring at least one difference.
pub fn encode_cnf(m: &MiterInstance<'_>) -> CnfFormula {
    let c = m.circuit;
    let mut f = CnfFormula::with_vars(m.num_vars);
    for (&n, &v) in &m.good {
        f.annotate(v, format!("good {}", c.net_name(n)));
    }
    for (&n, &l) in &m.faulty {
        if n != m.site {
            f.annotate(l.var(), format!("faulty {}", c.net_name(n)));
        }
    }
    for &(ff, v) in &m.diffs {
        f.annotate(v, format!("diff {}", c.ff_name(ff)));
    }

    let mut ins = Vec::new();
    for &g in &m.good_gates {
        let gate = c.gate(g);
        ins.clear();
        ins.extend(gate.inputs.iter().map(|i| m.good[i].pos()));
        tseitin_gate(&mut f, gate.kind, m.good[&gate.output].pos(), &ins);
    }
    for &g in &m.faulty_gates {
        let gate = c.gate(g);
        ins.clear();
        ins.extend(gate.inputs.iter().map(|&i| m.faulty_or_good(i)));
        tseitin_gate(&mut f, gate.kind, m.faulty[&gate.output], &ins);
    }
    for &(ff, d) in &m.diffs {
        let net = c.flip_flop(ff).d;
        let g = m.good[&net].pos();
        let b = m.faulty_or_good(net);
        if b == !g {
            f.add_clause([d.pos()]);
        } else {
            xor2_clauses(&mut f, d.pos(), g, b);
        }
    }
    f.add_clause(m.diffs.iter().map(|(_, d)| d.pos()));
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowReason {
    /// More distinct patterns than the configured cap.
    CapExceeded,
    /// The solver hit its conflict budget.
    SolverUnknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternOutcome {
    /// The complete list of achievable patterns, in discovery order. Empty
    /// when the SET never reaches a flip-flop.
    Exact(Vec<DifferencePattern>),
    /// Enumeration gave up; the static set stands in as a sound
    /// over-approximation.
    Overflow {
        reason: OverflowReason,
        fallback: FfSet,
        found: usize,
    },
}

impl PatternOutcome {
    pub fn is_overflow(&self) -> bool {
        matches!(self, PatternOutcome::Overflow { .. })
    }

    /// Sets attributed to the site: its patterns, or the fallback.
    pub fn sets(&self) -> Vec<&FfSet> {
        match self {
            PatternOutcome::Exact(ps) => ps.iter().map(|p| &p.pattern).collect(),
            PatternOutcome::Overflow { fallback, .. } => vec![fallback],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatternConfig {
    pub cap: usize,
    pub conflict_cap: u64,
    pub seed: u64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_PATTERN_CAP,
            conflict_cap: DEFAULT_CONFLICT_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SiteAnalysis {
    pub site: NetId,
    pub outcome: PatternOutcome,
    pub sat_calls: u64,
    pub conflicts: u64,
    pub elapsed: Duration,
}

fn site_seed(seed: u64, site: NetId) -> u64 {
    seed ^ (site.0 as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn analyze_site(c: &Circuit, site: &FaultSite, cfg: &PatternConfig) -> Result<SiteAnalysis, PropagationError> {
    let start = Instant::now();
    let miter = build_miter(c, site)?;
    let cnf = encode_cnf(&miter);
    let mut solver = Solver::from_formula(
        &cnf,
        SolverConfig {
            conflict_limit: Some(cfg.conflict_cap),
            seed: site_seed(cfg.seed, site.net),
            ..SolverConfig::default()
        },
    );
    let cap = cfg.cap.max(1);
    let mut found: Vec<DifferencePattern> = Vec::new();
    let mut sat_calls = 0;
    let outcome = loop {
        sat_calls += 1;
        match solver.solve() {
            SolveResult::Unsat => break PatternOutcome::Exact(found),
            SolveResult::Unknown => {
                break PatternOutcome::Overflow {
                    reason: OverflowReason::SolverUnknown,
                    fallback: FfSet::new(site.static_ffs.iter().copied()).unwrap(),
                    found: found.len(),
                }
            }
            SolveResult::Sat => {
                if found.len() == cap {
                    break PatternOutcome::Overflow {
                        reason: OverflowReason::CapExceeded,
                        fallback: FfSet::new(site.static_ffs.iter().copied()).unwrap(),
                        found: found.len(),
                    };
                }
                let model = solver.model();
                let pattern = FfSet::new(
                    miter
                        .diffs
                        .iter()
                        .filter(|(_, d)| model[d.index()])
                        .map(|&(f, _)| f),
                )
                .expect("at-least-one clause forces a difference");
                let witness = miter
                    .support
                    .iter()
                    .map(|&s| (s, model[miter.good[&s].index()]))
                    .collect();
                // Block this d-vector only; other support values may still
                // produce different vectors.
                let block: Vec<Lit> = miter
                    .diffs
                    .iter()
                    .map(|(_, d)| d.lit(!model[d.index()]))
                    .collect();
                found.push(DifferencePattern {
                    site: site.net,
                    pattern,
                    witness,
                });
                solver.add_clause(block);
            }
        }
    };
    Ok(SiteAnalysis {
        site: site.net,
        outcome,
        sat_calls,
        conflicts: solver.stats().conflicts,
        elapsed: start.elapsed(),
    })
}

/// Achievable difference patterns of one site, or the static fallback.
pub fn enumerate_patterns(c: &Circuit, site: &FaultSite, cfg: &PatternConfig) -> Result<PatternOutcome, PropagationError> {
    analyze_site(c, site, cfg).map(|a| a.outcome)
}

/// Analyze every site that reaches a flip-flop, `jobs` at a time. Results are
/// in site order regardless of scheduling.
pub fn analyze_sites(c: &Circuit, sites: &[FaultSite], cfg: &PatternConfig, jobs: usize) -> Vec<SiteAnalysis> {
    let run = || {
        sites
            .par_iter()
            .filter(|s| !s.po_only())
            .map(|s| analyze_site(c, s, cfg).expect("po-only sites filtered"))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// How per-site patterns replace static sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplacementPolicy {
    /// Every pattern of every site becomes a set.
    AllPatterns,
    /// Sites sharing a static set are replaced by their patterns only when
    /// the patterns' combined fault space does not exceed the static set's;
    /// otherwise the static set is kept. The static set's combinations
    /// include every pattern, so coverage is unchanged and the optimized
    /// total can never exceed the static total.
    #[default]
    CostGuarded,
}

fn combos(k: usize) -> u128 {
    (1u128 << k.min(127)) - 1
}

/// Build the optimized collection from the static one and per-site outcomes.
/// Sites whose SET never reaches a flip-flop drop out.
pub fn optimize_sets(
    static_sets: &SetCollection,
    results: &BTreeMap<NetId, PatternOutcome>,
    policy: ReplacementPolicy,
) -> Result<SetCollection, PropagationError> {
    let mut groups: BTreeMap<&FfSet, Vec<(NetId, &PatternOutcome)>> = BTreeMap::new();
    for raw in static_sets.raw() {
        let SetOrigin::Site(net) = raw.origin else {
            return Err(PropagationError::MissingResult(u32::MAX));
        };
        let outcome = results
            .get(&net)
            .ok_or(PropagationError::MissingResult(net.0))?;
        groups.entry(&raw.set).or_default().push((net, outcome));
    }

    let mut raw = Vec::new();
    for (static_set, members) in groups {
        let keep_static = match policy {
            ReplacementPolicy::AllPatterns => false,
            ReplacementPolicy::CostGuarded => {
                let union: BTreeSet<&FfSet> =
                    members.iter().flat_map(|(_, o)| o.sets()).collect();
                let cost: u128 = union.iter().map(|s| combos(s.multiplicity())).sum();
                cost > combos(static_set.multiplicity())
            }
        };
        for (net, outcome) in members {
            let sets = outcome.sets();
            if keep_static && !sets.is_empty() {
                raw.push(RawSet {
                    origin: SetOrigin::Site(net),
                    set: static_set.clone(),
                });
            } else if !keep_static {
                raw.extend(sets.into_iter().map(|s| RawSet {
                    origin: SetOrigin::Site(net),
                    set: s.clone(),
                }));
            }
        }
    }
    // Restore site order for stable output.
    raw.sort_by(|a, b| a.origin.cmp(&b.origin).then_with(|| a.set.cmp(&b.set)));
    Ok(SetCollection::from_raw(static_sets.ff_names().to_vec(), raw))
}
