//! Static fan-in cones and collapsed SET fault sites.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Circuit, Driver, FfId, NetId, Sink};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("net id {0} is out of range")]
    UnknownNet(u32),
}

/// Backward closure of one flip-flop's D input, stopping at PIs and FF outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaninCone {
    pub ff: FfId,
    /// Sorted. Always contains the FF's d net.
    pub members: Vec<NetId>,
    /// Sorted PIs and FF `q` nets feeding the cone. When the d net is itself a
    /// source the cone degenerates to `members == support == [d]`.
    pub support: Vec<NetId>,
}

impl FaninCone {
    pub fn contains(&self, n: NetId) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    /// Members plus support: every net whose value can reach the D pin.
    pub fn closure(&self) -> BTreeSet<NetId> {
        self.members.iter().chain(&self.support).copied().collect()
    }

    pub fn gate_count(&self, c: &Circuit) -> usize {
        self.members
            .iter()
            .filter(|&&n| matches!(c.net(n).driver, Driver::Gate(_)))
            .count()
    }
}

pub fn extract_fanin_cone(c: &Circuit, ff: FfId) -> FaninCone {
    let d = c.flip_flop(ff).d;
    let mut members = BTreeSet::new();
    let mut support = BTreeSet::new();
    let mut stack = vec![d];
    members.insert(d);
    while let Some(n) = stack.pop() {
        match c.net(n).driver {
            Driver::Gate(g) => {
                for &i in &c.gate(g).inputs {
                    if c.is_source(i) {
                        support.insert(i);
                    } else if members.insert(i) {
                        stack.push(i);
                    }
                }
            }
            Driver::Input | Driver::FlipFlop(_) => {
                support.insert(n);
            }
        }
    }
    FaninCone {
        ff,
        members: members.into_iter().collect(),
        support: support.into_iter().collect(),
    }
}

pub fn extract_all_cones(c: &Circuit) -> Vec<FaninCone> {
    (0..c.flip_flops().len())
        .map(|i| extract_fanin_cone(c, FfId::from_index(i)))
        .collect()
}

/// Forward static reachability of every net to flip-flop D pins, without
/// crossing a flip-flop.
#[derive(Debug, Clone)]
pub struct ReachTable {
    reach: Vec<FixedBitSet>,
}

impl ReachTable {
    pub fn new(c: &Circuit) -> Self {
        let nff = c.flip_flops().len();
        let mut reach = vec![FixedBitSet::with_capacity(nff); c.nets().len()];
        let fill = |reach: &mut Vec<FixedBitSet>, n: NetId| {
            let mut acc = FixedBitSet::with_capacity(nff);
            for sink in &c.net(n).fanout {
                match *sink {
                    Sink::FlipFlop(f) => acc.insert(f.index()),
                    Sink::Gate(g) => acc.union_with(&reach[c.gate(g).output.index()]),
                    Sink::Output => {}
                }
            }
            reach[n.index()] = acc;
        };
        for &g in c.topo_order().iter().rev() {
            fill(&mut reach, c.gate(g).output);
        }
        for (i, net) in c.nets().iter().enumerate() {
            if !matches!(net.driver, Driver::Gate(_)) {
                fill(&mut reach, NetId::from_index(i));
            }
        }
        Self { reach }
    }

    pub fn ffs(&self, n: NetId) -> Vec<FfId> {
        self.reach[n.index()].ones().map(FfId::from_index).collect()
    }

    pub fn reaches(&self, n: NetId, ff: FfId) -> bool {
        self.reach[n.index()].contains(ff.index())
    }
}

/// Sorted flip-flops reachable forward from `net`. Empty when the net only
/// drives primary outputs.
pub fn static_ff_set(c: &Circuit, net: NetId) -> Result<Vec<FfId>, ConeError> {
    if net.index() >= c.nets().len() {
        return Err(ConeError::UnknownNet(net.0));
    }
    let mut seen = FixedBitSet::with_capacity(c.nets().len());
    let mut ffs = BTreeSet::new();
    let mut stack = vec![net];
    seen.insert(net.index());
    while let Some(n) = stack.pop() {
        for sink in &c.net(n).fanout {
            match *sink {
                Sink::FlipFlop(f) => {
                    ffs.insert(f);
                }
                Sink::Gate(g) => {
                    let o = c.gate(g).output;
                    if !seen.put(o.index()) {
                        stack.push(o);
                    }
                }
                Sink::Output => {}
            }
        }
    }
    Ok(ffs.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteMode {
    /// One site per fan-out-free region.
    Collapsed,
    /// One site per combinational net.
    AllNets,
}

impl SiteMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SiteMode::Collapsed => "collapsed",
            SiteMode::AllNets => "all_nets",
        }
    }
}

impl std::fmt::Display for SiteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SiteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "collapsed" => Ok(SiteMode::Collapsed),
            "all_nets" | "all-nets" => Ok(SiteMode::AllNets),
            _ => Err(format!("unknown site mode `{s}` (use collapsed or all_nets)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    /// Net with two or more sink pins.
    Stem,
    /// Single-sink net that drives a flip-flop D pin.
    FfrTerminal,
    /// Region root that ends at a primary output, an excluded net or nowhere.
    OutputTerminal,
    /// Region-internal net; only produced in [`SiteMode::AllNets`].
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSite {
    pub net: NetId,
    pub kind: SiteKind,
    /// Sorted nets whose SETs this site stands for (includes `net`).
    pub represented: Vec<NetId>,
    /// Sorted statically reachable flip-flops.
    pub static_ffs: Vec<FfId>,
}

impl FaultSite {
    /// No flip-flop is reachable; the site is reported but skipped by FF-set
    /// analysis.
    pub fn po_only(&self) -> bool {
        self.static_ffs.is_empty()
    }
}

/// The net that represents `n` in its fan-out-free region, or `None` when `n`
/// is itself a region root.
fn region_successor(c: &Circuit, n: NetId) -> Option<NetId> {
    let net = c.net(n);
    if !c.ffs_fed_by(n).is_empty() || net.fanout.len() != 1 {
        return None;
    }
    match net.fanout[0] {
        Sink::Gate(g) => {
            let out = c.gate(g).output;
            (!c.is_excluded(out)).then_some(out)
        }
        _ => None,
    }
}

fn root_kind(c: &Circuit, n: NetId) -> SiteKind {
    if c.net(n).fanout.len() >= 2 {
        SiteKind::Stem
    } else if !c.ffs_fed_by(n).is_empty() {
        SiteKind::FfrTerminal
    } else {
        SiteKind::OutputTerminal
    }
}

/// Enumerate SET fault sites, sorted by net id. Flip-flop outputs and
/// excluded nets are never sites.
pub fn enumerate_fault_sites(c: &Circuit, mode: SiteMode) -> Vec<FaultSite> {
    let reach = ReachTable::new(c);
    let candidates = (0..c.nets().len())
        .map(NetId::from_index)
        .filter(|&n| c.is_combinational(n) && !c.is_excluded(n));

    match mode {
        SiteMode::AllNets => candidates
            .map(|n| FaultSite {
                net: n,
                kind: if region_successor(c, n).is_some() {
                    SiteKind::Internal
                } else {
                    root_kind(c, n)
                },
                represented: vec![n],
                static_ffs: reach.ffs(n),
            })
            .collect(),
        SiteMode::Collapsed => {
            let mut root_of: Vec<Option<NetId>> = vec![None; c.nets().len()];
            // Reverse topological order resolves a gate's output before its inputs.
            let mut order: Vec<NetId> = c
                .topo_order()
                .iter()
                .rev()
                .map(|&g| c.gate(g).output)
                .collect();
            order.extend(c.inputs());
            let mut sites: Vec<FaultSite> = Vec::new();
            let mut site_index = vec![usize::MAX; c.nets().len()];
            for n in order {
                if c.is_excluded(n) {
                    continue;
                }
                let root = match region_successor(c, n) {
                    Some(next) => root_of[next.index()].expect("successor resolved first"),
                    None => {
                        site_index[n.index()] = sites.len();
                        sites.push(FaultSite {
                            net: n,
                            kind: root_kind(c, n),
                            represented: Vec::new(),
                            static_ffs: reach.ffs(n),
                        });
                        n
                    }
                };
                root_of[n.index()] = Some(root);
                sites[site_index[root.index()]].represented.push(n);
            }
            for s in &mut sites {
                s.represented.sort();
            }
            sites.sort_by_key(|s| s.net);
            sites
        }
    }
}
