//! Exhaustive two-valued simulation used as ground truth for the SAT engine
//! on small instances.
//!
//! Nothing here touches the miter or CNF code: the region, support and
//! difference vectors are computed directly from the netlist.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cones::FaultSite;
use crate::ffsets::FfSet;
use crate::netlist::{Circuit, Driver, GateId, NetId};
use crate::propagation::DifferencePattern;

/// Values of free nets (PIs and flip-flop outputs).
pub type Assignment = BTreeMap<NetId, bool>;

pub const DEFAULT_SUPPORT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("assignment has no value for source net `{0}`")]
    IncompleteAssignment(String),
    #[error("site `{site}` depends on {support} free inputs, limit is {limit}")]
    SupportTooLarge {
        site: String,
        support: usize,
        limit: usize,
    },
}

/// Evaluate the whole combinational cloud. Every PI and flip-flop output must
/// be assigned. A `forced_flip` net is complemented before its fanout sees it.
pub fn simulate(
    c: &Circuit,
    a: &Assignment,
    forced_flip: Option<NetId>,
) -> Result<Vec<bool>, OracleError> {
    let mut v = vec![false; c.nets().len()];
    for (i, net) in c.nets().iter().enumerate() {
        if !matches!(net.driver, Driver::Gate(_)) {
            let id = NetId::from_index(i);
            v[i] = *a
                .get(&id)
                .ok_or_else(|| OracleError::IncompleteAssignment(net.name.clone()))?;
            if forced_flip == Some(id) {
                v[i] = !v[i];
            }
        }
    }
    for &g in c.topo_order() {
        let gate = c.gate(g);
        let mut out = gate.kind.eval(gate.inputs.iter().map(|n| v[n.index()]));
        if forced_flip == Some(gate.output) {
            out = !out;
        }
        v[gate.output.index()] = out;
    }
    Ok(v)
}

/// Gates (topological order) and free nets feeding the D pins of `site`'s
/// statically reachable flip-flops.
fn region(c: &Circuit, site: &FaultSite) -> (Vec<GateId>, Vec<NetId>) {
    let mut in_region = vec![false; c.nets().len()];
    let mut stack: Vec<NetId> = site
        .static_ffs
        .iter()
        .map(|&f| c.flip_flop(f).d)
        .collect();
    for n in &stack {
        in_region[n.index()] = true;
    }
    let mut support = BTreeSet::new();
    while let Some(n) = stack.pop() {
        match c.net(n).driver {
            Driver::Gate(g) => {
                for &i in &c.gate(g).inputs {
                    if !in_region[i.index()] {
                        in_region[i.index()] = true;
                        stack.push(i);
                    }
                }
            }
            _ => {
                support.insert(n);
            }
        }
    }
    let gates = c
        .topo_order()
        .iter()
        .copied()
        .filter(|&g| in_region[c.gate(g).output.index()])
        .collect();
    (gates, support.into_iter().collect())
}

/// Lane patterns for the first six support variables of a 64-assignment word.
const LANE_BITS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Every distinct nonempty set of flip-flops whose D value differs between
/// the fault-free circuit and the circuit with `site` flipped, over all
/// assignments of the site's support. Sorted by flip-flop set; each pattern
/// carries the first (lowest-index) witnessing assignment.
pub fn exhaustive_patterns(
    c: &Circuit,
    site: &FaultSite,
    support_limit: usize,
) -> Result<Vec<DifferencePattern>, OracleError> {
    if site.static_ffs.is_empty() {
        return Ok(Vec::new());
    }
    let (gates, support) = region(c, site);
    let k = support.len();
    if k > support_limit || k >= 63 {
        return Err(OracleError::SupportTooLarge {
            site: c.net_name(site.net).to_string(),
            support: k,
            limit: support_limit,
        });
    }
    let total: u64 = 1 << k;
    let words = total.div_ceil(64);
    let valid = if total >= 64 { !0 } else { (1u64 << total) - 1 };
    let d_nets: Vec<NetId> = site.static_ffs.iter().map(|&f| c.flip_flop(f).d).collect();

    let mut good = vec![0u64; c.nets().len()];
    let mut bad = vec![0u64; c.nets().len()];
    let mut found: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let eval = |vals: &mut Vec<u64>, flip: Option<NetId>| {
        for &g in &gates {
            let gate = c.gate(g);
            let mut w = gate.kind.eval_words(gate.inputs.iter().map(|n| vals[n.index()]));
            if flip == Some(gate.output) {
                w = !w;
            }
            vals[gate.output.index()] = w;
        }
    };
    for w in 0..words {
        for (i, &s) in support.iter().enumerate() {
            let word = if i < 6 {
                LANE_BITS[i]
            } else if (w >> (i - 6)) & 1 == 1 {
                !0
            } else {
                0
            };
            good[s.index()] = word;
            bad[s.index()] = if s == site.net { !word } else { word };
        }
        eval(&mut good, None);
        eval(&mut bad, Some(site.net));

        let diffs: Vec<u64> = d_nets
            .iter()
            .map(|d| (good[d.index()] ^ bad[d.index()]) & valid)
            .collect();
        let mut any = diffs.iter().fold(0, |a, d| a | d);
        while any != 0 {
            let lane = any.trailing_zeros();
            any &= any - 1;
            let key: Vec<usize> = diffs
                .iter()
                .enumerate()
                .filter(|(_, d)| (*d >> lane) & 1 == 1)
                .map(|(i, _)| i)
                .collect();
            found.entry(key).or_insert(w * 64 + lane as u64);
        }
    }

    let mut out: Vec<DifferencePattern> = found
        .into_iter()
        .map(|(key, index)| DifferencePattern {
            site: site.net,
            pattern: FfSet::new(key.into_iter().map(|i| site.static_ffs[i])).unwrap(),
            witness: support
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, (index >> i) & 1 == 1))
                .collect(),
        })
        .collect();
    out.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    Ok(out)
}
