//! Seeded random sequential circuits for tests, benchmarks and fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::netlist::{Circuit, CircuitBuilder, GateKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub inputs: usize,
    pub outputs: usize,
    pub ffs: usize,
    pub gates: usize,
    /// Upper bound on inputs of non-unary gates (at least 2).
    pub max_fanin: usize,
    /// Gate inputs are drawn from the most recent `window` nets, which keeps
    /// logic depth and reconvergence realistic.
    pub window: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            inputs: 4,
            outputs: 2,
            ffs: 4,
            gates: 20,
            max_fanin: 3,
            window: 12,
        }
    }
}

const KINDS: [(GateKind, u32); 8] = [
    (GateKind::And, 5),
    (GateKind::Or, 4),
    (GateKind::Nand, 4),
    (GateKind::Nor, 3),
    (GateKind::Xor, 2),
    (GateKind::Xnor, 1),
    (GateKind::Not, 3),
    (GateKind::Buff, 1),
];

fn pick_kind(rng: &mut ChaCha8Rng) -> GateKind {
    let total: u32 = KINDS.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen_range(0..total);
    for (k, w) in KINDS {
        if x < w {
            return k;
        }
        x -= w;
    }
    unreachable!()
}

/// Build a random circuit. Names: `i<k>` inputs, `q<k>` flip-flop outputs,
/// `g<k>` gate outputs. Identical parameters and seed give an identical
/// circuit. Flip-flops with nothing else to sample get one input added.
pub fn random_circuit(p: &GeneratorParams, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let mut pool: Vec<String> = Vec::new();
    let inputs = if p.gates == 0 && p.ffs > 0 { p.inputs.max(1) } else { p.inputs };
    for k in 0..inputs {
        let name = format!("i{k}");
        b.input(&name);
        pool.push(name);
    }
    pool.extend((0..p.ffs).map(|k| format!("q{k}")));

    let mut gate_names = Vec::with_capacity(p.gates);
    for k in 0..p.gates {
        if pool.is_empty() {
            break;
        }
        let window = &pool[pool.len().saturating_sub(p.window.max(2))..];
        let mut kind = pick_kind(&mut rng);
        if window.len() < 2 {
            kind = GateKind::Not;
        }
        let arity = if kind.is_unary() {
            1
        } else {
            rng.gen_range(2..=p.max_fanin.max(2).min(window.len()))
        };
        let ins: Vec<String> = window.choose_multiple(&mut rng, arity).cloned().collect();
        let name = format!("g{k}");
        b.gate(&name, kind, ins);
        pool.push(name.clone());
        gate_names.push(name);
    }

    // Prefer the deeper half of the logic for D pins.
    let candidates: &[String] = if gate_names.is_empty() {
        &pool[..inputs]
    } else {
        &gate_names[gate_names.len() / 2..]
    };
    for k in 0..p.ffs {
        let d = candidates.choose(&mut rng).expect("nonempty candidates");
        b.dff(format!("q{k}"), d);
    }
    if !gate_names.is_empty() {
        for o in gate_names.choose_multiple(&mut rng, p.outputs.min(gate_names.len())) {
            b.output(o);
        }
    }
    b.build().expect("generated circuits are well-formed by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::write_bench;

    #[test]
    fn deterministic_per_seed() {
        let p = GeneratorParams::default();
        assert_eq!(write_bench(&random_circuit(&p, 7)), write_bench(&random_circuit(&p, 7)));
        assert_ne!(write_bench(&random_circuit(&p, 7)), write_bench(&random_circuit(&p, 8)));
    }

    #[test]
    fn requested_shape() {
        let p = GeneratorParams {
            inputs: 10,
            outputs: 5,
            ffs: 50,
            gates: 500,
            max_fanin: 4,
            window: 40,
        };
        let s = random_circuit(&p, 1).stats();
        assert_eq!((s.num_pis, s.num_ffs, s.num_gates, s.num_pos), (10, 50, 500, 5));
    }

    #[test]
    fn degenerate_shapes() {
        let only_ffs = GeneratorParams {
            inputs: 0,
            outputs: 0,
            ffs: 3,
            gates: 0,
            ..GeneratorParams::default()
        };
        assert_eq!(random_circuit(&only_ffs, 0).stats().num_ffs, 3);
        let one_input = GeneratorParams {
            inputs: 1,
            ffs: 0,
            gates: 3,
            ..GeneratorParams::default()
        };
        assert_eq!(random_circuit(&one_input, 0).stats().num_gates, 3);
    }
}
