//! Map gate-level single-event transients onto multiple flip-flop upset sets.
pub mod campaign;
pub mod cones;
pub mod ffsets;
pub mod generate;
pub mod netlist;
pub mod oracle;
pub mod propagation;
pub mod sat;
