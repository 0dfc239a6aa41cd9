//! CNF formulas, DIMACS I/O and a CDCL solver.

mod solver;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::Not;

use thiserror::Error;

pub use solver::{SolveResult, Solver, SolverConfig, SolverStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn pos(self) -> Lit {
        Lit(self.0 << 1)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit(self.0 << 1 | 1)
    }

    pub fn lit(self, positive: bool) -> Lit {
        if positive {
            self.pos()
        } else {
            self.neg()
        }
    }
}

/// Literal encoded as `var << 1 | negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// 1-based signed integer as used by DIMACS.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    /// Panics on 0.
    pub fn from_dimacs(x: i64) -> Lit {
        assert!(x != 0, "0 is not a DIMACS literal");
        Var((x.unsigned_abs() - 1) as u32).lit(x > 0)
    }

    /// Value of this literal under a total variable assignment.
    #[inline]
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var().index()] ^ self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    /// Free-form description of selected variables, written as DIMACS comments.
    annotations: BTreeMap<Var, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {0}: missing or malformed `p cnf` header")]
    Header(usize),
    #[error("line {0}: bad literal `{1}`")]
    Literal(usize, String),
    #[error("literal {0} exceeds declared variable count")]
    VarRange(i64),
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(num_vars: u32) -> Self {
        Self {
            num_vars,
            ..Self::default()
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) {
        let clause: Vec<Lit> = lits.into_iter().collect();
        for l in &clause {
            if l.var().0 >= self.num_vars {
                self.num_vars = l.var().0 + 1;
            }
        }
        self.clauses.push(clause);
    }

    pub fn annotate(&mut self, v: Var, note: impl Into<String>) {
        self.annotations.insert(v, note.into());
    }

    pub fn annotations(&self) -> &BTreeMap<Var, String> {
        &self.annotations
    }

    /// True when every clause has a true literal under `model`.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(model)))
    }

    pub fn write_dimacs<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (v, note) in &self.annotations {
            writeln!(w, "c {} {}", v.0 + 1, note)?;
        }
        writeln!(w, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for c in &self.clauses {
            for l in c {
                write!(w, "{} ", l.to_dimacs())?;
            }
            writeln!(w, "0")?;
        }
        Ok(())
    }

    pub fn to_dimacs_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dimacs(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("DIMACS output is ASCII")
    }

    /// Parse DIMACS CNF. Comment lines of the form `c <var> <text>` written by
    /// [`CnfFormula::write_dimacs`] are read back as annotations.
    pub fn parse_dimacs(text: &str) -> Result<Self, DimacsError> {
        let mut f = CnfFormula::new();
        let mut declared: Option<u32> = None;
        let mut current = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('c') {
                let rest = rest.trim();
                if let Some((v, note)) = rest.split_once(' ') {
                    if let Ok(v) = v.parse::<u32>() {
                        if v > 0 {
                            f.annotations.insert(Var(v - 1), note.to_string());
                        }
                    }
                }
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(DimacsError::Header(i + 1));
                }
                let n = parts[2].parse().map_err(|_| DimacsError::Header(i + 1))?;
                declared = Some(n);
                f.num_vars = n;
                continue;
            }
            let Some(limit) = declared else {
                return Err(DimacsError::Header(i + 1));
            };
            for tok in line.split_whitespace() {
                let x: i64 = tok
                    .parse()
                    .map_err(|_| DimacsError::Literal(i + 1, tok.to_string()))?;
                if x == 0 {
                    f.clauses.push(std::mem::take(&mut current));
                } else {
                    if x.unsigned_abs() > limit as u64 {
                        return Err(DimacsError::VarRange(x));
                    }
                    current.push(Lit::from_dimacs(x));
                }
            }
        }
        if !current.is_empty() {
            f.clauses.push(current);
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_encoding() {
        let v = Var(4);
        assert_eq!(v.pos().var(), v);
        assert!(!v.pos().is_negated());
        assert_eq!(!v.pos(), v.neg());
        assert_eq!(v.neg().to_dimacs(), -5);
        assert_eq!(Lit::from_dimacs(-5), v.neg());
        assert_eq!(Lit::from_dimacs(1), Var(0).pos());
    }

    #[test]
    fn dimacs_round_trip_with_annotations() {
        let mut f = CnfFormula::new();
        let a = f.new_var();
        let b = f.new_var();
        f.add_clause([a.pos(), b.neg()]);
        f.add_clause([a.neg()]);
        f.annotate(a, "good:x");
        let text = f.to_dimacs_string();
        assert!(text.starts_with("c 1 good:x\np cnf 2 2\n"));
        assert_eq!(CnfFormula::parse_dimacs(&text).unwrap(), f);
    }

    #[test]
    fn dimacs_errors() {
        assert_eq!(CnfFormula::parse_dimacs("1 2 0\n"), Err(DimacsError::Header(1)));
        assert_eq!(
            CnfFormula::parse_dimacs("p cnf 2 1\n1 3 0\n"),
            Err(DimacsError::VarRange(3))
        );
        assert!(matches!(
            CnfFormula::parse_dimacs("p cnf 2 1\n1 x 0\n"),
            Err(DimacsError::Literal(2, _))
        ));
    }

    #[test]
    fn clause_evaluation() {
        let mut f = CnfFormula::with_vars(2);
        f.add_clause([Var(0).pos(), Var(1).pos()]);
        assert!(f.satisfied_by(&[false, true]));
        assert!(!f.satisfied_by(&[false, false]));
    }
}
