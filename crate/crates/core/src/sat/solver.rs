//! Conflict-driven clause learning with two watched literals, VSIDS branching,
//! phase saving, Luby restarts and learnt-clause database reduction.
//!
//! The solver is incremental: clauses may be added between calls to
//! [`Solver::solve_with`], and each call may carry assumption literals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CnfFormula, Lit, Var};

const TRUE: i8 = 1;
const FALSE: i8 = -1;
const UNDEF: i8 = 0;
const NO_REASON: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// The conflict budget ran out before a verdict.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Conflicts allowed per `solve_with` call; `None` is unbounded.
    pub conflict_limit: Option<u64>,
    /// Seeds the initial branching order.
    pub seed: u64,
    pub restart_base: u64,
    pub var_decay: f64,
    pub clause_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            conflict_limit: Some(1_000_000),
            seed: 0,
            restart_base: 100,
            var_decay: 0.95,
            clause_decay: 0.999,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Max-heap of variables ordered by activity.
#[derive(Debug, Clone, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

impl VarHeap {
    const ABSENT: usize = usize::MAX;

    fn grow(&mut self) {
        self.pos.push(Self::ABSENT);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != Self::ABSENT
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len();
        self.heap.push(v as u32);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()? as usize;
        let last = self.heap.pop().unwrap();
        self.pos[top] = Self::ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn increased(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v], act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = i;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    rng: ChaCha8Rng,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    num_learnts: usize,
    max_learnts: f64,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new(SolverConfig::default())
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            config,
            rng,
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            num_learnts: 0,
            max_learnts: 0.0,
            stats: SolverStats::default(),
        }
    }

    pub fn from_formula(f: &CnfFormula, config: SolverConfig) -> Self {
        let mut s = Self::new(config);
        s.reserve_vars(f.num_vars());
        for c in f.clauses() {
            s.add_clause(c.iter().copied());
        }
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.assign.len() as u32
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assign.len();
        self.assign.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(self.rng.gen::<f64>() * 1e-5);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow();
        self.order.insert(v, &self.activity);
        Var(v as u32)
    }

    pub fn reserve_vars(&mut self, n: u32) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[l.var().index()];
        if l.is_negated() {
            -a
        } else {
            a
        }
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assign[v], UNDEF);
        self.assign[v] = if l.is_negated() { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Add a clause. Returns `false` once the formula is known unsatisfiable.
    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut c: Vec<Lit> = lits.into_iter().collect();
        if let Some(max) = c.iter().map(|l| l.var().0 + 1).max() {
            self.reserve_vars(max);
        }
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return true;
        }
        c.retain(|&l| self.value(l) != FALSE);
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let (mut i, mut j) = (0, 0);
            'watchers: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].lits[0] == false_lit {
                    self.clauses[cref].lits.swap(0, 1);
                }
                let first = self.clauses[cref].lits[0];
                let kept = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = kept;
                    j += 1;
                    continue;
                }
                for k in 2..self.clauses[cref].lits.len() {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[lk.code()].push(kept);
                        continue 'watchers;
                    }
                }
                ws[j] = kept;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Var(0).pos()];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(confl);
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl as usize].lits.len() {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            confl = self.reason[pl.var().index()];
            self.seen[pl.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.expect("conflict has at least one literal");

        // Drop literals implied by other literals of the clause.
        let mut out = vec![learnt[0]];
        for &l in &learnt[1..] {
            let r = self.reason[l.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let v = q.var().index();
                    self.seen[v] || self.level[v] == 0
                });
            if !redundant {
                out.push(l);
            }
        }
        for l in &learnt {
            self.seen[l.var().index()] = false;
        }

        let bt = if out.len() == 1 {
            0
        } else {
            let (mi, _) = out[1..]
                .iter()
                .enumerate()
                .max_by_key(|(_, l)| self.level[l.var().index()])
                .unwrap();
            out.swap(1, mi + 1);
            self.level[out[1].var().index()]
        };
        (out, bt)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.phase[v] = !l.is_negated();
            self.assign[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assign[v] == UNDEF {
                return Some(Var(v as u32).lit(self.phase[v]));
            }
        }
        None
    }

    fn locked(&self, cref: usize) -> bool {
        let l0 = self.clauses[cref].lits[0];
        self.reason[l0.var().index()] == cref as u32 && self.value(l0) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lits.len() > 2 && !self.locked(i)
            })
            .collect();
        cands.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .total_cmp(&self.clauses[b].activity)
                .then(a.cmp(&b))
        });
        let remove = cands.len() / 2;
        for &i in &cands[..remove] {
            let c = &mut self.clauses[i];
            c.deleted = true;
            c.lits = Vec::new();
        }
        self.num_learnts -= remove;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
        self.max_learnts *= 1.1;
    }

    /// `None` means the restart budget was used up.
    fn search(&mut self, budget: u64, assumptions: &[Lit], spent: &mut u64) -> Option<SolveResult> {
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local += 1;
                *spent += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.num_learnts += 1;
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= self.config.var_decay;
                self.cla_inc /= self.config.clause_decay;
                if self.config.conflict_limit.is_some_and(|lim| *spent >= lim) {
                    return Some(SolveResult::Unknown);
                }
            } else {
                if local >= budget {
                    self.cancel_until(0);
                    return None;
                }
                if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => return Some(SolveResult::Unsat),
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let lit = match next {
                    Some(l) => l,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => {
                                self.model = self.assign.iter().map(|&a| a == TRUE).collect();
                                return Some(SolveResult::Sat);
                            }
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(lit, NO_REASON);
            }
        }
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_with(&[])
    }

    /// Solve under `assumptions`. `Unsat` under assumptions does not make the
    /// solver permanently unsatisfiable.
    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return SolveResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().0 + 1).max() {
            self.reserve_vars(max);
        }
        if self.max_learnts == 0.0 {
            self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        }
        let mut spent = 0u64;
        let mut restarts = 0u64;
        let result = loop {
            let budget = (luby(2.0, restarts) * self.config.restart_base as f64) as u64;
            match self.search(budget, assumptions, &mut spent) {
                Some(r) => break r,
                None => {
                    restarts += 1;
                    self.stats.restarts += 1;
                }
            }
        };
        self.cancel_until(0);
        result
    }

    /// Total assignment from the last `Sat` answer; empty otherwise.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    pub fn model_value(&self, l: Lit) -> Option<bool> {
        self.model.get(l.var().index()).map(|&v| v ^ l.is_negated())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(x: i64) -> Lit {
        Lit::from_dimacs(x)
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..15).map(|i| luby(2.0, i) as u64).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut s = Solver::default();
        s.add_clause([lit(1)]);
        s.add_clause([lit(-1)]);
        assert_eq!(s.solve(), SolveResult::Unsat);
    }

    #[test]
    fn assumption_forces_other_literal() {
        let mut s = Solver::default();
        s.add_clause([lit(1), lit(2)]);
        assert_eq!(s.solve_with(&[lit(-1)]), SolveResult::Sat);
        assert_eq!(s.model_value(lit(2)), Some(true));
        assert_eq!(s.model_value(lit(1)), Some(false));
        // Assumptions do not stick.
        assert_eq!(s.solve_with(&[lit(-2)]), SolveResult::Sat);
        assert_eq!(s.model_value(lit(1)), Some(true));
        assert_eq!(s.solve_with(&[lit(-1), lit(-2)]), SolveResult::Unsat);
        assert_eq!(s.solve(), SolveResult::Sat);
    }

    #[test]
    fn empty_formula_is_sat() {
        let mut s = Solver::default();
        assert_eq!(s.solve(), SolveResult::Sat);
        assert!(s.model().is_empty());
    }

    #[test]
    fn incremental_blocking() {
        // Count all models of (a | b) over two vars by blocking each one.
        let mut s = Solver::default();
        s.add_clause([lit(1), lit(2)]);
        let mut n = 0;
        while s.solve() == SolveResult::Sat {
            n += 1;
            let block: Vec<Lit> = (1..=2)
                .map(|v| {
                    let l = lit(v);
                    if s.model_value(l).unwrap() {
                        !l
                    } else {
                        l
                    }
                })
                .collect();
            s.add_clause(block);
        }
        assert_eq!(n, 3);
    }

    /// Pigeonhole PHP(n+1, n): hard enough to exercise learning and restarts.
    fn pigeonhole(n: i64) -> CnfFormula {
        let var = |p: i64, h: i64| p * n + h + 1;
        let mut f = CnfFormula::new();
        for p in 0..=n {
            f.add_clause((0..n).map(|h| lit(var(p, h))));
        }
        for h in 0..n {
            for p in 0..=n {
                for q in p + 1..=n {
                    f.add_clause([lit(-var(p, h)), lit(-var(q, h))]);
                }
            }
        }
        f
    }

    #[test]
    fn pigeonhole_unsat() {
        let f = pigeonhole(6);
        let mut s = Solver::from_formula(&f, SolverConfig::default());
        assert_eq!(s.solve(), SolveResult::Unsat);
        assert!(s.stats().conflicts > 0);
    }

    #[test]
    fn conflict_cap_yields_unknown() {
        let f = pigeonhole(8);
        let cfg = SolverConfig {
            conflict_limit: Some(10),
            ..SolverConfig::default()
        };
        let mut s = Solver::from_formula(&f, cfg);
        assert_eq!(s.solve(), SolveResult::Unknown);
        // Not permanently broken by hitting the cap.
        assert_eq!(s.solve_with(&[]), SolveResult::Unknown);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = pigeonhole(5);
        let run = |seed| {
            let mut s = Solver::from_formula(
                &f,
                SolverConfig {
                    seed,
                    ..SolverConfig::default()
                },
            );
            s.solve();
            s.stats()
        };
        assert_eq!(run(7), run(7));
    }
}
