//! A small DPLL procedure for commitment constraints.
//!
//! Branching visits variables in index order and tries `false` before
//! `true`, with unit propagation after every decision. The first model found
//! is therefore the lexicographically smallest one (variable 0 most
//! significant, `false < true`), which keeps commitments small and
//! extraction deterministic.

use std::fmt;

use crate::net::TransitionId;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: u32,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: u32) -> Self {
        Lit {
            var,
            positive: true,
        }
    }

    pub fn neg(var: u32) -> Self {
        Lit {
            var,
            positive: false,
        }
    }

    fn holds(self, value: bool) -> bool {
        value == self.positive
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "¬x{}", self.var)
        }
    }
}

/// Clauses over the commitment domain `vars`; literal variable `i` stands for
/// "`vars[i]` is in the commitment".
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub vars: Vec<TransitionId>,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(vars: Vec<TransitionId>) -> Self {
        Cnf {
            vars,
            clauses: Vec::new(),
        }
    }

    pub fn var_of(&self, t: TransitionId) -> Option<u32> {
        self.vars.iter().position(|&v| v == t).map(|i| i as u32)
    }

    pub fn add_clause(&mut self, mut clause: Vec<Lit>) {
        clause.sort();
        clause.dedup();
        self.clauses.push(clause);
    }

    /// Whether `assignment` satisfies every clause.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        eval(&self.clauses, assignment)
    }

    /// The transitions set to true by `assignment`.
    pub fn commitment(&self, assignment: &[bool]) -> Vec<TransitionId> {
        self.vars
            .iter()
            .zip(assignment)
            .filter(|(_, &b)| b)
            .map(|(&t, _)| t)
            .collect()
    }
}

pub fn eval(clauses: &[Vec<Lit>], assignment: &[bool]) -> bool {
    clauses
        .iter()
        .all(|c| c.iter().any(|l| l.holds(assignment[l.var as usize])))
}

/// Complete assignment over the CNF's variables, or `None` when
/// unsatisfiable.
pub fn sat_solve(cnf: &Cnf) -> Option<Vec<bool>> {
    solve(cnf.vars.len(), &cnf.clauses)
}

pub fn solve(num_vars: usize, clauses: &[Vec<Lit>]) -> Option<Vec<bool>> {
    let mut assign: Vec<Option<bool>> = vec![None; num_vars];
    if dpll(clauses, &mut assign) {
        Some(assign.into_iter().map(|v| v.unwrap_or(false)).collect())
    } else {
        None
    }
}

enum Status {
    Conflict,
    Satisfied,
    Open,
}

/// Unit propagation to fixpoint. Newly assigned variables are pushed to
/// `trail`.
fn propagate(clauses: &[Vec<Lit>], assign: &mut [Option<bool>], trail: &mut Vec<u32>) -> Status {
    loop {
        let mut changed = false;
        let mut all_satisfied = true;
        for clause in clauses {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for &l in clause {
                match assign[l.var as usize] {
                    Some(v) if l.holds(v) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if satisfied {
                continue;
            }
            all_satisfied = false;
            match (open, unassigned) {
                (0, _) => return Status::Conflict,
                (1, Some(l)) => {
                    assign[l.var as usize] = Some(l.positive);
                    trail.push(l.var);
                    changed = true;
                }
                _ => {}
            }
        }
        if all_satisfied {
            return Status::Satisfied;
        }
        if !changed {
            return Status::Open;
        }
    }
}

fn dpll(clauses: &[Vec<Lit>], assign: &mut Vec<Option<bool>>) -> bool {
    let mut trail = Vec::new();
    match propagate(clauses, assign, &mut trail) {
        Status::Satisfied => return true,
        Status::Conflict => {
            for v in trail {
                assign[v as usize] = None;
            }
            return false;
        }
        Status::Open => {}
    }
    let var = assign
        .iter()
        .position(Option::is_none)
        .expect("open clauses have an unassigned literal");
    for value in [false, true] {
        assign[var] = Some(value);
        if dpll(clauses, assign) {
            return true;
        }
    }
    assign[var] = None;
    for v in trail {
        assign[v as usize] = None;
    }
    false
}
