//! 3SAT as a Petri game.
//!
//! Three environment tokens jointly pick either a clause, which puts one
//! token on each of its literal occurrences, or a pair of complementary
//! occurrences together with a spinning token. The system token is
//! committed before the choice. It must commit to at least one occurrence
//! of every clause (otherwise it deadlocks there) and never to both members
//! of a complementary pair (otherwise two committed transitions are enabled
//! together). Such a commitment exists iff the formula is satisfiable.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{BadSpec, PetriGame};
use crate::net::NetBuilder;

/// A CNF with exactly three literals per clause, in DIMACS numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeSat {
    pub num_vars: u32,
    pub clauses: Vec<[i32; 3]>,
}

impl ThreeSat {
    pub fn new(num_vars: u32, clauses: Vec<[i32; 3]>) -> Result<Self> {
        for c in &clauses {
            for &l in c {
                if l == 0 || l.unsigned_abs() > num_vars {
                    return Err(Error::InvalidInstance(format!(
                        "literal {l} out of range for {num_vars} variables"
                    )));
                }
            }
        }
        Ok(ThreeSat { num_vars, clauses })
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0))
        })
    }

    /// Tries all assignments.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        let n = self.num_vars;
        assert!(n < 32, "too many variables to enumerate");
        (0u64..1 << n)
            .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.eval(a))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for [a, b, c] in &self.clauses {
            out.push_str(&format!("{a} {b} {c} 0\n"));
        }
        out
    }

    /// Literal occurrences `(clause, position)` with opposite signs on the
    /// same variable.
    pub fn complementary_pairs(&self) -> Vec<((usize, usize), (usize, usize))> {
        let occ: Vec<((usize, usize), i32)> = self
            .clauses
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().enumerate().map(move |(j, &l)| ((i, j), l)))
            .collect();
        let mut out = Vec::new();
        for (a, &(x, lx)) in occ.iter().enumerate() {
            for &(y, ly) in &occ[a + 1..] {
                if lx == -ly {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Reads DIMACS CNF; every clause must have exactly three literals.
pub fn parse_dimacs(text: &str) -> Result<ThreeSat> {
    let mut num_vars = None;
    let mut declared = 0usize;
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                ["cnf", v, c] => {
                    let bad =
                        |_| Error::InvalidInstance(format!("line {}: bad header", lineno + 1));
                    num_vars = Some(v.parse::<u32>().map_err(bad)?);
                    declared = c.parse::<usize>().map_err(bad)?;
                }
                _ => {
                    return Err(Error::InvalidInstance(format!(
                        "line {}: expected `p cnf VARS CLAUSES`",
                        lineno + 1
                    )))
                }
            }
            continue;
        }
        for tok in line.split_whitespace() {
            let l: i32 = tok.parse().map_err(|_| {
                Error::InvalidInstance(format!("line {}: bad literal `{tok}`", lineno + 1))
            })?;
            if l == 0 {
                let [a, b, c] = current[..] else {
                    return Err(Error::InvalidInstance(format!(
                        "line {}: clause has {} literals, expected 3",
                        lineno + 1,
                        current.len()
                    )));
                };
                clauses.push([a, b, c]);
                current.clear();
            } else {
                current.push(l);
            }
        }
    }
    if !current.is_empty() {
        return Err(Error::InvalidInstance(
            "last clause is not terminated by 0".into(),
        ));
    }
    let num_vars =
        num_vars.ok_or_else(|| Error::InvalidInstance("missing `p cnf` header".into()))?;
    if clauses.len() != declared {
        return Err(Error::InvalidInstance(format!(
            "header declares {declared} clauses, found {}",
            clauses.len()
        )));
    }
    ThreeSat::new(num_vars, clauses)
}

/// Uniform random 3-CNF with distinct variables inside each clause.
pub fn random_3sat<R: Rng>(rng: &mut R, num_vars: u32, num_clauses: usize) -> ThreeSat {
    assert!(num_vars >= 3, "need at least three variables");
    let clauses = (0..num_clauses)
        .map(|_| {
            let mut vars = [0i32; 3];
            let mut k = 0;
            while k < 3 {
                let v = rng.gen_range(1..=num_vars) as i32;
                if !vars[..k].contains(&v) {
                    vars[k] = v;
                    k += 1;
                }
            }
            vars.map(|v| if rng.gen_bool(0.5) { v } else { -v })
        })
        .collect();
    ThreeSat { num_vars, clauses }
}

fn lit_place(i: usize, j: usize) -> String {
    format!("l{}_{}", i + 1, j + 1)
}

/// Builds the game; the system wins iff the formula is satisfiable.
pub fn gen_3sat(formula: &ThreeSat) -> Result<PetriGame> {
    let mut b = NetBuilder::new();
    for p in ["s", "e1", "e2", "e3", "sink_e", "sink_s"] {
        b.place(p);
    }
    b.tokens("s", 1)
        .tokens("e1", 1)
        .tokens("e2", 1)
        .tokens("e3", 1);
    let envs = [("e1", 1), ("e2", 1), ("e3", 1)];
    for (i, _) in formula.clauses.iter().enumerate() {
        let lits: Vec<String> = (0..3).map(|j| lit_place(i, j)).collect();
        for l in &lits {
            b.place(l.clone());
        }
        b.transition(
            format!("clause{}", i + 1),
            envs.map(|(p, n)| (p.to_string(), n)),
            lits.iter().map(|l| (l.clone(), 1)),
        );
        for (j, l) in lits.iter().enumerate() {
            b.transition(
                format!("pick{}_{}", i + 1, j + 1),
                [(l.clone(), 1), ("s".to_string(), 1)],
                [("sink_e".to_string(), 1), ("sink_s".to_string(), 1)],
            );
        }
    }
    for (k, ((i, j), (i2, j2))) in formula.complementary_pairs().into_iter().enumerate() {
        let spin = format!("loop{}", k + 1);
        b.place(spin.clone());
        b.transition(
            format!("contra{}", k + 1),
            envs.map(|(p, n)| (p.to_string(), n)),
            [
                (lit_place(i, j), 1),
                (lit_place(i2, j2), 1),
                (spin.clone(), 1),
            ],
        );
        b.transition(format!("spin{}", k + 1), [(spin.clone(), 1)], [(spin, 1)]);
    }
    let net = b.build()?;
    let system = ["s", "sink_s"].map(|p| net.place_id(p).expect("declared"));
    PetriGame::new(net, system, BadSpec::none(), 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_round_trip() {
        let f = ThreeSat::new(3, vec![[1, -2, 3], [-1, 2, -3]]).unwrap();
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn dimacs_rejects_two_literal_clause() {
        let err = parse_dimacs("p cnf 2 1\n1 2 0\n").unwrap_err();
        assert!(err.to_string().contains("2 literals"));
    }

    #[test]
    fn dimacs_checks_clause_count() {
        assert!(parse_dimacs("p cnf 3 2\n1 2 3 0\n").is_err());
        assert!(parse_dimacs("1 2 3 0\n").is_err());
    }

    #[test]
    fn complementary_pairs_found() {
        let f = ThreeSat::new(3, vec![[1, 2, 3], [-1, -2, 3]]).unwrap();
        assert_eq!(
            f.complementary_pairs(),
            vec![((0, 0), (1, 0)), ((0, 1), (1, 1))]
        );
    }

    #[test]
    fn game_is_valid_and_one_bounded() {
        let f = ThreeSat::new(3, vec![[1, 2, 3], [-1, -2, -3]]).unwrap();
        let g = gen_3sat(&f).unwrap();
        let report = g.validate().unwrap();
        assert_eq!(report.bound, 1);
        assert!(report.max_env_tokens >= 3);
    }
}
