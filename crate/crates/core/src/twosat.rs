//! 2SAT through strongly connected components of the implication graph.

use crate::sat::Lit;

/// A CNF whose clauses never exceed two literals.
#[derive(Clone, Debug, Default)]
pub struct TwoCnf {
    pub num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl TwoCnf {
    pub fn new(num_vars: usize) -> Self {
        TwoCnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Panics on clauses with three or more literals.
    pub fn add_clause(&mut self, mut clause: Vec<Lit>) {
        clause.sort();
        clause.dedup();
        assert!(
            clause.len() <= 2,
            "2SAT clause builder received {} literals",
            clause.len()
        );
        self.clauses.push(clause);
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn solve(&self) -> Option<Vec<bool>> {
        solve_2sat(self.num_vars, &self.clauses)
    }
}

fn node(l: Lit) -> usize {
    2 * l.var as usize + usize::from(!l.positive)
}

/// Aspvall–Plass–Tarjan: unsatisfiable iff some `x` and `¬x` share a
/// component; otherwise `x` is true iff its component comes later in
/// topological order than that of `¬x`.
pub fn solve_2sat(num_vars: usize, clauses: &[Vec<Lit>]) -> Option<Vec<bool>> {
    let n = 2 * num_vars;
    let mut graph: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edge = |a: usize, b: usize| {
        graph[a].push(b);
        reverse[b].push(a);
    };
    for clause in clauses {
        match clause.as_slice() {
            [] => return None,
            [a] => edge(node(*a) ^ 1, node(*a)),
            [a, b] => {
                edge(node(*a) ^ 1, node(*b));
                edge(node(*b) ^ 1, node(*a));
            }
            _ => panic!("clause with more than two literals"),
        }
    }

    // Kosaraju: finishing order on the graph, then components on the
    // reverse graph in decreasing finishing time. Components come out in
    // topological order of the implication graph.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some((v, i)) = stack.last_mut() {
            if let Some(&w) = graph[*v].get(*i) {
                *i += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &reverse[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }

    (0..num_vars)
        .map(|v| {
            let (t, f) = (comp[2 * v], comp[2 * v + 1]);
            (t != f).then_some(t > f)
        })
        .collect()
}
