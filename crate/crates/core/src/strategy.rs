//! Memoryless commitment strategies and play-level validation.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::PetriGame;
use crate::graph_game::{
    classify_bad, initial_vertex, successors, Commitment, GameVertex, Variant,
};
use crate::net::{Marking, TransitionId};

/// Maps each Player-0 marking to the set of outgoing transitions the system
/// allows there.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommitmentStrategy {
    choices: BTreeMap<Marking, Vec<TransitionId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedChoice {
    pub marking: String,
    pub commitment: Vec<String>,
}

impl CommitmentStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: Marking, mut c: Vec<TransitionId>) {
        c.sort();
        c.dedup();
        self.choices.insert(m, c);
    }

    pub fn get(&self, m: &Marking) -> Option<&[TransitionId]> {
        self.choices.get(m).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Marking, &[TransitionId])> {
        self.choices.iter().map(|(m, c)| (m, c.as_slice()))
    }

    /// Human-readable form, ordered by marking.
    pub fn to_named(&self, game: &PetriGame) -> Vec<NamedChoice> {
        let net = game.net();
        self.choices
            .iter()
            .map(|(m, c)| NamedChoice {
                marking: net.show(m),
                commitment: c
                    .iter()
                    .map(|&t| net.transition_name(t).to_string())
                    .collect(),
            })
            .collect()
    }

    /// Keeps only the markings visited by plays consistent with the strategy.
    pub fn restrict_to_reachable(&self, game: &PetriGame) -> Result<Self> {
        let mut out = CommitmentStrategy::new();
        walk(game, self, |v| {
            if let Some(c) = self.get(&v.marking) {
                if v.is_player0() {
                    out.insert(v.marking.clone(), c.to_vec());
                }
            }
        })?;
        Ok(out)
    }
}

pub fn show_vertex(game: &PetriGame, v: &GameVertex) -> String {
    let net = game.net();
    let c = match &v.commitment {
        Commitment::Top => "⊤".to_string(),
        Commitment::Set(c) => {
            let names: Vec<&str> = c.iter().map(|&t| net.transition_name(t)).collect();
            format!("{{{}}}", names.join(", "))
        }
    };
    match &v.responsibility {
        Some(r) => format!("({}, {}, {})", net.show(&v.marking), c, net.show(r)),
        None => format!("({}, {})", net.show(&v.marking), c),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategyReport {
    pub visited_vertices: usize,
    pub player0_vertices: usize,
}

/// Explores `Graph(G)` with Player 0 restricted to the strategy's choices,
/// visiting each vertex once, and hands every vertex to `visit`. Stops with
/// a counterexample play at the first bad vertex.
fn walk<F: FnMut(&GameVertex)>(
    game: &PetriGame,
    strategy: &CommitmentStrategy,
    mut visit: F,
) -> Result<StrategyReport> {
    let mut index: HashMap<GameVertex, usize> = HashMap::new();
    let mut vertices: Vec<GameVertex> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let init = initial_vertex(game, Variant::Plain);
    index.insert(init.clone(), 0);
    vertices.push(init);
    parent.push(None);
    let mut queue = VecDeque::from([0usize]);
    let mut player0 = 0;

    while let Some(i) = queue.pop_front() {
        let v = vertices[i].clone();
        visit(&v);
        if let Some(class) = classify_bad(game, &v) {
            let mut path = Vec::new();
            let mut cur = Some(i);
            while let Some(j) = cur {
                path.push(show_vertex(game, &vertices[j]));
                cur = parent[j];
            }
            path.reverse();
            return Err(Error::CounterexamplePlay { class, path });
        }
        let next: Vec<GameVertex> = if v.is_player0() {
            player0 += 1;
            let c = strategy
                .get(&v.marking)
                .ok_or_else(|| Error::MissingChoice(game.net().show(&v.marking)))?;
            vec![GameVertex {
                marking: v.marking.clone(),
                commitment: Commitment::Set(c.to_vec()),
                responsibility: None,
            }]
        } else {
            successors(game, &v, Variant::Plain)
                .into_iter()
                .map(|(_, w)| w)
                .collect()
        };
        for w in next {
            if !index.contains_key(&w) {
                let j = vertices.len();
                index.insert(w.clone(), j);
                vertices.push(w);
                parent.push(Some(i));
                queue.push_back(j);
            }
        }
    }
    Ok(StrategyReport {
        visited_vertices: vertices.len(),
        player0_vertices: player0,
    })
}

/// Checks that no play consistent with `strategy` reaches a bad vertex.
pub fn validate_strategy(
    game: &PetriGame,
    strategy: &CommitmentStrategy,
) -> Result<StrategyReport> {
    walk(game, strategy, |_| {})
}
