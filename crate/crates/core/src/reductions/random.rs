//! Random small games for differential testing.
//!
//! Every transition preserves the number of system tokens and the number
//! of environment tokens, so the single-system-token restriction holds by
//! construction; candidates that are not 1-bounded are rejected.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{BadSpec, PetriGame};
use crate::net::NetBuilder;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomParams {
    pub system_places: usize,
    pub env_places: usize,
    pub transitions: usize,
    pub env_tokens: usize,
    pub bad_places: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            system_places: 3,
            env_places: 4,
            transitions: 6,
            env_tokens: 2,
            bad_places: 1,
        }
    }
}

const ATTEMPTS: usize = 1000;

fn pick<R: Rng>(rng: &mut R, names: &[String], k: usize) -> Vec<(String, u32)> {
    sample(rng, names.len(), k)
        .into_iter()
        .map(|i| (names[i].clone(), 1))
        .collect()
}

fn candidate<R: Rng>(rng: &mut R, params: &RandomParams) -> Result<PetriGame> {
    let sys: Vec<String> = (0..params.system_places).map(|i| format!("s{i}")).collect();
    let env: Vec<String> = (0..params.env_places).map(|i| format!("e{i}")).collect();
    let mut b = NetBuilder::new();
    for p in sys.iter().chain(&env) {
        b.place(p.clone());
    }
    b.tokens(sys[0].clone(), 1);
    for (p, n) in pick(rng, &env, params.env_tokens) {
        b.tokens(p, n);
    }
    let max_env = params.env_places.min(2);
    for i in 0..params.transitions {
        let system = max_env == 0 || rng.gen_bool(0.5);
        let (mut pre, mut post) = if system {
            (pick(rng, &sys, 1), pick(rng, &sys, 1))
        } else {
            (Vec::new(), Vec::new())
        };
        let k = if system {
            rng.gen_range(0..=max_env)
        } else {
            rng.gen_range(1..=max_env)
        };
        pre.extend(pick(rng, &env, k));
        post.extend(pick(rng, &env, k));
        b.transition(format!("t{i}"), pre, post);
    }
    let net = b.build()?;
    let system: Vec<_> = sys
        .iter()
        .map(|p| net.place_id(p).expect("declared"))
        .collect();
    let bad = pick(rng, &env, params.bad_places.min(params.env_places))
        .into_iter()
        .map(|(p, _)| net.place_id(&p).expect("declared"));
    let bad = BadSpec::places(bad.collect::<Vec<_>>());
    let game = PetriGame::new(net, system, bad, 1)?;
    game.validate()?;
    Ok(game)
}

/// A valid 1-bounded game drawn from `rng`.
pub fn random_game<R: Rng>(rng: &mut R, params: &RandomParams) -> Result<PetriGame> {
    if params.system_places == 0 || params.env_tokens > params.env_places {
        return Err(Error::InvalidInstance(
            "need a system place and at most one environment token per place".into(),
        ));
    }
    for _ in 0..ATTEMPTS {
        if let Ok(game) = candidate(rng, params) {
            return Ok(game);
        }
    }
    Err(Error::InvalidInstance(format!(
        "no 1-bounded game found in {ATTEMPTS} attempts"
    )))
}
