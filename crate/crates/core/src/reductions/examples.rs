//! Small built-in games.

use crate::error::Result;
use crate::format::parse;
use crate::game::PetriGame;

pub const ACCESS_CONTROL: &str = include_str!("../../fixtures/access_control.game");

/// The system moves once, after the environment is ready.
pub const MINIMAL_WIN: &str = "\
bound 1
places system s s_done
places env e e_done
init s e
transition t pre s e post s_done e_done
";

/// The environment reaches a bad place on its own.
pub const MINIMAL_LOSS: &str = "\
bound 1
places system s
places env e bad
init s e
transition leak pre e post bad
bad places bad
";

#[derive(Clone, Copy, Debug)]
pub struct Example {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

impl Example {
    pub fn game(&self) -> Result<PetriGame> {
        parse(self.text)
    }
}

pub fn builtin_examples() -> Vec<Example> {
    vec![
        Example {
            name: "access_control",
            summary: "door controller with two employees that may authenticate",
            text: ACCESS_CONTROL,
        },
        Example {
            name: "minimal_win",
            summary: "one synchronizing move, system wins",
            text: MINIMAL_WIN,
        },
        Example {
            name: "minimal_loss",
            summary: "environment reaches a bad place alone",
            text: MINIMAL_LOSS,
        },
    ]
}

pub fn example(name: &str) -> Option<Example> {
    builtin_examples().into_iter().find(|e| e.name == name)
}
