use serde::{Deserialize, Serialize};

use super::ground::GroundTask;
use super::state::State;
use super::step::{step, Choice};
use super::SimError;

/// Chooses what to do from a fully observed state.
pub trait Policy {
    fn choose(&mut self, task: &GroundTask, state: &State) -> Choice;

    /// Called before each episode. Policies keep caches across episodes but
    /// must restart any per-episode progress.
    fn reset(&mut self, _seed: u64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Terminal {
    Goal,
    StepLimit,
    DeadEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub choice: Choice,
    pub fired: Vec<usize>,
    pub ticked: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// Observed states, starting with the initial one. One longer than
    /// `steps` unless the episode ended on an error.
    pub observations: Vec<State>,
    pub steps: Vec<TraceStep>,
    pub terminal: Terminal,
    pub performance: f64,
    pub error: Option<SimError>,
}

impl EpisodeTrace {
    pub fn choices(&self) -> impl Iterator<Item = Choice> + '_ {
        self.steps.iter().map(|s| s.choice)
    }
}

/// Time-remaining score: `(max_steps - used) / max_steps` on success, else 0.
pub fn performance(terminal: Terminal, used: usize, max_steps: usize) -> f64 {
    match terminal {
        Terminal::Goal => (max_steps - used) as f64 / max_steps as f64,
        _ => 0.0,
    }
}

pub fn run_episode(task: &GroundTask, policy: &mut dyn Policy, max_steps: usize) -> EpisodeTrace {
    assert!(max_steps >= 1, "max_steps must be at least 1");
    let mut state = task.init.clone();
    let mut observations = vec![state.clone()];
    let mut steps = Vec::new();
    let mut error = None;
    let terminal = loop {
        if task.is_goal(&state) {
            break Terminal::Goal;
        }
        if steps.len() == max_steps {
            break Terminal::StepLimit;
        }
        let choice = policy.choose(task, &state);
        match step(task, &state, choice) {
            Ok(out) => {
                steps.push(TraceStep {
                    choice,
                    fired: out.fired,
                    ticked: out.ticked,
                });
                state = out.state;
                observations.push(state.clone());
            }
            Err(e) => {
                error = Some(e);
                break Terminal::DeadEnd;
            }
        }
    };
    EpisodeTrace {
        performance: performance(terminal, steps.len(), max_steps),
        observations,
        steps,
        terminal,
        error,
    }
}
