use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::planner::{plan, PlannerConfig};
use crate::seed;
use crate::sim::{Choice, GroundTask, Policy, State};

/// Follows a plan and replans when it runs out or its next action is
/// inapplicable. Passes when planning fails.
///
/// Plans are cached per start state, so repeated episodes on the same task
/// cost one search per distinct replanning state.
pub struct ReplanningPolicy {
    cfg: PlannerConfig,
    current: VecDeque<Choice>,
    cache: HashMap<State, Vec<Choice>>,
    failed: HashSet<State>,
    plan_calls: usize,
}

impl ReplanningPolicy {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            current: VecDeque::new(),
            cache: HashMap::new(),
            failed: HashSet::new(),
            plan_calls: 0,
        }
    }

    /// Number of replanning points seen since construction, cached or not.
    pub fn plan_calls(&self) -> usize {
        self.plan_calls
    }

    fn replan(&mut self, task: &GroundTask, state: &State) {
        self.plan_calls += 1;
        self.current.clear();
        if self.failed.contains(state) {
            return;
        }
        if let Some(p) = self.cache.get(state) {
            self.current.extend(p.iter().copied());
            return;
        }
        match plan(task, state, &self.cfg).plan {
            Some(p) => {
                self.current.extend(p.iter().copied());
                self.cache.insert(state.clone(), p);
            }
            None => {
                self.failed.insert(state.clone());
            }
        }
    }
}

fn executable(task: &GroundTask, state: &State, c: Choice) -> bool {
    match c {
        Choice::Pass => true,
        Choice::Act(i) => task.actions[i].applicable(state),
    }
}

impl Policy for ReplanningPolicy {
    fn choose(&mut self, task: &GroundTask, state: &State) -> Choice {
        let ok = self
            .current
            .front()
            .is_some_and(|&c| executable(task, state, c));
        if !ok {
            self.replan(task, state);
        }
        self.current.pop_front().unwrap_or(Choice::Pass)
    }

    fn reset(&mut self, _seed: u64) {
        self.current.clear();
    }
}

/// Uniform choice among applicable actions and pass.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: seed::rng(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn choose(&mut self, task: &GroundTask, state: &State) -> Choice {
        let applicable = task.applicable_actions(state);
        let k = self.rng.random_range(0..=applicable.len());
        applicable.get(k).map_or(Choice::Pass, |&i| Choice::Act(i))
    }

    fn reset(&mut self, seed: u64) {
        self.rng = seed::rng(seed);
    }
}

/// Replays recorded action labels, passing when a recorded action is
/// missing or inapplicable, and after the recording runs out.
///
/// Labels rather than indices are stored so a recording made on one task
/// can be replayed on a transformed one.
pub struct ReplayPolicy {
    recorded: Vec<Option<String>>,
    cursor: usize,
}

impl ReplayPolicy {
    pub fn new(recorded: Vec<Option<String>>) -> Self {
        Self {
            recorded,
            cursor: 0,
        }
    }

    /// Records the choices of a trace on `task` as labels.
    pub fn from_choices(task: &GroundTask, choices: impl IntoIterator<Item = Choice>) -> Self {
        Self::new(
            choices
                .into_iter()
                .map(|c| match c {
                    Choice::Pass => None,
                    Choice::Act(i) => Some(task.actions[i].label()),
                })
                .collect(),
        )
    }
}

impl Policy for ReplayPolicy {
    fn choose(&mut self, task: &GroundTask, state: &State) -> Choice {
        let entry = self.recorded.get(self.cursor).cloned().flatten();
        self.cursor += 1;
        entry
            .and_then(|label| task.action_by_label(&label))
            .filter(|&i| task.actions[i].applicable(state))
            .map_or(Choice::Pass, Choice::Act)
    }

    fn reset(&mut self, _seed: u64) {
        self.cursor = 0;
    }
}
