use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::sim::{step, Choice, GroundTask, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    /// Maximum number of node expansions.
    pub node_budget: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            node_budget: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanResult {
    /// `Some` when a goal state was reached.
    pub plan: Option<Vec<Choice>>,
    pub expanded: usize,
    /// True if search failed because every reachable state was expanded.
    pub exhausted: bool,
}

/// Number of unsatisfied top-level goal conjuncts.
pub fn goal_count(task: &GroundTask, state: &State) -> usize {
    task.goal
        .conjuncts()
        .iter()
        .filter(|c| !c.holds(state))
        .count()
}

/// Greedy best-first search on goal count. Successors are generated in
/// ground-action order with pass last; ties break by generation order.
pub fn plan(task: &GroundTask, start: &State, cfg: &PlannerConfig) -> PlanResult {
    if task.is_goal(start) {
        return PlanResult {
            plan: Some(Vec::new()),
            expanded: 0,
            exhausted: false,
        };
    }
    // (state, parent node, choice leading here)
    let mut nodes: Vec<(State, usize, Choice)> = vec![(start.clone(), usize::MAX, Choice::Pass)];
    let mut seen: HashMap<State, usize> = HashMap::from([(start.clone(), 0)]);
    let mut open = BinaryHeap::from([Reverse((goal_count(task, start), 0usize))]);
    let mut expanded = 0;

    while let Some(Reverse((_, id))) = open.pop() {
        if expanded == cfg.node_budget {
            return PlanResult {
                plan: None,
                expanded,
                exhausted: false,
            };
        }
        expanded += 1;
        let state = nodes[id].0.clone();
        let choices = task
            .applicable_actions(&state)
            .into_iter()
            .map(Choice::Act)
            .chain(std::iter::once(Choice::Pass));
        for choice in choices {
            let Ok(out) = step(task, &state, choice) else {
                continue;
            };
            if seen.contains_key(&out.state) {
                continue;
            }
            let child = nodes.len();
            if task.is_goal(&out.state) {
                nodes.push((out.state, id, choice));
                return PlanResult {
                    plan: Some(extract(&nodes, child)),
                    expanded,
                    exhausted: false,
                };
            }
            seen.insert(out.state.clone(), child);
            open.push(Reverse((goal_count(task, &out.state), child)));
            nodes.push((out.state, id, choice));
        }
    }
    PlanResult {
        plan: None,
        expanded,
        exhausted: true,
    }
}

fn extract(nodes: &[(State, usize, Choice)], mut id: usize) -> Vec<Choice> {
    let mut out = Vec::new();
    while nodes[id].1 != usize::MAX {
        out.push(nodes[id].2);
        id = nodes[id].1;
    }
    out.reverse();
    out
}
