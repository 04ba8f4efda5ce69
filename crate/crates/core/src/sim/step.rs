//! One simulation step: action, event fixpoint, process tick.

use super::ground::{GroundTask, GroundTransition};
use super::state::State;
use super::SimError;
use crate::tsal::UpdateOp;

/// Maximum number of event scans per step.
pub const EVENT_SCAN_LIMIT: usize = 100;

/// What the agent does this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Pass,
    Act(usize),
}

/// One numeric write, recorded for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub fluent: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// Event instance indices in firing order.
    pub fired: Vec<usize>,
    /// Process instance indices that ticked.
    pub ticked: Vec<usize>,
    pub audit: Vec<UpdateRecord>,
}

/// Applies one ground effect. Deletes precede adds, and every update's right
/// side reads the values from before this effect.
fn apply(
    t: &GroundTransition,
    state: &mut State,
    audit: &mut Vec<UpdateRecord>,
) -> Result<(), SimError> {
    let rhs: Vec<f64> = t.updates.iter().map(|u| u.value.eval(&state.values)).collect();
    for &i in &t.deletes {
        state.atoms.set(i, false);
    }
    for &i in &t.adds {
        state.atoms.insert(i);
    }
    for (u, v) in t.updates.iter().zip(rhs) {
        let before = state.values[u.fluent];
        let after = match u.op {
            UpdateOp::Assign => v,
            UpdateOp::Increase => before + v,
            UpdateOp::Decrease => before - v,
        };
        if !after.is_finite() {
            return Err(SimError::NonFinite(t.label()));
        }
        state.set_value(u.fluent, after);
        audit.push(UpdateRecord {
            fluent: u.fluent,
            before,
            after: state.values[u.fluent],
        });
    }
    Ok(())
}

fn settle_events(
    task: &GroundTask,
    state: &mut State,
    done: &mut [bool],
    fired: &mut Vec<usize>,
    audit: &mut Vec<UpdateRecord>,
    scans: &mut usize,
) -> Result<(), SimError> {
    loop {
        if *scans == EVENT_SCAN_LIMIT {
            let pending = task
                .events
                .iter()
                .enumerate()
                .any(|(i, e)| !done[i] && e.applicable(state));
            return if pending {
                Err(SimError::EventCascadeLimit)
            } else {
                Ok(())
            };
        }
        *scans += 1;
        let mut any = false;
        for (i, e) in task.events.iter().enumerate() {
            if !done[i] && e.applicable(state) {
                apply(e, state, audit)?;
                done[i] = true;
                fired.push(i);
                any = true;
            }
        }
        if !any {
            return Ok(());
        }
    }
}

/// Advances `state` by one step.
///
/// Events fire in instance order, each at most once per step, until a scan
/// fires nothing. Processes enabled after that tick once each; the events
/// are then settled again so the returned state is quiescent.
pub fn step(task: &GroundTask, state: &State, choice: Choice) -> Result<StepOutcome, SimError> {
    let mut next = state.clone();
    let mut audit = Vec::new();
    if let Choice::Act(i) = choice {
        let a = task
            .actions
            .get(i)
            .ok_or_else(|| SimError::InapplicableAction(format!("action #{i}")))?;
        if !a.applicable(state) {
            return Err(SimError::InapplicableAction(a.label()));
        }
        apply(a, &mut next, &mut audit)?;
    }

    let mut done = vec![false; task.events.len()];
    let mut fired = Vec::new();
    let mut scans = 0;
    settle_events(task, &mut next, &mut done, &mut fired, &mut audit, &mut scans)?;

    let ticked: Vec<usize> = (0..task.processes.len())
        .filter(|&i| task.processes[i].applicable(&next))
        .collect();
    for &i in &ticked {
        apply(&task.processes[i], &mut next, &mut audit)?;
    }
    if !ticked.is_empty() {
        settle_events(task, &mut next, &mut done, &mut fired, &mut audit, &mut scans)?;
    }

    Ok(StepOutcome {
        state: next,
        fired,
        ticked,
        audit,
    })
}
