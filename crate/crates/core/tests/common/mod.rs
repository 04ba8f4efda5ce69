#![allow(dead_code)]

pub mod fixtures;
pub mod gen;
pub mod oracle;

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use noveltyforge::sim::{step, Choice, GroundTask, State};

use oracle::OState;

/// Reachable state graph of the simulator in oracle form, or `None` when a
/// step fails or more than `cap` states are found.
pub fn sim_graph(task: &GroundTask, cap: usize) -> Option<BTreeMap<OState, Vec<(Option<String>, OState)>>> {
    let mut graph = BTreeMap::new();
    let mut seen = std::collections::HashSet::from([task.init.clone()]);
    let mut queue = VecDeque::from([task.init.clone()]);
    while let Some(s) = queue.pop_front() {
        let mut succ = Vec::new();
        let choices = task
            .applicable_actions(&s)
            .into_iter()
            .map(Choice::Act)
            .chain([Choice::Pass]);
        for c in choices {
            let next: State = step(task, &s, c).ok()?.state;
            let label = match c {
                Choice::Pass => None,
                Choice::Act(i) => Some(task.actions[i].label()),
            };
            succ.push((label, OState::from_sim(task, &next)));
            if seen.insert(next.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(next);
            }
        }
        graph.insert(OState::from_sim(task, &s), succ);
    }
    Some(graph)
}

/// Relative path to file contents for every file under `root`, skipping
/// names in `exclude`.
pub fn tree(root: &Path, exclude: &[&str]) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, exclude: &[&str], out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            if exclude.contains(&name.as_str()) {
                continue;
            }
            if path.is_dir() {
                walk(&path, root, exclude, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, exclude, &mut out);
    out
}

/// The first `n` micro-tasks whose reachable graph has at most `cap`
/// states and whose goal needs at least two steps, as
/// `(seed, domain, problem)`.
pub fn micro_tasks(
    n: usize,
    cap: usize,
) -> Vec<(u64, noveltyforge::tsal::DomainModel, noveltyforge::tsal::ProblemModel)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < n {
        seed += 1;
        assert!(seed < 100_000, "micro-task generator too rarely qualifies");
        let Some((d, p)) = gen::micro_task(seed) else { continue };
        let o = oracle::Oracle::new(&d, &p);
        let Some(g) = oracle::explore(&o, cap) else { continue };
        match oracle::bfs_plan(&o, &g) {
            Some(plan) if plan.len() >= 2 => out.push((seed, d, p)),
            _ => {}
        }
    }
    out
}
