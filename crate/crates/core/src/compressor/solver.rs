//! Exact branch-and-bound over the abstraction-selection variables.
//!
//! Once the selected set `S` is fixed, every definition independently takes
//! the cheaper of keeping itself or calling some abstraction of `S`, so the
//! search branches on `s[a]` only. Abstractions are ordered by how much they
//! can save. The bound at a node charges each uncovered definition the
//! cheaper of keeping itself or being rewritten plus an even share of the
//! cost of an undecided abstraction it could use.
//!
//! Equal-objective optima are ordered by number of selected abstractions,
//! then by their sorted canonical keys.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use log::debug;

use super::cop::{Assignment, CopModel};

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes: u64,
    /// Objective of each incumbent, in the order found; strictly decreasing.
    pub incumbents: Vec<u64>,
    pub elapsed: Duration,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub assignment: Assignment,
    pub stats: SolveStats,
}

const TIME_CHECK_INTERVAL: u64 = 256;

/// Minimizes the objective of `model`. Without a timeout the result is a
/// proved optimum; on timeout it is the best assignment found so far.
pub fn solve(model: &CopModel, timeout: Option<Duration>) -> Solution {
    let start = Instant::now();
    let mut search = Search::new(model, timeout.map(|t| start + t));
    search.offer(vec![None; model.definitions.len()]);
    search.greedy();
    let mut in_set = Vec::new();
    search.branch(0, &mut in_set);
    let timed_out = search.timed_out;
    let best = search.best.expect("the all-none assignment is always offered");
    let mut assignment = best.assignment;
    assignment.proved_optimal = !timed_out;
    let stats = SolveStats {
        nodes: search.nodes,
        incumbents: search.incumbents,
        elapsed: start.elapsed(),
        timed_out,
    };
    debug!(
        "solve: objective {} after {} nodes in {:?} (optimal: {})",
        assignment.objective_value, stats.nodes, stats.elapsed, assignment.proved_optimal
    );
    Solution { assignment, stats }
}

struct Incumbent {
    assignment: Assignment,
    keys: Vec<String>,
}

struct Search<'m> {
    model: &'m CopModel,
    deadline: Option<Instant>,
    keep: Vec<u64>,
    refactor: u64,
    cost: Vec<u64>,
    /// Abstractions worth branching on, best first.
    order: Vec<usize>,
    /// Rank of each abstraction in `order`, `usize::MAX` if excluded.
    rank: Vec<usize>,
    /// Number of selected abstractions usable by each definition.
    covered: Vec<u32>,
    in_cost: u64,
    best: Option<Incumbent>,
    incumbents: Vec<u64>,
    nodes: u64,
    timed_out: bool,
}

impl<'m> Search<'m> {
    fn new(model: &'m CopModel, deadline: Option<Instant>) -> Self {
        let n_abs = model.abstractions.len();
        let keep: Vec<u64> = (0..model.definitions.len()).map(|d| model.keep_cost(d)).collect();
        let refactor = model.refactor_cost();
        let cost: Vec<u64> = (0..n_abs).map(|a| model.abstraction_cost(a)).collect();
        let gain = |d: usize| keep[d].saturating_sub(refactor);
        // Selecting `a` lowers the objective by at most its potential minus its
        // cost; abstractions that can never pay off are left out.
        let mut scored: Vec<(i128, usize)> = (0..n_abs)
            .filter_map(|a| {
                let potential: u64 = model.abstractions[a].definitions.iter().map(|&d| gain(d)).sum();
                (potential > cost[a]).then(|| (potential as i128 - cost[a] as i128, a))
            })
            .collect();
        scored.sort_by(|x, y| {
            y.0.cmp(&x.0)
                .then_with(|| model.abstractions[x.1].canonical_key.cmp(&model.abstractions[y.1].canonical_key))
                .then_with(|| x.1.cmp(&y.1))
        });
        let order: Vec<usize> = scored.into_iter().map(|(_, a)| a).collect();
        let mut rank = vec![usize::MAX; n_abs];
        for (i, &a) in order.iter().enumerate() {
            rank[a] = i;
        }
        Self {
            model,
            deadline,
            covered: vec![0; model.definitions.len()],
            keep,
            refactor,
            cost,
            order,
            rank,
            in_cost: 0,
            best: None,
            incumbents: Vec::new(),
            nodes: 0,
            timed_out: false,
        }
    }

    fn gain(&self, d: usize) -> u64 {
        self.keep[d].saturating_sub(self.refactor)
    }

    fn key_order(&self, a: usize, b: usize) -> Ordering {
        let abs = &self.model.abstractions;
        abs[a].canonical_key.cmp(&abs[b].canonical_key).then(a.cmp(&b))
    }

    /// Per-definition choices when `in_set` is selected: rewrite whenever it
    /// pays, using the usable abstraction with the smallest key.
    fn choices_for(&self, in_set: &[usize]) -> Vec<Option<usize>> {
        (0..self.model.definitions.len())
            .map(|d| {
                if self.gain(d) == 0 {
                    return None;
                }
                self.model.candidates[d]
                    .iter()
                    .copied()
                    .filter(|a| in_set.contains(a))
                    .min_by(|&a, &b| self.key_order(a, b))
            })
            .collect()
    }

    fn offer(&mut self, choices: Vec<Option<usize>>) {
        let assignment = self
            .model
            .assignment(choices, false)
            .expect("solver only proposes candidate choices");
        let mut keys: Vec<String> = assignment
            .selected
            .iter()
            .map(|&a| self.model.abstractions[a].canonical_key.clone())
            .collect();
        keys.sort();
        let better = match &self.best {
            None => true,
            Some(b) => (assignment.objective_value, assignment.selected.len(), &keys)
                .cmp(&(b.assignment.objective_value, b.assignment.selected.len(), &b.keys))
                == Ordering::Less,
        };
        if better {
            if self.incumbents.last().is_none_or(|&o| assignment.objective_value < o) {
                self.incumbents.push(assignment.objective_value);
            }
            self.best = Some(Incumbent { assignment, keys });
        }
    }

    /// Adds the abstraction with the largest marginal saving until none saves.
    fn greedy(&mut self) {
        let mut chosen: Vec<usize> = Vec::new();
        let mut covered = vec![false; self.model.definitions.len()];
        loop {
            let pick = self
                .order
                .iter()
                .copied()
                .filter(|a| !chosen.contains(a))
                .map(|a| {
                    let saving: u64 = self.model.abstractions[a]
                        .definitions
                        .iter()
                        .filter(|&&d| !covered[d])
                        .map(|&d| self.gain(d))
                        .sum();
                    (saving as i128 - self.cost[a] as i128, a)
                })
                .filter(|&(s, _)| s > 0)
                .max_by(|x, y| x.0.cmp(&y.0).then_with(|| self.key_order(y.1, x.1)));
            let Some((_, a)) = pick else { break };
            chosen.push(a);
            for &d in &self.model.abstractions[a].definitions {
                covered[d] = true;
            }
        }
        let choices = self.choices_for(&chosen);
        self.offer(choices);
    }

    /// Definitions that `a` would newly cover with a positive gain.
    fn helps(&self, a: usize) -> bool {
        self.model.abstractions[a]
            .definitions
            .iter()
            .any(|&d| self.covered[d] == 0 && self.gain(d) > 0)
    }

    fn lower_bound(&self, depth: usize) -> u64 {
        let mut bound = self.in_cost as f64;
        for d in 0..self.model.definitions.len() {
            let keep = self.keep[d] as f64;
            if self.gain(d) == 0 {
                bound += keep;
                continue;
            }
            if self.covered[d] > 0 {
                bound += self.refactor as f64;
                continue;
            }
            let mut best = keep;
            for &a in &self.model.candidates[d] {
                if self.rank[a] == usize::MAX || self.rank[a] < depth {
                    continue;
                }
                let sharers = self.model.abstractions[a]
                    .definitions
                    .iter()
                    .filter(|&&e| self.covered[e] == 0 && self.gain(e) > 0)
                    .count()
                    .max(1);
                let v = self.refactor as f64 + self.cost[a] as f64 / sharers as f64;
                if v < best {
                    best = v;
                }
            }
            bound += best;
        }
        (bound - 1e-9).ceil().max(0.0) as u64
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if self.nodes % TIME_CHECK_INTERVAL == 1 && Instant::now() >= deadline {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn branch(&mut self, depth: usize, in_set: &mut Vec<usize>) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        let mut depth = depth;
        while depth < self.order.len() && !self.helps(self.order[depth]) {
            depth += 1;
        }
        if let Some(best) = &self.best {
            let lb = self.lower_bound(depth);
            let best_obj = best.assignment.objective_value;
            if lb > best_obj || (lb == best_obj && in_set.len() > best.assignment.selected.len()) {
                return;
            }
        }
        if depth == self.order.len() {
            let choices = self.choices_for(in_set);
            self.offer(choices);
            return;
        }
        let a = self.order[depth];
        // Include.
        in_set.push(a);
        self.in_cost += self.cost[a];
        for &d in &self.model.abstractions[a].definitions {
            self.covered[d] += 1;
        }
        self.branch(depth + 1, in_set);
        for &d in &self.model.abstractions[a].definitions {
            self.covered[d] -= 1;
        }
        self.in_cost -= self.cost[a];
        in_set.pop();
        // Exclude.
        self.branch(depth + 1, in_set);
    }
}
