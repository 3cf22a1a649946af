//! The shared time grid.
//!
//! Gramian assembly, the input-to-state map `M`, and trajectory propagation
//! all integrate over the same nodes, so the discrete identities
//! (`MM* = Γ_tot`, the terminal-residual formula) hold to rounding rather
//! than to quadrature error.

use alloc::vec::Vec;

use crate::quadrature::{Panel, QuadratureRule};
use crate::system::ImpulseSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct GridInterval {
    pub start: f64,
    pub end: f64,
    pub panels: Vec<Panel>,
    /// Index of the first node of this interval in the global node list.
    pub first_node: usize,
}

impl GridInterval {
    pub fn node_count(&self) -> usize {
        self.panels.iter().map(|p| p.nodes.len()).sum()
    }

    /// `(time, weight)` of every node in order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.panels
            .iter()
            .flat_map(|p| p.nodes.iter().copied().zip(p.weights.iter().copied()))
    }

    /// Sample times: interval start, then per panel its nodes and its end.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + self.panels.iter().map(|p| p.nodes.len() + 1).sum::<usize>());
        out.push(self.start);
        for p in &self.panels {
            out.extend_from_slice(&p.nodes);
            out.push(p.end);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    rule: QuadratureRule,
    intervals: Vec<GridInterval>,
    node_count: usize,
}

impl TimeGrid {
    pub fn new(schedule: &ImpulseSchedule, rule: &QuadratureRule) -> Self {
        let mut intervals = Vec::with_capacity(schedule.interval_count());
        let mut first_node = 0;
        for k in 0..schedule.interval_count() {
            let (start, end) = schedule.interval(k);
            let panels = rule.panels(start, end);
            let iv = GridInterval {
                start,
                end,
                panels,
                first_node,
            };
            first_node += iv.node_count();
            intervals.push(iv);
        }
        TimeGrid {
            rule: rule.clone(),
            intervals,
            node_count: first_node,
        }
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Intervals `[t_k, t_{k+1}]`, `k = 0..=p`.
    pub fn intervals(&self) -> &[GridInterval] {
        &self.intervals
    }

    pub fn interval(&self, k: usize) -> &GridInterval {
        &self.intervals[k]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// `(interval, time, weight)` for every node in global order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.intervals
            .iter()
            .enumerate()
            .flat_map(|(k, iv)| iv.nodes().map(move |(t, w)| (k, t, w)))
    }

    /// Position of node `j` of panel `m` within the interval's sample list.
    pub fn sample_index(&self, panel: usize, j: usize) -> usize {
        1 + panel * (self.rule.order() + 1) + j
    }
}
