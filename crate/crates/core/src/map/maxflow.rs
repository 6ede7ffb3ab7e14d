//! Dinic max-flow over `f64` capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    eps: f64,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            adj: vec![Vec::new(); num_nodes],
            eps: 1e-12,
        }
    }

    /// Residual capacities at or below this are treated as saturated.
    pub fn set_eps(&mut self, eps: f64) {
        self.eps = eps;
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        if cap <= 0.0 {
            return;
        }
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0 });
    }

    fn levels(&self, source: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = &self.arcs[a];
                if arc.cap > self.eps && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn push(
        &mut self,
        u: usize,
        sink: usize,
        limit: f64,
        level: &[usize],
        next: &mut [usize],
    ) -> f64 {
        if u == sink {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let a = self.adj[u][next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > self.eps && level[to] == level[u] + 1 {
                let pushed = self.push(to, sink, limit.min(cap), level, next);
                if pushed > 0.0 {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(source);
            if level[sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.push(source, sink, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// Nodes reachable from `source` in the residual network (source side of a min cut).
    pub fn source_side(&self, source: usize) -> Vec<bool> {
        self.levels(source)
            .iter()
            .map(|&l| l != usize::MAX)
            .collect()
    }
}
