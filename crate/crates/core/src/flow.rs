//! Max-flow (Dinic) with min-cut extraction.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: u64,
}

/// A flow network whose arcs are stored in pairs: arc `i` and arc `i ^ 1`
/// are each other's residual reverse.
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Directed arc `u -> v`. Returns the arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: u64) -> usize {
        self.push_pair(u, v, cap, 0)
    }

    /// Undirected edge: capacity `cap` in both directions.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: u64) -> usize {
        self.push_pair(u, v, cap, cap)
    }

    fn push_pair(&mut self, u: usize, v: usize, fwd: u64, back: u64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap: fwd });
        self.arcs.push(Arc { to: u, cap: back });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Run max-flow from `s` to `t` (Dinic), leaving the residual network in
    /// place. Stops early once the flow reaches `limit`.
    pub fn max_flow(&mut self, s: usize, t: usize, limit: u64) -> u64 {
        let n = self.adj.len();
        let mut flow = 0u64;
        let mut level = vec![usize::MAX; n];
        let mut next = vec![0usize; n];
        let mut queue = VecDeque::new();
        while flow < limit {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &a in &self.adj[u] {
                    let Arc { to, cap } = self.arcs[a];
                    if cap > 0 && level[to] == usize::MAX {
                        level[to] = level[u] + 1;
                        queue.push_back(to);
                    }
                }
            }
            if level[t] == usize::MAX {
                break;
            }
            next.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.blocking_path(s, t, limit - flow, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
                if flow >= limit {
                    break;
                }
            }
        }
        flow
    }

    /// One augmenting path in the level graph, found iteratively.
    fn blocking_path(&mut self, s: usize, t: usize, cap: u64, level: &[usize], next: &mut [usize]) -> u64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let bottleneck = path.iter().map(|&a| self.arcs[a].cap).min().unwrap_or(cap).min(cap);
                for &a in &path {
                    self.arcs[a].cap -= bottleneck;
                    self.arcs[a ^ 1].cap += bottleneck;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let a = self.adj[u][next[u]];
                let Arc { to, cap } = self.arcs[a];
                if cap > 0 && level[to] == level[u] + 1 {
                    path.push(a);
                    u = to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the arc that led here.
                match path.pop() {
                    Some(a) => {
                        u = self.arcs[a ^ 1].to;
                        next[u] += 1;
                    }
                    None => return 0,
                }
            }
        }
    }

    /// Nodes reachable from `s` in the residual network. After a completed
    /// max-flow this is the source side of the min cut closest to `s`.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let Arc { to, cap } = self.arcs[a];
                if cap > 0 && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }
}
