//! Crate-private multigraph helpers: components, bridges, vertex cuts.
//!
//! Nodes are 0..n; loops and parallel edges are allowed. Callers translate
//! their id-based structures into indices before querying.

/// An undirected multigraph on nodes 0..n.
pub(crate) struct MultiGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl MultiGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((i, b));
            if a != b {
                adj[b].push((i, a));
            } else {
                adj[a].push((i, a));
            }
        }
        MultiGraph { n, edges, adj }
    }

    /// Component label per node, optionally skipping one edge or one node.
    /// A skipped node gets label usize::MAX.
    pub fn components_with(&self, skip_edge: Option<usize>, skip_node: Option<usize>) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX || Some(start) == skip_node {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(ei, w) in &self.adj[v] {
                    if Some(ei) == skip_edge || Some(w) == skip_node || comp[w] != usize::MAX {
                        continue;
                    }
                    comp[w] = next;
                    stack.push(w);
                }
            }
            next += 1;
        }
        comp
    }

    pub fn components(&self) -> Vec<usize> {
        self.components_with(None, None)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().iter().all(|&c| c == 0)
    }

    /// Bridge flag per edge, by low-link numbering. The entry edge is skipped
    /// by index, so parallel edges cancel; loops are never bridges.
    pub fn bridges(&self) -> Vec<bool> {
        let mut ord = vec![usize::MAX; self.n];
        let mut low = vec![usize::MAX; self.n];
        let mut flags = vec![false; self.edges.len()];
        let mut counter = 0usize;
        for start in 0..self.n {
            if ord[start] != usize::MAX {
                continue;
            }
            // Frame = (vertex, entry edge, next adjacency slot).
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
            ord[start] = counter;
            low[start] = counter;
            counter += 1;
            while let Some(&mut (v, entry, ref mut slot)) = stack.last_mut() {
                if *slot < self.adj[v].len() {
                    let (ei, w) = self.adj[v][*slot];
                    *slot += 1;
                    if ei == entry || w == v {
                        continue;
                    }
                    if ord[w] == usize::MAX {
                        ord[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push((w, ei, 0));
                    } else {
                        low[v] = low[v].min(ord[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&mut (parent, _, _)) = stack.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > ord[parent] {
                            flags[entry] = true;
                        }
                    }
                }
            }
        }
        flags
    }
}
