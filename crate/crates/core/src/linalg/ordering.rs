//! Fill-reducing elimination order by nested dissection.
//!
//! Each connected subgraph is split with a breadth-first level structure rooted
//! at a pseudo-peripheral vertex: the median level is the separator, the
//! levels before and after it are dissected recursively, and the separator is
//! numbered last.

use std::collections::VecDeque;

/// Symmetric adjacency of a square sparsity pattern, diagonal excluded.
pub fn symmetric_adjacency(n: usize, indptr: &[usize], indices: &[usize]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in &indices[indptr[i]..indptr[i + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Elimination order: `order[k]` is the vertex eliminated at step `k`.
pub fn nested_dissection(adj: &[Vec<usize>], leaf_size: usize) -> Vec<usize> {
    let n = adj.len();
    let mut state = Dissector {
        adj,
        region: vec![0; n],
        next_region: 1,
        level: vec![usize::MAX; n],
        order: Vec::with_capacity(n),
        leaf_size: leaf_size.max(1),
    };
    state.dissect((0..n).collect());
    debug_assert_eq!(state.order.len(), n);
    state.order
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    region: Vec<usize>,
    next_region: usize,
    level: Vec<usize>,
    order: Vec<usize>,
    leaf_size: usize,
}

impl Dissector<'_> {
    fn fresh_region(&mut self, nodes: &[usize]) -> usize {
        let r = self.next_region;
        self.next_region += 1;
        for &v in nodes {
            self.region[v] = r;
        }
        r
    }

    /// BFS restricted to region `r`; returns visited vertices grouped by level.
    fn levels(&mut self, root: usize, r: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::from([root]);
        let mut seen = vec![root];
        self.level[root] = 0;
        while let Some(v) = queue.pop_front() {
            let l = self.level[v];
            if out.len() <= l {
                out.push(Vec::new());
            }
            out[l].push(v);
            for &w in &self.adj[v] {
                if self.region[w] == r && self.level[w] == usize::MAX {
                    self.level[w] = l + 1;
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        for v in seen {
            self.level[v] = usize::MAX;
        }
        out
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= self.leaf_size {
            self.order.extend(nodes);
            return;
        }
        let r = self.fresh_region(&nodes);

        // split into connected components first
        let mut components = Vec::new();
        let mut done = std::collections::HashSet::new();
        for &v in &nodes {
            if done.contains(&v) {
                continue;
            }
            let comp: Vec<usize> = self.levels(v, r).into_iter().flatten().collect();
            done.extend(comp.iter().copied());
            components.push(comp);
        }
        if components.len() > 1 {
            for c in components {
                self.dissect(c);
            }
            return;
        }

        // pseudo-peripheral root: repeat BFS from the last vertex of the deepest level
        let mut levels = self.levels(nodes[0], r);
        for _ in 0..4 {
            let cand = *levels.last().and_then(|l| l.last()).expect("nonempty");
            let next = self.levels(cand, r);
            if next.len() <= levels.len() {
                break;
            }
            levels = next;
        }
        if levels.len() < 3 {
            self.order.extend(nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, lv) in levels.iter().enumerate() {
            acc += lv.len();
            if acc >= half {
                mid = l.clamp(1, levels.len() - 2);
                break;
            }
        }

        // separator vertices that do not touch the far side can join the near side
        let far_region = self.fresh_region(&levels[mid + 1..].concat());
        let mut near: Vec<usize> = levels[..mid].concat();
        let mut separator = Vec::new();
        for &v in &levels[mid] {
            if self.adj[v].iter().any(|&w| self.region[w] == far_region) {
                separator.push(v);
            } else {
                near.push(v);
            }
        }
        let far: Vec<usize> = levels[mid + 1..].concat();
        self.dissect(near);
        self.dissect(far);
        self.order.extend(separator);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<Vec<usize>> {
        let id = |i: usize, j: usize| j * n + i;
        let mut adj = vec![Vec::new(); n * n];
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < n {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        adj
    }

    #[test]
    fn order_is_permutation() {
        for n in [1, 2, 5, 17] {
            let adj = grid(n);
            let mut ord = nested_dissection(&adj, 4);
            ord.sort_unstable();
            assert_eq!(ord, (0..n * n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn disconnected_graph() {
        let adj = vec![vec![1], vec![0], vec![3], vec![2], vec![]];
        let mut ord = nested_dissection(&adj, 1);
        ord.sort_unstable();
        assert_eq!(ord, vec![0, 1, 2, 3, 4]);
    }
}
