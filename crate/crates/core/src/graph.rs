//! Game graph, response graph, and strongly connected components.

use crate::error::{Error, Result};
use crate::game::NormalFormGame;

/// A single-player deviation `from -> to` with the deviator's utility change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub to: usize,
    pub player: usize,
    pub delta: f64,
}

/// All single-player deviations between joint profiles.
///
/// Every node has exactly `sum_k (|S_k| - 1)` outgoing edges, stored
/// contiguously in player order and then strategy order.
#[derive(Debug, Clone)]
pub struct GameGraph {
    n_nodes: usize,
    degree: usize,
    edges: Vec<Deviation>,
}

impl GameGraph {
    pub fn node_count(&self) -> usize {
        self.n_nodes
    }

    pub fn out_degree(&self) -> usize {
        self.degree
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self, node: usize) -> &[Deviation] {
        &self.edges[node * self.degree..(node + 1) * self.degree]
    }

    /// Same graph with deltas averaged under the given weights. All graphs
    /// must come from games with the same strategy counts.
    pub fn weighted_mean(parts: &[(GameGraph, f64)]) -> Result<GameGraph> {
        let Some((first, _)) = parts.first() else {
            return Err(Error::Domain("no graphs to average".into()));
        };
        let mut edges: Vec<Deviation> = first
            .edges
            .iter()
            .map(|e| Deviation { delta: 0.0, ..*e })
            .collect();
        for (g, w) in parts {
            if g.n_nodes != first.n_nodes || g.degree != first.degree {
                return Err(Error::Domain("graphs differ in shape".into()));
            }
            for (acc, e) in edges.iter_mut().zip(&g.edges) {
                acc.delta += w * e.delta;
            }
        }
        Ok(GameGraph {
            n_nodes: first.n_nodes,
            degree: first.degree,
            edges,
        })
    }
}

pub fn build_game_graph(game: &NormalFormGame) -> GameGraph {
    let space = game.space();
    let n = space.len();
    let degree = space.deviation_count();
    let mut edges = Vec::with_capacity(n * degree);
    for s in 0..n {
        for (p, &count) in space.counts().iter().enumerate() {
            let own = space.coord(s, p);
            let base = game.payoff(p, s);
            for alt in (0..count).filter(|&a| a != own) {
                let to = space.with_strategy(s, p, alt);
                edges.push(Deviation {
                    to,
                    player: p,
                    delta: game.payoff(p, to) - base,
                });
            }
        }
    }
    GameGraph {
        n_nodes: n,
        degree,
        edges,
    }
}

/// Compressed adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Digraph {
    pub fn from_adjacency(adj: &[Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for out in adj {
            targets.extend_from_slice(out);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    /// Builds a graph from `(offsets, targets)` in CSR form.
    pub fn from_csr(offsets: Vec<usize>, targets: Vec<usize>) -> Self {
        debug_assert_eq!(*offsets.last().unwrap_or(&0), targets.len());
        Self { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }
}

/// Subgraph of the game graph keeping deviations with `delta >= -tie_tol`.
#[derive(Debug, Clone)]
pub struct ResponseGraph {
    graph: Digraph,
}

impl ResponseGraph {
    pub fn digraph(&self) -> &Digraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        self.graph.successors(node)
    }
}

pub fn build_response_graph(graph: &GameGraph, tie_tol: f64) -> ResponseGraph {
    assert!(tie_tol >= 0.0, "tie tolerance must be nonnegative");
    let mut offsets = Vec::with_capacity(graph.node_count() + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for s in 0..graph.node_count() {
        targets.extend(
            graph
                .edges(s)
                .iter()
                .filter(|e| e.delta >= -tie_tol)
                .map(|e| e.to),
        );
        offsets.push(targets.len());
    }
    ResponseGraph {
        graph: Digraph::from_csr(offsets, targets),
    }
}

/// Strongly connected components of a digraph.
#[derive(Debug, Clone)]
pub struct Components {
    /// Component id of every node.
    pub component_of: Vec<usize>,
    pub count: usize,
}

/// Tarjan's algorithm with an explicit stack.
pub fn strongly_connected_components(g: &Digraph) -> Components {
    const UNVISITED: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut component_of = vec![UNVISITED; n];
    let mut stack = Vec::new();
    // (node, next successor position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut count = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ = g.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component_of[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    Components {
        component_of,
        count,
    }
}

/// Components with no edge leaving them, each sorted, ordered by smallest member.
pub fn closed_components(g: &Digraph) -> Vec<Vec<usize>> {
    let comps = strongly_connected_components(g);
    let mut has_exit = vec![false; comps.count];
    for v in 0..g.node_count() {
        let c = comps.component_of[v];
        if g.successors(v).iter().any(|&w| comps.component_of[w] != c) {
            has_exit[c] = true;
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.count];
    for v in 0..g.node_count() {
        let c = comps.component_of[v];
        if !has_exit[c] {
            members[c].push(v);
        }
    }
    let mut sinks: Vec<Vec<usize>> = members.into_iter().filter(|m| !m.is_empty()).collect();
    sinks.sort_by_key(|m| m[0]);
    sinks
}

/// Sink strongly connected components of the response graph.
pub fn sink_components(rg: &ResponseGraph) -> Vec<Vec<usize>> {
    closed_components(rg.digraph())
}

pub fn is_strongly_connected(g: &Digraph) -> bool {
    g.node_count() <= 1 || strongly_connected_components(g).count == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::hawk_dove;

    fn brute_force_sinks(g: &Digraph) -> Vec<Vec<usize>> {
        let n = g.node_count();
        // reach[i][j]: j reachable from i
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
            let mut frontier = vec![i];
            while let Some(v) = frontier.pop() {
                for &w in g.successors(v) {
                    if !reach[i][w] {
                        reach[i][w] = true;
                        frontier.push(w);
                    }
                }
            }
        }
        let mut sinks: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
            let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
            if closed && !sinks.contains(&comp) {
                sinks.push(comp);
            }
        }
        sinks.sort_by_key(|m| m[0]);
        sinks
    }

    #[test]
    fn degrees() {
        let g = build_game_graph(&hawk_dove::prisoners_dilemma());
        assert_eq!(g.node_count(), 4);
        assert!((0..4).all(|s| g.edges(s).len() == 2));
        let one = NormalFormGame::new(vec![3], vec![vec![0.0, 1.0, 2.0]]).unwrap();
        let g = build_game_graph(&one);
        assert_eq!((g.node_count(), g.out_degree()), (3, 2));
    }

    #[test]
    fn pd_response_graph() {
        let g = build_game_graph(&hawk_dove::prisoners_dilemma());
        let rg = build_response_graph(&g, 0.0);
        // (Dove,Dove) = 3: both deviations gain 2
        assert!(g.edges(3).iter().all(|e| e.delta == 2.0));
        assert_eq!(rg.successors(3).len(), 2);
        // (Hawk,Hawk) = 0: both deviations lose 1
        assert!(g.edges(0).iter().all(|e| e.delta == -1.0));
        assert!(rg.successors(0).is_empty());
        assert_eq!(sink_components(&rg), vec![vec![0]]);
    }

    #[test]
    fn ac_and_mixed_sinks() {
        let ac = build_response_graph(&build_game_graph(&hawk_dove::anti_coordination()), 0.0);
        assert_eq!(sink_components(&ac), vec![vec![1], vec![2]]);
        assert_eq!(sink_components(&ac), brute_force_sinks(ac.digraph()));
        let mixed = build_response_graph(&build_game_graph(&hawk_dove::mixed()), 0.0);
        assert_eq!(sink_components(&mixed), vec![vec![1]]);
    }

    #[test]
    fn constant_game_is_one_sink() {
        let game = NormalFormGame::from_fn(vec![2, 3, 2], |_, _| 1.5).unwrap();
        let g = build_game_graph(&game);
        let rg = build_response_graph(&g, 0.0);
        assert_eq!(rg.edge_count(), g.edge_count());
        assert_eq!(sink_components(&rg), vec![(0..12).collect::<Vec<_>>()]);
    }

    #[test]
    fn tarjan_matches_brute_force_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.random_range(1..12);
            let adj: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..n).filter(|_| rng.random_bool(0.2)).collect())
                .collect();
            let g = Digraph::from_adjacency(&adj);
            assert_eq!(closed_components(&g), brute_force_sinks(&g));
        }
    }

    #[test]
    fn tie_tolerance_is_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let game =
            NormalFormGame::from_fn(vec![3, 3, 2], |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let g = build_game_graph(&game);
        let mut last = usize::MAX;
        for tol in [1.0, 0.5, 0.1, 0.01, 0.0] {
            let e = build_response_graph(&g, tol).edge_count();
            assert!(e <= last);
            last = e;
        }
    }
}
