//! Max-flow/min-cut, Gomory-Hu trees and min-ratio cut separation for
//! proper functions.

use crate::error::{Error, Result};
use crate::graph::{Cut, EdgeWeights, Graph, VertexId};
use crate::numeric::Weight;
use crate::requirements::ProperFunction;

#[derive(Clone, Debug)]
struct Arc<W> {
    to: usize,
    cap: W,
}

/// Residual network of an undirected graph; each edge becomes a pair of
/// opposite arcs that are each other's reverse (arc `i` pairs with `i ^ 1`).
struct FlowNetwork<W> {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<W>>,
    original: Vec<W>,
    tolerance: W,
}

impl<W: Weight> FlowNetwork<W> {
    fn new(graph: &Graph, w: &EdgeWeights<W>) -> Result<Self> {
        let n = graph.num_vertices();
        let mut adj = vec![Vec::new(); n];
        let mut arcs = Vec::with_capacity(2 * graph.num_edges());
        let mut total = W::zero();
        for e in graph.edges() {
            let c = w
                .get(e.id)
                .ok_or_else(|| Error::invalid(format!("no weight for edge {}", e.id)))?
                .clone();
            if !c.is_finite_nonneg() {
                return Err(Error::invalid(format!("weight {c:?} on edge {}", e.id)));
            }
            if c.is_zero() {
                continue;
            }
            total = total + c.clone();
            adj[e.u].push(arcs.len());
            arcs.push(Arc { to: e.v, cap: c.clone() });
            adj[e.v].push(arcs.len());
            arcs.push(Arc { to: e.u, cap: c });
        }
        let original = arcs.iter().map(|a| a.cap.clone()).collect();
        Ok(FlowNetwork {
            adj,
            arcs,
            original,
            tolerance: W::flow_tolerance(&total),
        })
    }

    fn reset(&mut self) {
        for (a, c) in self.arcs.iter_mut().zip(&self.original) {
            a.cap = c.clone();
        }
    }

    fn levels(&self, s: usize) -> Vec<Option<usize>> {
        let mut level = vec![None; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([s]);
        level[s] = Some(0);
        while let Some(v) = queue.pop_front() {
            let lv = level[v].unwrap();
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if level[arc.to].is_none() && arc.cap > self.tolerance {
                    level[arc.to] = Some(lv + 1);
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn augment(
        &mut self,
        v: usize,
        t: usize,
        limit: W,
        level: &[Option<usize>],
        next: &mut [usize],
    ) -> W {
        if v == t {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let a = self.adj[v][next[v]];
            let to = self.arcs[a].to;
            let usable = self.arcs[a].cap > self.tolerance
                && matches!((level[v], level[to]), (Some(lv), Some(lt)) if lt == lv + 1);
            if usable {
                let cap = self.arcs[a].cap.clone();
                let bound = if cap < limit { cap } else { limit.clone() };
                let pushed = self.augment(to, t, bound, level, next);
                if pushed > W::zero() {
                    self.arcs[a].cap = self.arcs[a].cap.clone() - pushed.clone();
                    self.arcs[a ^ 1].cap = self.arcs[a ^ 1].cap.clone() + pushed.clone();
                    return pushed;
                }
            }
            next[v] += 1;
        }
        W::zero()
    }

    /// Runs Dinic from `s` to `t` and returns the source side of a minimum cut.
    fn max_flow_source_side(&mut self, s: usize, t: usize) -> Vec<bool> {
        self.reset();
        let infinite: W = self.original.iter().fold(W::one(), |acc, c| acc + c.clone());
        loop {
            let level = self.levels(s);
            if level[t].is_none() {
                return level.iter().map(Option::is_some).collect();
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(s, t, infinite.clone(), &level, &mut next);
                if pushed <= self.tolerance {
                    break;
                }
            }
        }
    }
}

fn side_value<W: Weight>(graph: &Graph, w: &EdgeWeights<W>, side: &[bool]) -> W {
    graph
        .edges()
        .iter()
        .filter(|e| side[e.u] != side[e.v])
        .fold(W::zero(), |acc, e| acc + w[e.id].clone())
}

#[derive(Clone, Debug)]
pub struct MinCut<W> {
    pub value: W,
    /// Membership flags of the side containing the source.
    pub source_side: Vec<bool>,
}

impl<W> MinCut<W> {
    pub fn cut(&self) -> Cut {
        Cut::from_side(self.source_side.clone()).expect("s-t cut is proper")
    }
}

/// Minimum `w`-weight cut separating `s` from `t`.
pub fn min_cut<W: Weight>(
    graph: &Graph,
    w: &EdgeWeights<W>,
    s: VertexId,
    t: VertexId,
) -> Result<MinCut<W>> {
    let n = graph.num_vertices();
    if s == t || s >= n || t >= n {
        return Err(Error::invalid(format!("min cut between {s} and {t} on {n} vertices")));
    }
    let mut net = FlowNetwork::new(graph, w)?;
    let side = net.max_flow_source_side(s, t);
    Ok(MinCut {
        value: side_value(graph, w, &side),
        source_side: side,
    })
}

#[derive(Clone, Debug)]
pub struct TreeEdge<W> {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: W,
    /// The fundamental cut of this tree edge.
    pub cut: Cut,
}

#[derive(Clone, Debug)]
pub struct GomoryHuTree<W> {
    num_vertices: usize,
    edges: Vec<TreeEdge<W>>,
}

impl<W: Weight> GomoryHuTree<W> {
    pub fn edges(&self) -> &[TreeEdge<W>] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Smallest tree-edge weight on the tree path between `a` and `b`.
    pub fn path_min(&self, a: VertexId, b: VertexId) -> Option<W> {
        // the fundamental cuts on the a-b path are exactly those separating a and b
        self.edges
            .iter()
            .filter(|e| e.cut.separates(a, b))
            .map(|e| e.weight.clone())
            .fold(None, |acc: Option<W>, w| match acc {
                Some(m) if m <= w => Some(m),
                _ => Some(w),
            })
    }
}

/// Gomory-Hu cut tree via Gusfield's non-contracting variant: `n - 1` max
/// flows in the original graph, with the parent swap that keeps every
/// fundamental cut a minimum cut.
pub fn gomory_hu<W: Weight>(graph: &Graph, w: &EdgeWeights<W>) -> Result<GomoryHuTree<W>> {
    let n = graph.num_vertices();
    if !w.covers(graph) {
        return Err(Error::invalid("weights do not cover every edge"));
    }
    let mut net = FlowNetwork::new(graph, w)?;
    let mut parent = vec![0usize; n];
    let mut flow = vec![W::zero(); n];
    for s in 1..n {
        let t = parent[s];
        let side = net.max_flow_source_side(s, t);
        let value = side_value(graph, w, &side);
        for i in 0..n {
            if i != s && side[i] && parent[i] == t {
                parent[i] = s;
            }
        }
        if side[parent[t]] {
            parent[s] = parent[t];
            parent[t] = s;
            flow[s] = flow[t].clone();
            flow[t] = value;
        } else {
            flow[s] = value;
        }
    }

    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        children[parent[v]].push(v);
    }
    // the root may have been re-parented by a swap; find the actual root
    let root = (0..n).find(|&v| parent[v] == v).unwrap_or(0);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for v in (0..n).filter(|&v| v != root) {
        let mut side = vec![false; n];
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            side[x] = true;
            stack.extend(children[x].iter().copied().filter(|&c| c != root));
        }
        edges.push(TreeEdge {
            u: v,
            v: parent[v],
            weight: flow[v].clone(),
            cut: Cut::from_side(side)?,
        });
    }
    Ok(GomoryHuTree {
        num_vertices: n,
        edges,
    })
}

#[derive(Clone, Debug)]
pub struct RatioCut<W> {
    pub cut: Cut,
    /// `w(δ(S))`.
    pub value: W,
    /// `f(S) >= 1`.
    pub requirement: u64,
    pub tree_edge: usize,
}

impl<W: Weight> RatioCut<W> {
    pub fn ratio(&self) -> W {
        self.value.clone() / W::from_u64(self.requirement)
    }
}

/// The tree edge minimizing `w(δ(S_e)) / f(S_e)` over `f(S_e) >= 1`; ties go
/// to the earliest tree edge.
pub fn min_ratio_in_tree<W: Weight, F: ProperFunction + ?Sized>(
    tree: &GomoryHuTree<W>,
    f: &F,
) -> Option<RatioCut<W>> {
    let mut best: Option<RatioCut<W>> = None;
    for (i, e) in tree.edges.iter().enumerate() {
        let req = f.value(&e.cut);
        if req == 0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                e.weight.clone() * W::from_u64(b.requirement) < b.value.clone() * W::from_u64(req)
            }
        };
        if better {
            best = Some(RatioCut {
                cut: e.cut.clone(),
                value: e.weight.clone(),
                requirement: req,
                tree_edge: i,
            });
        }
    }
    best
}

/// Exact minimum of `w(δ(S)) / f(S)` over all cuts with `f(S) >= 1`; the
/// minimum is always attained at a fundamental cut of a Gomory-Hu tree.
pub fn min_ratio_cut<W: Weight, F: ProperFunction + ?Sized>(
    graph: &Graph,
    w: &EdgeWeights<W>,
    f: &F,
) -> Result<Option<RatioCut<W>>> {
    if f.ground_size() != graph.num_vertices() {
        return Err(Error::invalid("requirement function and graph disagree on |V|"));
    }
    let tree = gomory_hu(graph, w)?;
    Ok(min_ratio_in_tree(&tree, f))
}
