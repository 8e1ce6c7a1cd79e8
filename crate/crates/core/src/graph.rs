//! Undirected multigraphs, canonical cuts and edge contraction.
//!
//! Vertices are dense indices `0..n`. Edge ids are assigned at construction
//! and survive contraction unchanged, so a single [`EdgeWeights`] vector
//! indexed by edge id serves the original graph and all of its contractions.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::numeric::Weight;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Cuts are stored with this vertex on the outside.
pub const ROOT: VertexId = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    pub cost: f64,
}

impl Edge {
    pub fn other(&self, w: VertexId) -> VertexId {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<Edge>,
    // edge id -> position in `edges`
    slot: Vec<Option<usize>>,
}

impl Graph {
    /// Builds a graph on `num_vertices` vertices; edge `i` of the input gets id `i`.
    pub fn new(num_vertices: usize, edges: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for (id, &(u, v, cost)) in edges.iter().enumerate() {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::invalid(format!(
                    "edge {id} references a vertex outside 0..{num_vertices}"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("edge {id} is a self-loop at {u}")));
            }
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::invalid(format!("edge {id} has cost {cost}")));
            }
            out.push(Edge { id, u, v, cost });
        }
        let slot = (0..out.len()).map(Some).collect();
        Ok(Graph {
            num_vertices,
            edges: out,
            slot,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// One past the largest edge id ever issued for this graph family.
    pub fn id_bound(&self) -> usize {
        self.slot.len()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.slot.get(id).copied().flatten().map(|i| &self.edges[i])
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().map(|e| e.id)
    }

    pub fn total_cost(&self, multiplicity: &EdgeWeights<u64>) -> f64 {
        self.edges
            .iter()
            .map(|e| e.cost * multiplicity[e.id] as f64)
            .sum()
    }

    /// Merges the endpoints of `e`. Parallel edges survive, edges that become
    /// loops are dropped.
    pub fn contract_edge(&self, e: EdgeId) -> Result<Contraction> {
        let edge = self
            .edge(e)
            .ok_or_else(|| Error::invalid(format!("edge {e} is not live")))?;
        let (keep, gone) = (edge.u.min(edge.v), edge.u.max(edge.v));
        let mapping: Vec<VertexId> = (0..self.num_vertices)
            .map(|w| match w.cmp(&gone) {
                std::cmp::Ordering::Less => w,
                std::cmp::Ordering::Equal => keep,
                std::cmp::Ordering::Greater => w - 1,
            })
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut slot = vec![None; self.slot.len()];
        for old in &self.edges {
            let (u, v) = (mapping[old.u], mapping[old.v]);
            if u == v {
                continue;
            }
            slot[old.id] = Some(edges.len());
            edges.push(Edge {
                id: old.id,
                u,
                v,
                cost: old.cost,
            });
        }
        Ok(Contraction {
            graph: Graph {
                num_vertices: self.num_vertices - 1,
                edges,
                slot,
            },
            merged: keep,
            mapping,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: Graph,
    /// The vertex of the new graph that replaced the contracted edge.
    pub merged: VertexId,
    /// Old vertex -> new vertex.
    pub mapping: Vec<VertexId>,
}

/// A vertex bipartition `(S, V∖S)`, stored as the side not containing [`ROOT`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut {
    side: Vec<bool>,
}

impl Cut {
    /// Canonicalizes `side` (membership flags over the ground set).
    pub fn from_side(mut side: Vec<bool>) -> Result<Self> {
        let members = side.iter().filter(|&&b| b).count();
        if members == 0 || members == side.len() {
            return Err(Error::invalid(format!(
                "cut with {members} of {} vertices is not proper",
                side.len()
            )));
        }
        if side[ROOT] {
            side.iter_mut().for_each(|b| *b = !*b);
        }
        Ok(Cut { side })
    }

    pub fn new(ground: usize, members: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let mut side = vec![false; ground];
        for v in members {
            if v >= ground {
                return Err(Error::invalid(format!("vertex {v} outside ground set")));
            }
            side[v] = true;
        }
        Self::from_side(side)
    }

    /// Cut whose non-root side is given by bits `1..n` of `mask` (bit 0 ignored).
    pub fn from_mask(ground: usize, mask: u64) -> Result<Self> {
        Self::from_side((0..ground).map(|v| v != ROOT && mask >> v & 1 == 1).collect())
    }

    pub fn ground_size(&self) -> usize {
        self.side.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.side[v]
    }

    pub fn side(&self) -> &[bool] {
        &self.side
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.side.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.side.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn separates(&self, a: VertexId, b: VertexId) -> bool {
        self.side[a] != self.side[b]
    }

    /// Pulls a cut of a contracted graph back to the original vertex set.
    pub fn preimage(&self, mapping: &[VertexId]) -> Cut {
        let side = mapping.iter().map(|&w| self.side[w]).collect();
        Cut::from_side(side).expect("preimage of a proper cut is proper")
    }

    /// All `2^(n-1) - 1` canonical cuts of an `n`-vertex ground set.
    pub fn enumerate(ground: usize) -> impl Iterator<Item = Cut> {
        assert!((2..=30).contains(&ground), "cut enumeration needs 2..=30 vertices");
        (1u64..(1u64 << (ground - 1))).map(move |m| Cut::from_mask(ground, m << 1).unwrap())
    }
}

fn check_ground(graph: &Graph, cut: &Cut) -> Result<()> {
    if cut.ground_size() != graph.num_vertices() {
        return Err(Error::invalid(format!(
            "cut over {} vertices used with a {}-vertex graph",
            cut.ground_size(),
            graph.num_vertices()
        )));
    }
    Ok(())
}

/// δ(S): the edges with exactly one endpoint in `cut`.
pub fn cut_edges(graph: &Graph, cut: &Cut) -> Result<Vec<EdgeId>> {
    check_ground(graph, cut)?;
    Ok(graph
        .edges()
        .iter()
        .filter(|e| cut.separates(e.u, e.v))
        .map(|e| e.id)
        .collect())
}

pub fn cut_value<W: Weight>(graph: &Graph, w: &EdgeWeights<W>, cut: &Cut) -> Result<W> {
    check_ground(graph, cut)?;
    let mut total = W::zero();
    for e in graph.edges().iter().filter(|e| cut.separates(e.u, e.v)) {
        let we = w.get(e.id).ok_or_else(|| {
            Error::invariant("weights cover live edges", format!("no weight for edge {}", e.id))
        })?;
        total = total + we.clone();
    }
    Ok(total)
}

/// Per-edge values indexed by edge id (LP values `x`, fixed multiplicities `z`).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeights<W>(Vec<W>);

impl<W: Clone> EdgeWeights<W> {
    pub fn new(values: Vec<W>) -> Self {
        EdgeWeights(values)
    }

    pub fn uniform(len: usize, value: W) -> Self {
        EdgeWeights(vec![value; len])
    }

    pub fn get(&self, id: EdgeId) -> Option<&W> {
        self.0.get(id)
    }

    pub fn set(&mut self, id: EdgeId, value: W) {
        self.0[id] = value;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[W] {
        &self.0
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&W) -> U) -> EdgeWeights<U> {
        EdgeWeights(self.0.iter().map(f).collect())
    }

    pub fn covers(&self, graph: &Graph) -> bool {
        self.0.len() >= graph.id_bound()
    }
}

impl EdgeWeights<f64> {
    /// Converts to multiplicities; fails unless every entry is a nonnegative integer.
    pub fn to_integral(&self) -> Result<EdgeWeights<u64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 {
                    Ok(v as u64)
                } else {
                    Err(Error::invalid(format!("weight {v} on edge {i} is not integral")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(EdgeWeights)
    }
}

impl EdgeWeights<u64> {
    pub fn as_weights<W: Weight>(&self) -> EdgeWeights<W> {
        self.map(|&v| W::from_u64(v))
    }
}

impl<W> Index<EdgeId> for EdgeWeights<W> {
    type Output = W;
    fn index(&self, id: EdgeId) -> &W {
        &self.0[id]
    }
}
