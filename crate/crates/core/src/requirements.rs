//! Proper cut-requirement functions.

use crate::error::{Error, Result};
use crate::ghtree;
use crate::graph::{Cut, EdgeWeights, Graph, VertexId};

/// A symmetric, maximal cut function `f` with `f(V) = 0`, exposed only as a
/// cut evaluator.
pub trait ProperFunction: Send + Sync {
    fn ground_size(&self) -> usize;

    /// `f(S)`; the cut must live on this function's ground set.
    fn value(&self, cut: &Cut) -> u64;

    /// Upper bound on every value of `f`.
    fn max_value(&self) -> u64;

    fn eval(&self, cut: &Cut) -> Result<u64> {
        if cut.ground_size() != self.ground_size() {
            return Err(Error::invalid(format!(
                "cut over {} vertices evaluated on a {}-vertex ground set",
                cut.ground_size(),
                self.ground_size()
            )));
        }
        Ok(self.value(cut))
    }
}

impl<F: ProperFunction + ?Sized> ProperFunction for &F {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, cut: &Cut) -> u64 {
        (**self).value(cut)
    }
    fn max_value(&self) -> u64 {
        (**self).max_value()
    }
}

/// Symmetric pairwise requirements `r(u,v)`; induces `f(S) = max r(u,v)` over
/// pairs separated by `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequirementMatrix {
    n: usize,
    r: Vec<u64>,
}

impl RequirementMatrix {
    pub fn new(n: usize) -> Self {
        RequirementMatrix { n, r: vec![0; n * n] }
    }

    pub fn uniform(n: usize, value: u64) -> Self {
        let mut m = Self::new(n);
        for u in 0..n {
            for v in u + 1..n {
                m.r[u * n + v] = value;
                m.r[v * n + u] = value;
            }
        }
        m
    }

    pub fn set(&mut self, u: VertexId, v: VertexId, value: u64) -> Result<()> {
        if u == v {
            return Err(Error::invalid(format!("requirement r({u},{u}) on a single vertex")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::invalid(format!("requirement ({u},{v}) outside 0..{}", self.n)));
        }
        // keep sums of requirements well inside f64's exact integer range
        if value > 1 << 40 {
            return Err(Error::invalid(format!("requirement {value} too large")));
        }
        self.r[u * self.n + v] = value;
        self.r[v * self.n + u] = value;
        Ok(())
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> u64 {
        if u == v {
            0
        } else {
            self.r[u * self.n + v]
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// Pairs `u < v` with a positive requirement.
    pub fn pairs(&self) -> impl Iterator<Item = (VertexId, VertexId, u64)> + '_ {
        (0..self.n)
            .flat_map(move |u| (u + 1..self.n).map(move |v| (u, v, self.get(u, v))))
            .filter(|&(_, _, r)| r > 0)
    }
}

impl ProperFunction for RequirementMatrix {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, cut: &Cut) -> u64 {
        let side = cut.side();
        let mut best = 0;
        for u in (0..self.n).filter(|&u| side[u]) {
            let row = &self.r[u * self.n..(u + 1) * self.n];
            for v in (0..self.n).filter(|&v| !side[v]) {
                best = best.max(row[v]);
            }
        }
        best
    }

    fn max_value(&self) -> u64 {
        self.r.iter().copied().max().unwrap_or(0)
    }
}

/// `f` seen through a sequence of contractions: a cut of the contracted
/// ground set is evaluated on its preimage.
#[derive(Clone, Debug)]
pub struct Contracted<F> {
    inner: F,
    // inner vertex -> outer vertex
    mapping: Vec<VertexId>,
    outer: usize,
}

impl<F: ProperFunction> Contracted<F> {
    pub fn identity(inner: F) -> Self {
        let n = inner.ground_size();
        Contracted {
            inner,
            mapping: (0..n).collect(),
            outer: n,
        }
    }

    /// Composes one more contraction step (`step` maps the current outer
    /// vertices onto a smaller set of `new_size` vertices).
    pub fn contract(&mut self, step: &[VertexId], new_size: usize) {
        for m in self.mapping.iter_mut() {
            *m = step[*m];
        }
        self.outer = new_size;
    }

    /// Original vertex -> current vertex.
    pub fn mapping(&self) -> &[VertexId] {
        &self.mapping
    }

    pub fn preimage(&self, cut: &Cut) -> Cut {
        cut.preimage(&self.mapping)
    }
}

impl<F: ProperFunction> ProperFunction for Contracted<F> {
    fn ground_size(&self) -> usize {
        self.outer
    }
    fn value(&self, cut: &Cut) -> u64 {
        self.inner.value(&cut.preimage(&self.mapping))
    }
    fn max_value(&self) -> u64 {
        self.inner.max_value()
    }
}

/// Some `S` with `f(S) - z(δ(S)) >= 1`, or `None` when `z` covers `f`.
///
/// Goes through one Gomory-Hu tree on `z`: a violated set exists iff the
/// minimum of `z(δ(S_e)) / f(S_e)` over tree edges with `f(S_e) >= 1` is below
/// one, and integrality turns "below" into "by at least one".
pub fn find_violated_set<F: ProperFunction + ?Sized>(
    graph: &Graph,
    f: &F,
    z: &EdgeWeights<u64>,
) -> Result<Option<Cut>> {
    if f.ground_size() != graph.num_vertices() {
        return Err(Error::invalid("requirement function and graph disagree on |V|"));
    }
    if !z.covers(graph) {
        return Err(Error::invalid("multiplicities do not cover every edge"));
    }
    if graph.num_vertices() < 2 {
        return Ok(None);
    }
    let w = z.as_weights::<f64>();
    let found = ghtree::min_ratio_cut(graph, &w, f)?;
    Ok(found.and_then(|r| (r.value < r.requirement as f64).then_some(r.cut)))
}
