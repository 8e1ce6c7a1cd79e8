//! Approximate shortest rows of residual network-design LPs.
//!
//! Rows are cuts `S` with `f(S) - z(δ(S)) >= 1` (length
//! `x(δ(S)) / (f(S) - z(δ(S)))`) plus, when an edge `g` is pinned, the row
//! `x(g) >= 1/2` (length `2 x(g)`). Columns are the edges outside the fixed
//! set `I`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::covering::{Certificate, CERTIFY_MARGIN, CoveringInstance, Hint, RowData, RowQuery};
use crate::error::{Error, Result};
use crate::ghtree;
use crate::graph::{cut_edges, Cut, EdgeId, EdgeWeights, Graph};
use crate::numeric::Weight;
use crate::requirements::{find_violated_set, Contracted, ProperFunction};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowRef {
    Cut(Cut),
    /// `x(g) >= 1/2`.
    LowerBound(EdgeId),
}

impl Serialize for RowRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RowRef::Cut(c) => s.collect_seq(c.vertices()),
            RowRef::LowerBound(g) => s.serialize_str(&format!("x({g})>=1/2")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GammaBracket {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// `U_p`, a cut row whose length is at most `gamma_max`.
    pub witness: Cut,
    pub contractions: usize,
}

pub struct ResidualInstance<'a, F: ?Sized> {
    graph: &'a Graph,
    f: &'a F,
    fixed: Vec<bool>,
    z: EdgeWeights<u64>,
    pinned: Option<EdgeId>,
    rhs_cap: f64,
    columns: Vec<EdgeId>,
    column_of: Vec<Option<usize>>,
    z_is_zero: bool,
    gh_builds: AtomicU64,
}

impl<'a, F: ProperFunction + ?Sized> ResidualInstance<'a, F> {
    /// `fixed[e]` marks `e ∈ I`; `z` are the integral offsets.
    pub fn new(
        graph: &'a Graph,
        f: &'a F,
        fixed: Vec<bool>,
        z: EdgeWeights<u64>,
        pinned: Option<EdgeId>,
    ) -> Result<Self> {
        if f.ground_size() != graph.num_vertices() {
            return Err(Error::invalid("requirement function and graph disagree on |V|"));
        }
        if fixed.len() < graph.id_bound() || !z.covers(graph) {
            return Err(Error::invalid("fixed set or offsets do not cover every edge"));
        }
        if let Some(g) = pinned {
            if graph.edge(g).is_none() || fixed[g] {
                return Err(Error::invalid(format!("pinned edge {g} must be a live, unfixed edge")));
            }
        }
        let mut column_of = vec![None; graph.id_bound()];
        let mut columns = Vec::new();
        for e in graph.edge_ids() {
            if !fixed[e] {
                column_of[e] = Some(columns.len());
                columns.push(e);
            }
        }
        let z_is_zero = graph.edge_ids().all(|e| z[e] == 0);
        let m = graph.num_edges() as f64;
        Ok(ResidualInstance {
            graph,
            f,
            fixed,
            z,
            pinned,
            rhs_cap: (m / 2.0).max(f.max_value() as f64),
            columns,
            column_of,
            z_is_zero,
            gh_builds: AtomicU64::new(0),
        })
    }

    /// Caps every right-hand side at `|E|/2`, which holds for the residual
    /// problems of every rounding iteration after the first.
    pub fn with_rounding_residual_cap(mut self) -> Self {
        self.rhs_cap = self.graph.num_edges() as f64 / 2.0;
        self
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn function(&self) -> &F {
        self.f
    }

    pub fn z(&self) -> &EdgeWeights<u64> {
        &self.z
    }

    pub fn pinned(&self) -> Option<EdgeId> {
        self.pinned
    }

    pub fn is_fixed(&self, e: EdgeId) -> bool {
        self.fixed[e]
    }

    pub fn columns(&self) -> &[EdgeId] {
        &self.columns
    }

    pub fn rhs_cap(&self) -> f64 {
        self.rhs_cap
    }

    pub fn gh_builds(&self) -> u64 {
        self.gh_builds.load(Ordering::Relaxed)
    }

    fn count_build(&self) {
        self.gh_builds.fetch_add(1, Ordering::Relaxed);
    }

    /// Spreads column values onto edges (zero on fixed edges).
    pub fn edge_values(&self, columns: &[f64]) -> EdgeWeights<f64> {
        let mut x = EdgeWeights::uniform(self.graph.id_bound(), 0.0);
        for (&e, &v) in self.columns.iter().zip(columns) {
            x.set(e, v);
        }
        x
    }

    pub fn column_values(&self, x: &EdgeWeights<f64>) -> Vec<f64> {
        self.columns.iter().map(|&e| x[e]).collect()
    }

    /// `f(S) - z(δ(S))`.
    pub fn rhs(&self, cut: &Cut) -> i64 {
        let zs: u64 = self
            .graph
            .edges()
            .iter()
            .filter(|e| cut.separates(e.u, e.v))
            .map(|e| self.z[e.id])
            .sum();
        self.f.value(cut) as i64 - zs as i64
    }

    /// Length of the cut row, or `None` if `S` indexes no row.
    pub fn cut_length(&self, cut: &Cut, x: &EdgeWeights<f64>) -> Option<f64> {
        let rhs = self.rhs(cut);
        (rhs >= 1).then(|| {
            let xs: f64 = self
                .graph
                .edges()
                .iter()
                .filter(|e| cut.separates(e.u, e.v) && !self.fixed[e.id])
                .map(|e| x[e.id])
                .sum();
            xs / rhs as f64
        })
    }

    fn x_on(&self, x: &EdgeWeights<f64>, e: EdgeId) -> f64 {
        if self.fixed[e] {
            0.0
        } else {
            x[e]
        }
    }

    /// Brackets the shortest cut-row length by repeatedly contracting the
    /// heaviest edge of a violated cut. `None` when there is no cut row.
    pub fn gamma_bounds(&self, x: &EdgeWeights<f64>) -> Result<Option<GammaBracket>> {
        let mut graph = self.graph.clone();
        let mut f = Contracted::identity(self.f);
        // (x(e_k), U_k)
        let mut picks: Vec<(f64, Cut)> = Vec::new();
        while graph.num_vertices() >= 2 {
            self.count_build();
            let Some(s) = find_violated_set(&graph, &f, &self.z)? else {
                break;
            };
            let heaviest = cut_edges(&graph, &s)?
                .into_iter()
                .map(|e| (self.x_on(x, e), e))
                .fold(None, |acc: Option<(f64, EdgeId)>, (v, e)| match acc {
                    Some((bv, _)) if bv >= v => acc,
                    _ => Some((v, e)),
                });
            let (value, e) = match heaviest {
                Some((v, e)) if v > 0.0 => (v, e),
                _ => {
                    return Err(Error::invariant(
                        "violated cuts contain a positive column",
                        format!("cut {:?} carries no positive x", f.preimage(&s)),
                    ))
                }
            };
            picks.push((value, f.preimage(&s)));
            let c = graph.contract_edge(e)?;
            f.contract(&c.mapping, c.graph.num_vertices());
            graph = c.graph;
        }
        let contractions = picks.len();
        let Some((p, (xp, _))) = picks
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, &(f64, Cut))>, (i, pick)| match acc {
                Some((_, b)) if b.0 <= pick.0 => acc,
                _ => Some((i, pick)),
            })
        else {
            return Ok(None);
        };
        let witness = picks[p].1.clone();
        let gamma_max: f64 = self
            .graph
            .edges()
            .iter()
            .filter(|e| witness.separates(e.u, e.v))
            .map(|e| self.x_on(x, e.id))
            .sum();
        Ok(Some(GammaBracket {
            gamma_min: xp / self.rhs_cap,
            gamma_max,
            witness,
            contractions,
        }))
    }

    /// A cut row of length strictly below `gamma`, if one exists.
    pub fn threshold_test(&self, x: &EdgeWeights<f64>, gamma: f64) -> Result<Option<Cut>> {
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!("threshold {gamma} must be positive")));
        }
        let w = EdgeWeights::new(
            (0..self.graph.id_bound())
                .map(|e| {
                    let xe = if self.graph.edge(e).is_some() { self.x_on(x, e) } else { 0.0 };
                    xe / gamma + self.z.get(e).copied().unwrap_or(0) as f64
                })
                .collect(),
        );
        self.count_build();
        let found = ghtree::min_ratio_cut(self.graph, &w, self.f)?;
        Ok(found.and_then(|r| (r.value < r.requirement as f64).then_some(r.cut)))
    }

    /// `(row, exact length, lower bound on every row's length)`.
    pub fn shortest_row(
        &self,
        x: &EdgeWeights<f64>,
        zeta: f64,
        hint: Option<&Hint<RowRef>>,
    ) -> Result<(RowRef, f64, f64)> {
        if !(zeta > 0.0) {
            return Err(Error::invalid(format!("zeta {zeta} must be positive")));
        }
        let single = self.pinned.map(|g| 2.0 * self.x_on(x, g));

        let cut_part: Option<(Cut, f64, f64)> = if self.z_is_zero {
            // f - z = f is proper: one tree gives the exact minimum
            let masked = EdgeWeights::new(
                (0..self.graph.id_bound())
                    .map(|e| if self.graph.edge(e).is_some() { self.x_on(x, e) } else { 0.0 })
                    .collect(),
            );
            self.count_build();
            ghtree::min_ratio_cut(self.graph, &masked, self.f)?.map(|r| {
                let len = r.value / r.requirement as f64;
                (r.cut, len, len)
            })
        } else {
            let mut bracket: Option<(f64, Cut, f64)> = None;
            let mut settled = false;
            if let Some(Hint { lower_bound, row: RowRef::Cut(c), .. }) = hint {
                if let Some(len) = self.cut_length(c, x) {
                    bracket = Some((*lower_bound, c.clone(), len));
                }
            }
            if bracket.is_none() {
                if let Some(ls) = single {
                    // is any cut row shorter than the pinned row?
                    match self.threshold_test(x, ls)? {
                        None => settled = true,
                        Some(c) => {
                            let len = self.cut_length(&c, x).unwrap_or(f64::INFINITY);
                            if let Some(h) = hint {
                                bracket = Some((h.lower_bound, c, len));
                            } else if let Some(b) = self.gamma_bounds(x)? {
                                bracket = Some((b.gamma_min, c, len));
                            }
                        }
                    }
                }
            }
            if bracket.is_none() && !settled {
                if let Some(b) = self.gamma_bounds(x)? {
                    let len = self.cut_length(&b.witness, x).unwrap_or(b.gamma_max);
                    let lo = hint.map_or(b.gamma_min, |h| h.lower_bound.max(b.gamma_min));
                    bracket = Some((lo, b.witness, len));
                }
            }
            match bracket {
                None => None,
                Some((mut lo, mut best, mut hi)) => {
                    lo = lo.min(hi);
                    while hi > (1.0 + zeta) * lo {
                        let mid = (lo * hi).sqrt();
                        match self.threshold_test(x, mid)? {
                            Some(c) => match self.cut_length(&c, x) {
                                Some(len) if len < hi => {
                                    hi = len;
                                    best = c;
                                }
                                _ => lo = mid,
                            },
                            None => lo = mid,
                        }
                    }
                    Some((best, hi, lo))
                }
            }
        };

        match (cut_part, single, self.pinned) {
            (Some((c, len, lo)), Some(ls), Some(g)) => Ok(if ls < len {
                (RowRef::LowerBound(g), ls, lo.min(ls))
            } else {
                (RowRef::Cut(c), len, lo.min(ls))
            }),
            (Some((c, len, lo)), _, _) => Ok((RowRef::Cut(c), len, lo)),
            (None, Some(ls), Some(g)) => Ok((RowRef::LowerBound(g), ls, ls)),
            _ => Err(Error::invariant(
                "residual LP has a row",
                "no violated cut and no pinned edge",
            )),
        }
    }

    /// The violated row and its shortfall, if `x` is infeasible; exact for
    /// exact weight types.
    pub fn certify_feasibility<W: Weight>(&self, x: &EdgeWeights<W>) -> Result<Option<(RowRef, W)>> {
        let w = EdgeWeights::new(
            (0..self.graph.id_bound())
                .map(|e| {
                    let xe = match (self.graph.edge(e), x.get(e)) {
                        (Some(_), Some(v)) if !self.fixed[e] => v.clone(),
                        _ => W::zero(),
                    };
                    xe + W::from_u64(self.z.get(e).copied().unwrap_or(0))
                })
                .collect(),
        );
        self.count_build();
        if let Some(r) = ghtree::min_ratio_cut(self.graph, &w, self.f)? {
            let req = W::from_u64(r.requirement);
            if r.value < req {
                return Ok(Some((RowRef::Cut(r.cut), req - r.value)));
            }
        }
        if let Some(g) = self.pinned {
            let half = W::one() / W::from_u64(2);
            let xg = x.get(g).cloned().unwrap_or_else(W::zero);
            if xg < half {
                return Ok(Some((RowRef::LowerBound(g), half - xg)));
            }
        }
        Ok(None)
    }

    fn column(&self, e: EdgeId) -> Option<usize> {
        self.column_of.get(e).copied().flatten()
    }
}

impl<F: ProperFunction + ?Sized> CoveringInstance for ResidualInstance<'_, F> {
    type Row = RowRef;

    fn num_columns(&self) -> usize {
        self.columns.len()
    }

    fn cost(&self, column: usize) -> f64 {
        self.graph.edge(self.columns[column]).map_or(0.0, |e| e.cost)
    }

    fn row(&self, row: &RowRef) -> Result<RowData> {
        match row {
            RowRef::Cut(c) => Ok(RowData {
                coeffs: cut_edges(self.graph, c)?
                    .into_iter()
                    .filter_map(|e| self.column(e).map(|j| (j, 1.0)))
                    .collect(),
                rhs: self.rhs(c) as f64,
            }),
            RowRef::LowerBound(g) => Ok(RowData {
                coeffs: self.column(*g).map(|j| (j, 1.0)).into_iter().collect(),
                rhs: 0.5,
            }),
        }
    }

    fn shortest_row(
        &self,
        x: &[f64],
        zeta: f64,
        hint: Option<&Hint<RowRef>>,
    ) -> Result<RowQuery<RowRef>> {
        let before = self.gh_builds();
        let (row, length, lower_bound) = ResidualInstance::shortest_row(self, &self.edge_values(x), zeta, hint)?;
        Ok(RowQuery {
            row,
            length,
            lower_bound,
            work: self.gh_builds() - before,
        })
    }

    fn certify(&self, x: &[f64]) -> Result<Certificate<RowRef>> {
        let xe = self.edge_values(x);
        let shrunk = xe.map(|v| v / (1.0 + CERTIFY_MARGIN));
        Ok(match self.certify_feasibility(&shrunk)? {
            None => Certificate::Feasible,
            Some((row, _)) => {
                let length = match &row {
                    RowRef::Cut(c) => self.cut_length(c, &xe).unwrap_or(0.0),
                    RowRef::LowerBound(g) => 2.0 * xe[*g],
                };
                Certificate::Violated { row, length }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::requirements::RequirementMatrix;

    fn triangle() -> Graph {
        Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_bracket() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 0), None).unwrap();
        let b = res.gamma_bounds(&EdgeWeights::uniform(3, 1.0)).unwrap().unwrap();
        assert!((b.gamma_min - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.gamma_max, 2.0);
    }

    #[test]
    fn no_violated_set_no_bracket() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::new(vec![1, 1, 0]), None).unwrap();
        assert!(res.gamma_bounds(&EdgeWeights::uniform(3, 1.0)).unwrap().is_none());
    }

    #[test]
    fn threshold_examples() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 0), None).unwrap();
        let x = EdgeWeights::uniform(3, 1.0);
        assert!(res.threshold_test(&x, 3.0).unwrap().is_some());
        assert!(res.threshold_test(&x, 1.0).unwrap().is_none());
        assert!(res.threshold_test(&x, 0.0).is_err());
    }

    #[test]
    fn shortest_row_examples() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 0), Some(0)).unwrap();
        let (_, len, _) = res.shortest_row(&EdgeWeights::uniform(3, 1.0), 0.1, None).unwrap();
        assert_eq!(len, 2.0);

        // f - z <= 0 everywhere: only the pinned row is left
        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 1), Some(1)).unwrap();
        let x = EdgeWeights::new(vec![0.2, 0.3, 0.2]);
        let (row, len, lo) = res.shortest_row(&x, 0.1, None).unwrap();
        assert_eq!(row, RowRef::LowerBound(1));
        assert!((len - 0.6).abs() < 1e-12 && lo == len);

        let res = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 1), None).unwrap();
        assert!(res.shortest_row(&x, 0.1, None).is_err());
    }

    #[test]
    fn certify_examples() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        let plain = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 0), None).unwrap();
        assert!(plain.certify_feasibility(&EdgeWeights::uniform(3, 0.5)).unwrap().is_none());
        let pinned = ResidualInstance::new(&g, &f, vec![false; 3], EdgeWeights::uniform(3, 0), Some(2)).unwrap();
        assert!(pinned.certify_feasibility(&EdgeWeights::uniform(3, 0.5)).unwrap().is_none());
        let (row, deficit) = plain.certify_feasibility(&EdgeWeights::uniform(3, 0.4)).unwrap().unwrap();
        assert!(matches!(row, RowRef::Cut(_)));
        assert!((deficit - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pinned_edge_must_be_free() {
        let g = triangle();
        let f = RequirementMatrix::uniform(3, 1);
        assert!(ResidualInstance::new(&g, &f, vec![true, false, false], EdgeWeights::uniform(3, 0), Some(0)).is_err());
    }
}
