//! Brute-force and exact-rational reference solvers.
//!
//! Everything here enumerates cuts or integer vectors outright and is meant
//! for small instances only; these are the yardsticks the fast paths are
//! audited against.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{cut_value, Cut, EdgeId, EdgeWeights, Graph};
use crate::numeric::{Rational, Weight};
use crate::requirements::ProperFunction;
use crate::row_oracle::{ResidualInstance, RowRef};

pub const MAX_ENUM_VERTICES: usize = 12;
pub const MAX_IP_EDGES: usize = 12;

fn check_enum(n: usize) -> Result<()> {
    if !(2..=MAX_ENUM_VERTICES).contains(&n) {
        return Err(Error::invalid(format!(
            "cut enumeration supports 2..={MAX_ENUM_VERTICES} vertices, got {n}"
        )));
    }
    Ok(())
}

/// Dense LP `min c·x  s.t.  A x >= b, x >= 0` over the rationals.
#[derive(Clone, Debug)]
pub struct ExplicitLp {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
    /// Edge behind each column, when built from a network instance.
    pub columns: Vec<EdgeId>,
    pub rows: Vec<RowRef>,
}

/// All rows of a residual network-design LP: one per canonical cut with
/// positive right-hand side, plus `x(g) >= 1/2` for a pinned `g`.
pub fn enumerate_constraints<F: ProperFunction + ?Sized>(res: &ResidualInstance<'_, F>) -> Result<ExplicitLp> {
    let graph = res.graph();
    check_enum(graph.num_vertices())?;
    let columns = res.columns().to_vec();
    let costs = columns
        .iter()
        .map(|&e| Rational::from_f64(graph.edge(e).map_or(0.0, |e| e.cost)))
        .collect();
    let mut lp = ExplicitLp {
        a: Vec::new(),
        b: Vec::new(),
        c: costs,
        columns: columns.clone(),
        rows: Vec::new(),
    };
    for cut in Cut::enumerate(graph.num_vertices()) {
        let rhs = res.rhs(&cut);
        if rhs <= 0 {
            continue;
        }
        let row = columns
            .iter()
            .map(|&e| {
                let edge = graph.edge(e).unwrap();
                if cut.separates(edge.u, edge.v) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        lp.a.push(row);
        lp.b.push(Rational::from_u64(rhs as u64));
        lp.rows.push(RowRef::Cut(cut));
    }
    if let Some(g) = res.pinned() {
        lp.a.push(columns.iter().map(|&e| if e == g { Rational::one() } else { Rational::zero() }).collect());
        lp.b.push(Rational::one() / Rational::from_u64(2));
        lp.rows.push(RowRef::LowerBound(g));
    }
    Ok(lp)
}

#[derive(Clone, Debug)]
pub struct LpOptimum {
    pub value: Rational,
    pub x: Vec<Rational>,
    /// An optimal dual (one value per row).
    pub y: Vec<Rational>,
}

/// Exact optimum by Bland-rule simplex on the dual `max b·y  s.t.  Aᵀy <= c,
/// y >= 0`, whose slack basis is feasible whenever `c >= 0`. The primal is
/// read off the final reduced costs.
pub fn exact_lp_min(lp: &ExplicitLp) -> Result<LpOptimum> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.c.iter().any(|c| c.is_negative()) {
        return Err(Error::invalid("exact LP oracle needs nonnegative costs"));
    }
    if m == 0 {
        return Ok(LpOptimum {
            value: Rational::zero(),
            x: vec![Rational::zero(); n],
            y: Vec::new(),
        });
    }
    // columns 0..m are y, m..m+n are slacks, last is the right-hand side
    let width = m + n + 1;
    let mut t: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            let mut row = vec![Rational::zero(); width];
            for i in 0..m {
                row[i] = lp.a[i][j].clone();
            }
            row[m + j] = Rational::one();
            row[width - 1] = lp.c[j].clone();
            row
        })
        .collect();
    let mut obj = vec![Rational::zero(); width];
    for i in 0..m {
        obj[i] = -lp.b[i].clone();
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    loop {
        let Some(enter) = (0..width - 1).find(|&k| obj[k].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..n {
            if t[r][enter].is_positive() {
                let ratio = t[r][width - 1].clone() / t[r][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::invalid("LP is infeasible (its dual is unbounded)"));
        };
        let pivot = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        let pivot_row = t[r].clone();
        for (rr, row) in t.iter_mut().enumerate() {
            if rr != r && !row[enter].is_zero() {
                let factor = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v = v.clone() - factor.clone() * p.clone();
                }
            }
        }
        let factor = obj[enter].clone();
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v = v.clone() - factor.clone() * p.clone();
        }
        basis[r] = enter;
    }

    let mut y = vec![Rational::zero(); m];
    for (r, &b) in basis.iter().enumerate() {
        if b < m {
            y[b] = t[r][width - 1].clone();
        }
    }
    Ok(LpOptimum {
        value: obj[width - 1].clone(),
        x: (0..n).map(|j| obj[m + j].clone()).collect(),
        y,
    })
}

/// Exact minimum of `w(δ(S)) / f(S)` over cuts with `f(S) >= 1`.
pub fn brute_min_ratio<W: Weight, F: ProperFunction + ?Sized>(
    graph: &Graph,
    w: &EdgeWeights<W>,
    f: &F,
) -> Result<Option<(Cut, W)>> {
    check_enum(graph.num_vertices())?;
    let mut best: Option<(Cut, W)> = None;
    for cut in Cut::enumerate(graph.num_vertices()) {
        let req = f.value(&cut);
        if req == 0 {
            continue;
        }
        let ratio = cut_value(graph, w, &cut)? / W::from_u64(req);
        if best.as_ref().is_none_or(|(_, b)| ratio < *b) {
            best = Some((cut, ratio));
        }
    }
    Ok(best)
}

/// Exact shortest row of a residual LP (cut rows and the pinned row).
pub fn brute_shortest_row<F: ProperFunction + ?Sized>(
    res: &ResidualInstance<'_, F>,
    x: &EdgeWeights<f64>,
) -> Result<Option<(RowRef, f64)>> {
    let mut best = brute_shortest_cut_row(res, x)?.map(|(c, l)| (RowRef::Cut(c), l));
    if let Some(g) = res.pinned() {
        let l = 2.0 * x[g];
        if best.as_ref().is_none_or(|(_, b)| l < *b) {
            best = Some((RowRef::LowerBound(g), l));
        }
    }
    Ok(best)
}

pub fn brute_shortest_cut_row<F: ProperFunction + ?Sized>(
    res: &ResidualInstance<'_, F>,
    x: &EdgeWeights<f64>,
) -> Result<Option<(Cut, f64)>> {
    check_enum(res.graph().num_vertices())?;
    let mut best: Option<(Cut, f64)> = None;
    for cut in Cut::enumerate(res.graph().num_vertices()) {
        if let Some(l) = res.cut_length(&cut, x) {
            if best.as_ref().is_none_or(|(_, b)| l < *b) {
                best = Some((cut, l));
            }
        }
    }
    Ok(best)
}

/// `max_S f(S) - z(δ(S))` over all cuts.
pub fn max_residual_requirement<F: ProperFunction + ?Sized>(
    graph: &Graph,
    f: &F,
    z: &EdgeWeights<u64>,
) -> Result<i64> {
    check_enum(graph.num_vertices())?;
    let zw = z.as_weights::<Rational>();
    let mut best = i64::MIN;
    for cut in Cut::enumerate(graph.num_vertices()) {
        let covered = cut_value(graph, &zw, &cut)?;
        let covered: i64 = covered.to_integer().try_into().unwrap_or(i64::MAX);
        best = best.max(f.value(&cut) as i64 - covered);
    }
    Ok(best)
}

/// Whether `z` satisfies every cut requirement, by full scan.
pub fn brute_is_feasible<F: ProperFunction + ?Sized>(graph: &Graph, f: &F, z: &EdgeWeights<u64>) -> Result<bool> {
    Ok(max_residual_requirement(graph, f, z)? <= 0)
}

/// Optimal integral solution by depth-first enumeration of multiplicities
/// `0..=bound` per edge, pruning on cost and on cuts that can no longer be
/// covered.
pub fn exact_ip_min<F: ProperFunction + ?Sized>(graph: &Graph, f: &F, bound: u64) -> Result<(f64, EdgeWeights<u64>)> {
    let n = graph.num_vertices();
    check_enum(n)?;
    let m = graph.num_edges();
    if m > MAX_IP_EDGES {
        return Err(Error::invalid(format!("IP enumeration supports at most {MAX_IP_EDGES} edges")));
    }
    let edges = graph.edges();
    // (requirement, edge mask over positions)
    let cuts: Vec<(u64, u64)> = Cut::enumerate(n)
        .filter_map(|c| {
            let r = f.value(&c);
            (r > 0).then(|| {
                let mask = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| c.separates(e.u, e.v))
                    .fold(0u64, |m, (i, _)| m | 1 << i);
                (r, mask)
            })
        })
        .collect();

    struct Search<'s> {
        edges: &'s [crate::graph::Edge],
        cuts: &'s [(u64, u64)],
        bound: u64,
        current: Vec<u64>,
        covered: Vec<u64>,
        best: Option<(f64, Vec<u64>)>,
        nodes: u64,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize, cost: f64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > 200_000_000 {
                return Err(Error::invalid("IP enumeration exceeded its node budget"));
            }
            if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
                return Ok(());
            }
            let remaining = !0u64 << depth;
            for (k, &(r, mask)) in self.cuts.iter().enumerate() {
                let open = (mask & remaining).count_ones() as u64;
                if self.covered[k] + self.bound * open < r {
                    return Ok(());
                }
            }
            if depth == self.edges.len() {
                self.best = Some((cost, self.current.clone()));
                return Ok(());
            }
            for mult in 0..=self.bound {
                self.current[depth] = mult;
                for (k, &(_, mask)) in self.cuts.iter().enumerate() {
                    if mask >> depth & 1 == 1 {
                        self.covered[k] += mult;
                    }
                }
                let res = self.go(depth + 1, cost + mult as f64 * self.edges[depth].cost);
                for (k, &(_, mask)) in self.cuts.iter().enumerate() {
                    if mask >> depth & 1 == 1 {
                        self.covered[k] -= mult;
                    }
                }
                res?;
            }
            self.current[depth] = 0;
            Ok(())
        }
    }

    let mut search = Search {
        edges,
        cuts: &cuts,
        bound,
        current: vec![0; m],
        covered: vec![0; cuts.len()],
        best: None,
        nodes: 0,
    };
    search.go(0, 0.0)?;
    let (value, mults) = search
        .best
        .ok_or_else(|| Error::invalid("no integral solution within the multiplicity bound"))?;
    let mut z = EdgeWeights::uniform(graph.id_bound(), 0u64);
    for (e, v) in edges.iter().zip(mults) {
        z.set(e.id, v);
    }
    Ok((value, z))
}
