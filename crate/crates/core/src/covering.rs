//! Multiplicative weights for positive covering LPs
//! `min c·x  s.t.  A x >= b, x >= 0` with `A >= 0`, `b > 0`, `c > 0`, driven by
//! an approximate shortest-row oracle.
//!
//! Column values are kept as `x = xs * exp(ln_scale)`: the initial values are
//! around `((1+ζ)n)^(-1/ζ)`, which underflows `f64` for small `ζ`, while every
//! quantity the method compares (row choice, ratios `c·x / len(x)`) is
//! invariant under a common rescaling.

use std::fmt::Debug;
use std::hash::Hash;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sparse row of `A` with its right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct RowData {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Answer of an approximate shortest-row query.
#[derive(Clone, Debug)]
pub struct RowQuery<R> {
    pub row: R,
    /// Exact `len(row, x)`.
    pub length: f64,
    /// Certified lower bound on the shortest length; `length <= (1+ζ) lower_bound`.
    pub lower_bound: f64,
    /// Oracle-specific unit of work (Gomory-Hu builds for network instances).
    pub work: u64,
}

/// A known bracket for the shortest length: nothing is shorter than
/// `lower_bound`, and `row` has length `length`.
#[derive(Clone, Debug)]
pub struct Hint<R> {
    pub lower_bound: f64,
    pub row: R,
    pub length: f64,
}

pub enum Certificate<R> {
    Feasible,
    Violated { row: R, length: f64 },
    Unsupported,
}

pub trait CoveringInstance {
    type Row: Clone + Eq + Hash + Debug;

    fn num_columns(&self) -> usize;
    fn cost(&self, column: usize) -> f64;
    fn row(&self, row: &Self::Row) -> Result<RowData>;

    /// Some row of length at most `(1+zeta)` times the shortest.
    fn shortest_row(
        &self,
        x: &[f64],
        zeta: f64,
        hint: Option<&Hint<Self::Row>>,
    ) -> Result<RowQuery<Self::Row>>;

    /// Check of `A x >= b` with relative slack: reports a row of length
    /// below `1 + CERTIFY_MARGIN`, if any.
    fn certify(&self, _x: &[f64]) -> Result<Certificate<Self::Row>> {
        Ok(Certificate::Unsupported)
    }
}

/// Slack demanded by floating-point certification, so the certified point
/// stays feasible once its coordinates are read as exact rationals.
pub const CERTIFY_MARGIN: f64 = 1e-12;

/// `len(i, x) = Σ_j A(i,j) x(j) / b(i)`.
pub fn row_length(row: &RowData, x: &[f64]) -> Result<f64> {
    if !(row.rhs > 0.0) {
        return Err(Error::invariant("row rhs positive", format!("rhs {}", row.rhs)));
    }
    Ok(row.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() / row.rhs)
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct MwStats {
    pub iterations: u64,
    pub oracle_calls: u64,
    pub pool_hits: u64,
    pub oracle_work: u64,
    pub certification_steps: u64,
    /// `(1/ζ) log_{1+ζ}((1+ζ)n)`; also the most times one column can be chosen.
    pub iteration_bound: f64,
    pub max_column_load: f64,
}

#[derive(Clone, Debug)]
pub struct DualCertificate<R> {
    /// Dual values on visited rows, scaled to satisfy `Σ_i A(i,j) y(i) <= c(j)`.
    pub y: Vec<(R, f64)>,
    /// `Σ_i b(i) y(i)` for the scaled `y`; a lower bound on the optimum.
    pub lower_bound: f64,
    /// The same dual scaled by the a priori bound `log_{1+ζ}((1+ζ)/δ)`.
    pub a_priori_bound: f64,
}

#[derive(Clone, Debug)]
pub struct MwOutcome<R> {
    /// Feasible column values.
    pub x: Vec<f64>,
    pub primal_cost: f64,
    pub dual: DualCertificate<R>,
    pub stats: MwStats,
}

impl<R> MwOutcome<R> {
    pub fn certified_ratio(&self) -> f64 {
        self.primal_cost / self.dual.lower_bound
    }
}

struct Visited {
    y: f64,
    rhs: f64,
}

/// Iterates of the multiplicative weights method.
pub struct MwState<'a, I: CoveringInstance> {
    inst: &'a I,
    zeta: f64,
    costs: Vec<f64>,
    xs: Vec<f64>,
    ln_scale: f64,
    ln_delta: f64,
    visited: IndexMap<I::Row, Visited>,
    loads: Vec<f64>,
    // lower bound on the shortest row length, in `xs` units
    lower: f64,
    pool: Vec<(I::Row, RowData)>,
    best: Option<Best>,
    pub stats: MwStats,
}

struct Best {
    ratio: f64,
    xs: Vec<f64>,
    length: f64,
}

const POOL_SIZE: usize = 24;
// keep the largest xs entry near one
const RESCALE_ABOVE: f64 = 1e8;

impl<'a, I: CoveringInstance> MwState<'a, I> {
    pub fn new(inst: &'a I, zeta: f64) -> Result<Self> {
        let n = inst.num_columns();
        if n == 0 {
            return Err(Error::invalid("covering instance has no columns"));
        }
        if !(zeta > 0.0 && zeta <= 0.15) {
            return Err(Error::invalid(format!("zeta {zeta} outside (0, 0.15]")));
        }
        let costs: Vec<f64> = (0..n).map(|j| inst.cost(j)).collect();
        if let Some(j) = costs.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::invalid(format!("column {j} has cost {}", costs[j])));
        }
        let ln1z = zeta.ln_1p();
        let ln_delta = ln1z - ((1.0 + zeta) * n as f64).ln() / zeta;
        let xs: Vec<f64> = costs.iter().map(|c| 1.0 / c).collect();
        let iteration_bound = ((1.0 + zeta) * n as f64).ln() / (zeta * ln1z);
        let mut state = MwState {
            inst,
            zeta,
            costs,
            xs,
            ln_scale: ln_delta,
            ln_delta,
            visited: IndexMap::new(),
            loads: vec![0.0; n],
            lower: 0.0,
            pool: Vec::new(),
            best: None,
            stats: MwStats {
                iteration_bound,
                ..MwStats::default()
            },
        };
        state.rescale();
        Ok(state)
    }

    fn rescale(&mut self) {
        let max = self.xs.iter().copied().fold(0.0, f64::max);
        if !(1.0 / RESCALE_ABOVE..=RESCALE_ABOVE).contains(&max) {
            self.xs.iter_mut().for_each(|v| *v /= max);
            self.ln_scale += max.ln();
            self.lower /= max;
        }
    }

    /// `ln Σ_j c(j) x(j)` in true units.
    pub fn ln_cost(&self) -> f64 {
        let s: f64 = self.costs.iter().zip(&self.xs).map(|(c, x)| c * x).sum();
        s.ln() + self.ln_scale
    }

    pub fn finished(&self) -> bool {
        self.ln_cost() >= 0.0
    }

    /// Current column values in true units (may underflow to zero early on).
    pub fn x(&self) -> Vec<f64> {
        let s = self.ln_scale.exp();
        self.xs.iter().map(|v| v * s).collect()
    }

    fn pick_row(&mut self) -> Result<(I::Row, RowData, f64)> {
        let mut best_pool: Option<(usize, f64)> = None;
        for (i, (_, data)) in self.pool.iter().enumerate() {
            let len = row_length(data, &self.xs)?;
            if best_pool.is_none_or(|(_, l)| len < l) {
                best_pool = Some((i, len));
            }
        }
        if let Some((i, len)) = best_pool {
            if self.lower > 0.0 && len <= (1.0 + self.zeta) * self.lower {
                self.stats.pool_hits += 1;
                let (row, data) = self.pool[i].clone();
                return Ok((row, data, len));
            }
        }
        let hint = match best_pool {
            Some((i, length)) if self.lower > 0.0 => Some(Hint {
                lower_bound: self.lower,
                row: self.pool[i].0.clone(),
                length,
            }),
            _ => None,
        };
        // finer than ζ so the returned row stays usable for a few iterations
        let precision = (1.0 + self.zeta).sqrt() - 1.0;
        let q = self.inst.shortest_row(&self.xs, precision, hint.as_ref())?;
        self.stats.oracle_calls += 1;
        self.stats.oracle_work += q.work;
        self.lower = self.lower.max(q.lower_bound);
        let data = self.inst.row(&q.row)?;
        let len = row_length(&data, &self.xs)?;
        if len > (1.0 + self.zeta) * self.lower * (1.0 + 1e-9) {
            return Err(Error::invariant(
                "oracle returns a (1+ζ)-shortest row",
                format!("length {len} vs lower bound {}", self.lower),
            ));
        }
        if !self.pool.iter().any(|(r, _)| *r == q.row) {
            if self.pool.len() == POOL_SIZE {
                self.pool.remove(0);
            }
            self.pool.push((q.row.clone(), data.clone()));
        }
        Ok((q.row, data, len))
    }

    /// One iteration: choose a short row, raise its dual, reweight columns.
    pub fn step(&mut self) -> Result<()> {
        self.stats.iterations += 1;
        let cap = self.stats.iteration_bound * self.xs.len() as f64 + 1.0;
        if self.stats.iterations as f64 > cap {
            return Err(Error::invariant(
                "iterations <= n log_{1+ζ}((1+ζ)/δ)",
                format!("{} iterations", self.stats.iterations),
            ));
        }
        let (row, data, len) = self.pick_row()?;
        if !(len > 0.0) {
            return Err(Error::invariant(
                "visited rows have positive length",
                format!("row {row:?} has length {len}"),
            ));
        }
        let cost_s: f64 = self.costs.iter().zip(&self.xs).map(|(c, x)| c * x).sum();
        let ratio = cost_s / len;
        if self.best.as_ref().is_none_or(|b| ratio < b.ratio) {
            self.best = Some(Best {
                ratio,
                xs: self.xs.clone(),
                length: len,
            });
        }

        let mut pivot: Option<(usize, f64)> = None;
        for &(j, a) in &data.coeffs {
            if a > 0.0 {
                let r = self.costs[j] / a;
                if pivot.is_none_or(|(pj, pr)| r < pr || (r == pr && j < pj)) {
                    pivot = Some((j, r));
                }
            }
        }
        let (_, increment) = pivot.ok_or_else(|| {
            Error::invariant("rows have a positive coefficient", format!("row {row:?}"))
        })?;
        self.visited
            .entry(row)
            .or_insert(Visited { y: 0.0, rhs: data.rhs })
            .y += increment;
        for &(j, a) in &data.coeffs {
            let load = increment * a / self.costs[j];
            self.loads[j] += load;
            self.xs[j] *= 1.0 + self.zeta * load;
        }
        self.rescale();
        Ok(())
    }

    /// Visited rows scaled by the largest column load, which makes every dual
    /// constraint hold.
    pub fn dual_certificate(&self) -> Result<DualCertificate<I::Row>> {
        let max_load = self.loads.iter().copied().fold(0.0, f64::max);
        let bound = self.stats.iteration_bound;
        if max_load > bound * (1.0 + 1e-9) + 1e-9 {
            return Err(Error::invariant(
                "column load <= log_{1+ζ}((1+ζ)/δ)",
                format!("load {max_load} vs {bound}"),
            ));
        }
        let raw: f64 = self.visited.values().map(|v| v.rhs * v.y).sum();
        if max_load == 0.0 {
            return Ok(DualCertificate {
                y: Vec::new(),
                lower_bound: 0.0,
                a_priori_bound: 0.0,
            });
        }
        // strictly inside the dual polytope despite rounding
        let scale = (1.0 - 1e-12) / max_load;
        Ok(DualCertificate {
            y: self
                .visited
                .iter()
                .map(|(r, v)| (r.clone(), v.y * scale))
                .collect(),
            lower_bound: raw * scale,
            a_priori_bound: raw / bound,
        })
    }

    /// Scales the best tracked iterate to exact feasibility.
    fn certified_primal(&mut self) -> Result<Vec<f64>> {
        let best = self
            .best
            .as_ref()
            .ok_or_else(|| Error::invariant("at least one iteration", "no iterate recorded"))?;
        let xb = best.xs.clone();
        let scaled = |alpha: f64| xb.iter().map(|v| v * alpha).collect::<Vec<_>>();
        let mut alpha = 1.0 / best.length;
        loop {
            self.stats.certification_steps += 1;
            if self.stats.certification_steps > 200 {
                return Err(Error::invariant(
                    "final scaling converges",
                    "exact certification did not settle",
                ));
            }
            match self.inst.certify(&scaled(alpha))? {
                Certificate::Feasible => return Ok(scaled(alpha)),
                Certificate::Unsupported => {
                    // the tracked length overestimates the shortest by at most 1+ζ
                    return Ok(scaled((1.0 + self.zeta) / best.length));
                }
                Certificate::Violated { row, .. } => {
                    let len = row_length(&self.inst.row(&row)?, &xb)?;
                    let next = (1.0 + 2.0 * CERTIFY_MARGIN) / len;
                    alpha = if next > alpha { next } else { alpha * (1.0 + CERTIFY_MARGIN) };
                }
            }
        }
    }

    pub fn finish(mut self) -> Result<MwOutcome<I::Row>> {
        let dual = self.dual_certificate()?;
        let x = self.certified_primal()?;
        let primal_cost = x.iter().zip(&self.costs).map(|(x, c)| x * c).sum();
        self.stats.max_column_load = self.loads.iter().copied().fold(0.0, f64::max);
        Ok(MwOutcome {
            x,
            primal_cost,
            dual,
            stats: self.stats,
        })
    }

    pub fn ln_delta(&self) -> f64 {
        self.ln_delta
    }
}

/// Runs the method until `Σ c(j) x(j) >= 1` and returns a certified-feasible
/// primal together with a scaled dual.
pub fn mw_solve<I: CoveringInstance>(inst: &I, zeta: f64) -> Result<MwOutcome<I::Row>> {
    let mut state = MwState::new(inst, zeta)?;
    while !state.finished() {
        state.step()?;
    }
    state.finish()
}

/// Covering LP with explicit dense rows and an exact (full scan) oracle.
#[derive(Clone, Debug)]
pub struct ExplicitCovering {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ExplicitCovering {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.iter().any(|r| r.len() != c.len()) {
            return Err(Error::invalid("inconsistent covering LP dimensions"));
        }
        if a.iter().flatten().any(|&v| !(v >= 0.0)) || b.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("covering LP needs A >= 0 and b > 0"));
        }
        if a.iter().any(|r| r.iter().all(|&v| v == 0.0)) {
            return Err(Error::invalid("covering LP has an empty row"));
        }
        Ok(ExplicitCovering { a, b, c })
    }

    fn lengths<'s>(&'s self, x: &'s [f64]) -> impl Iterator<Item = f64> + 's {
        self.a
            .iter()
            .zip(&self.b)
            .map(move |(r, b)| r.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() / b)
    }
}

impl CoveringInstance for ExplicitCovering {
    type Row = usize;

    fn num_columns(&self) -> usize {
        self.c.len()
    }

    fn cost(&self, column: usize) -> f64 {
        self.c[column]
    }

    fn row(&self, row: &usize) -> Result<RowData> {
        let r = self
            .a
            .get(*row)
            .ok_or_else(|| Error::invalid(format!("row {row} out of range")))?;
        Ok(RowData {
            coeffs: r.iter().copied().enumerate().filter(|&(_, v)| v > 0.0).collect(),
            rhs: self.b[*row],
        })
    }

    fn shortest_row(&self, x: &[f64], _zeta: f64, _hint: Option<&Hint<usize>>) -> Result<RowQuery<usize>> {
        let (row, length) = self
            .lengths(x)
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (i, l)| match acc {
                Some((_, bl)) if bl <= l => acc,
                _ => Some((i, l)),
            })
            .ok_or_else(|| Error::invalid("covering LP has no rows"))?;
        Ok(RowQuery {
            row,
            length,
            lower_bound: length,
            work: 1,
        })
    }

    fn certify(&self, x: &[f64]) -> Result<Certificate<usize>> {
        Ok(self
            .lengths(x)
            .enumerate()
            .find(|&(_, l)| l < 1.0 + CERTIFY_MARGIN)
            .map_or(Certificate::Feasible, |(row, length)| Certificate::Violated { row, length }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_length_examples() {
        let row = RowData {
            coeffs: vec![(0, 1.0), (1, 2.0)],
            rhs: 2.0,
        };
        assert_eq!(row_length(&row, &[1.0, 1.0]).unwrap(), 1.5);
        assert_eq!(row_length(&row, &[0.0, 0.0]).unwrap(), 0.0);
        let row = RowData {
            coeffs: vec![(0, 3.0)],
            rhs: 3.0,
        };
        assert_eq!(row_length(&row, &[2.0, 5.0]).unwrap(), 2.0);
        let bad = RowData {
            coeffs: vec![(0, 1.0)],
            rhs: 0.0,
        };
        assert!(row_length(&bad, &[1.0]).is_err());
    }

    #[test]
    fn single_column() {
        let lp = ExplicitCovering::new(vec![vec![1.0]], vec![1.0], vec![1.0]).unwrap();
        let out = mw_solve(&lp, 0.1).unwrap();
        assert!(out.primal_cost >= 1.0 - 1e-9 && out.primal_cost <= 1.4);
        assert!(out.dual.lower_bound <= 1.0 + 1e-12);
        assert!(out.dual.lower_bound <= out.primal_cost);
    }

    #[test]
    fn cheap_column_wins() {
        let lp = ExplicitCovering::new(vec![vec![1.0, 1.0]], vec![1.0], vec![1.0, 2.0]).unwrap();
        let out = mw_solve(&lp, 0.1).unwrap();
        assert!(out.primal_cost >= 1.0 - 1e-9 && out.primal_cost <= 1.4);
        assert!(out.x[0] + out.x[1] >= 1.0 - 1e-12);
    }

    #[test]
    fn preconditions() {
        let lp = ExplicitCovering::new(vec![vec![1.0]], vec![1.0], vec![1.0]).unwrap();
        assert!(mw_solve(&lp, 0.0).is_err());
        assert!(mw_solve(&lp, 0.2).is_err());
        let empty = ExplicitCovering::new(vec![], vec![], vec![]).unwrap();
        assert!(mw_solve(&empty, 0.1).is_err());
        assert!(ExplicitCovering::new(vec![vec![0.0]], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn iterate_invariants_hold() {
        let lp = ExplicitCovering::new(
            vec![vec![1.0, 0.0, 2.0], vec![0.5, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 3.0, 2.0],
        )
        .unwrap();
        let zeta = 0.1;
        let mut st = MwState::new(&lp, zeta).unwrap();
        let mut last = st.ln_cost();
        while !st.finished() {
            let before = st.x();
            st.step().unwrap();
            let after = st.x();
            for (b, a) in before.iter().zip(&after) {
                if *b > 0.0 {
                    assert!(a / b <= 1.0 + zeta + 1e-12);
                }
            }
            assert!(st.ln_cost() >= last);
            last = st.ln_cost();
        }
        for (x, c) in st.x().iter().zip(&lp.c) {
            assert!(*x < (1.0 + zeta) / c);
        }
        let out = st.finish().unwrap();
        for j in 0..3 {
            let load: f64 = out
                .dual
                .y
                .iter()
                .map(|(i, y)| lp.a[*i][j] * y)
                .sum();
            assert!(load <= lp.c[j]);
        }
        assert!(out.dual.a_priori_bound <= out.dual.lower_bound);
    }
}
