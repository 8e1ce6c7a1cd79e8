//! Iterative rounding: solve a residual LP, fix every edge with `x(e) >= 1/2`
//! to `⌈x(e)⌉`, repeat until the integral part covers `f`.
//!
//! Each residual LP is solved once per free edge `g` with the extra row
//! `x(g) >= 1/2`; some extreme point of the residual LP has such an edge, so
//! the cheapest pinned solution costs at most the residual optimum while
//! guaranteeing progress.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{mw_solve, MwStats};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeWeights, Graph};
use crate::numeric::{Rational, Weight};
use crate::requirements::{find_violated_set, ProperFunction};
use crate::row_oracle::ResidualInstance;

/// How the per-iteration LP accuracy `ζ_k` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ZetaPolicy {
    /// `ζ = ln(1+ε) / |E|` in every iteration.
    Uniform,
    /// Spends the unused part of the `(1+ε)` budget: `ζ_k` is what is left of
    /// `ln(1+ε)` after the certified ratios of earlier iterations, divided by
    /// the number of free edges.
    Budgeted,
    /// A fixed `ζ`; the final guarantee is only the a posteriori ratio.
    Fixed(f64),
}

/// Which pinned LPs are solved in each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PinPolicy {
    /// Every free edge, keeping the cheapest.
    All,
    /// Solve the unpinned LP first; use it directly if it already has an edge
    /// at `1/2` or more, otherwise try edges by decreasing `x(e)` and stop at
    /// the first one within `1+ζ_k` of the unpinned dual bound.
    Shortcut,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveConfig {
    pub epsilon: f64,
    /// Threads for the per-edge LPs; 0 uses rayon's default. Never changes
    /// the result, so it is left out of reports.
    #[serde(skip)]
    pub jobs: usize,
    /// Recheck each LP solution's feasibility in exact rational arithmetic.
    pub exact_certification: bool,
    pub zeta: ZetaPolicy,
    pub pinning: PinPolicy,
}

impl SolveConfig {
    pub fn new(epsilon: f64) -> Self {
        SolveConfig {
            epsilon,
            jobs: 1,
            exact_certification: false,
            zeta: ZetaPolicy::Uniform,
            pinning: PinPolicy::All,
        }
    }

    /// Coarse per-LP accuracy and the pinning shortcut: no a priori
    /// guarantee, but the reported ratio is still certified.
    pub fn fast(epsilon: f64) -> Self {
        SolveConfig {
            zeta: ZetaPolicy::Fixed(FAST_ZETA),
            pinning: PinPolicy::Shortcut,
            ..Self::new(epsilon)
        }
    }
}

pub const FAST_ZETA: f64 = 0.1;

/// A certified near-optimal solution of one residual LP.
#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Values on the free edges (zero elsewhere).
    pub x: EdgeWeights<f64>,
    pub cost: f64,
    /// Lower bound on the residual LP optimum from a scaled dual.
    pub dual_bound: f64,
    /// The `ζ` the multiplicative-weights run finally used.
    pub zeta: f64,
    pub runs: u32,
    pub stats: MwStats,
    pub gh_builds: u64,
}

impl LpSolution {
    pub fn certified_ratio(&self) -> f64 {
        ratio(self.cost, self.dual_bound)
    }
}

fn ratio(cost: f64, bound: f64) -> f64 {
    if cost <= 0.0 {
        1.0
    } else if bound <= 0.0 {
        f64::INFINITY
    } else {
        cost / bound
    }
}

/// Largest `ζ` handed to the covering solver.
pub const MAX_MW_ZETA: f64 = 0.15;

/// Solves `res` to within `1 + target` of its optimum, as certified by the
/// returned dual bound.
///
/// Starts at `ζ = min(target, 0.15)` and halves while the certified ratio
/// misses the target; below `target / 4` the a priori analysis already
/// guarantees it, so a miss there is reported as an invariant violation.
pub fn solve_lp<F: ProperFunction + ?Sized>(
    res: &ResidualInstance<'_, F>,
    target: f64,
    exact: bool,
) -> Result<LpSolution> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::invalid(format!("LP accuracy {target} must be positive")));
    }
    let mut zeta = target.min(MAX_MW_ZETA);
    let mut runs = 0;
    loop {
        runs += 1;
        let before = res.gh_builds();
        let out = mw_solve(res, zeta)?;
        let x = res.edge_values(&out.x);
        if exact {
            let xr = x.map(|v| Rational::from_f64(*v));
            if let Some((row, deficit)) = res.certify_feasibility(&xr)? {
                return Err(Error::invariant(
                    "LP solutions are feasible in exact arithmetic",
                    format!("row {row:?} short by {deficit}"),
                ));
            }
        }
        let sol = LpSolution {
            x,
            cost: out.primal_cost,
            dual_bound: out.dual.lower_bound,
            zeta,
            runs,
            stats: out.stats,
            gh_builds: res.gh_builds() - before,
        };
        if sol.certified_ratio() <= 1.0 + target {
            return Ok(sol);
        }
        if zeta <= target / 4.0 {
            return Err(Error::invariant(
                "certified LP ratio <= 1 + 4ζ",
                format!("ratio {} at ζ = {zeta}", sol.certified_ratio()),
            ));
        }
        zeta /= 2.0;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundedEdge {
    pub edge: EdgeId,
    pub x: f64,
    pub z: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationAudit {
    pub k: usize,
    pub zeta: f64,
    /// The pinned edge of the chosen LP (`None` for an unpinned solution).
    pub pinned: Option<EdgeId>,
    pub lp_cost: f64,
    /// Lower bound on this iteration's residual LP optimum.
    pub lp_lower_bound: f64,
    pub certified_ratio: f64,
    pub rounded: Vec<RoundedEdge>,
    /// Free edges dropped at `x(e) = 0`.
    pub dropped: Vec<EdgeId>,
    pub free_edges: usize,
    pub lps_solved: usize,
    pub mw_iterations: u64,
    pub oracle_calls: u64,
    pub gh_builds: u64,
    /// Largest residual right-hand side assumed by the oracle.
    pub rhs_cap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    /// Multiplicity of each edge id.
    pub z: Vec<u64>,
    pub cost: f64,
    /// Lower bound on the LP relaxation optimum (from the first iteration).
    pub lp_lower_bound: f64,
    pub certified_ratio: f64,
    pub iterations: usize,
    pub gh_builds: u64,
    pub mw_iterations: u64,
    pub oracle_calls: u64,
    pub zeta_uniform: f64,
    pub audit: Vec<IterationAudit>,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

/// `true` iff `z(δ(S)) >= f(S)` for every cut.
pub fn verify_integral<F: ProperFunction + ?Sized>(
    graph: &Graph,
    f: &F,
    z: &EdgeWeights<u64>,
) -> Result<bool> {
    Ok(find_violated_set(graph, f, z)?.is_none())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {jobs} worker threads: {e}")))
}

struct Choice {
    pinned: Option<EdgeId>,
    sol: LpSolution,
    lower_bound: f64,
    lps: usize,
    mw_iterations: u64,
    oracle_calls: u64,
    gh_builds: u64,
}

struct Residual<'a, F: ?Sized> {
    graph: &'a Graph,
    f: &'a F,
    fixed: &'a [bool],
    z: &'a EdgeWeights<u64>,
    capped: bool,
    exact: bool,
}

impl<F: ProperFunction + ?Sized> Residual<'_, F> {
    fn solve(&self, pinned: Option<EdgeId>, zeta: f64) -> Result<LpSolution> {
        let mut res = ResidualInstance::new(self.graph, self.f, self.fixed.to_vec(), self.z.clone(), pinned)?;
        if self.capped {
            res = res.with_rounding_residual_cap();
        }
        solve_lp(&res, zeta, self.exact)
    }

    fn all_pins(&self, free: &[EdgeId], zeta: f64, pool: &rayon::ThreadPool) -> Result<Choice> {
        let sols: Vec<Result<LpSolution>> =
            pool.install(|| free.par_iter().map(|&g| self.solve(Some(g), zeta)).collect());
        let mut best: Option<(EdgeId, LpSolution)> = None;
        let mut lower = f64::INFINITY;
        let (mut iters, mut calls, mut builds) = (0, 0, 0);
        for (&g, sol) in free.iter().zip(sols) {
            let sol = sol?;
            lower = lower.min(sol.dual_bound);
            iters += sol.stats.iterations;
            calls += sol.stats.oracle_calls;
            builds += sol.gh_builds;
            // `free` is sorted, so ties keep the smallest edge id
            if best.as_ref().is_none_or(|(_, b)| sol.cost < b.cost) {
                best = Some((g, sol));
            }
        }
        let (g, sol) = best.ok_or_else(|| Error::invariant("a free edge remains", "no free edges"))?;
        Ok(Choice {
            pinned: Some(g),
            sol,
            lower_bound: lower,
            lps: free.len(),
            mw_iterations: iters,
            oracle_calls: calls,
            gh_builds: builds,
        })
    }

    fn shortcut(&self, free: &[EdgeId], zeta: f64, pool: &rayon::ThreadPool) -> Result<Choice> {
        let base = self.solve(None, zeta)?;
        let lower = base.dual_bound;
        let mut iters = base.stats.iterations;
        let mut calls = base.stats.oracle_calls;
        let mut builds = base.gh_builds;
        if free.iter().any(|&e| base.x[e] >= 0.5) {
            return Ok(Choice {
                pinned: None,
                lower_bound: lower,
                lps: 1,
                mw_iterations: iters,
                oracle_calls: calls,
                gh_builds: builds,
                sol: base,
            });
        }
        let mut order = free.to_vec();
        order.sort_by(|&a, &b| base.x[b].total_cmp(&base.x[a]).then(a.cmp(&b)));
        let accept = (1.0 + zeta) * lower;
        let width = pool.current_num_threads().max(1);
        let mut best: Option<(EdgeId, LpSolution)> = None;
        let mut lps = 1;
        for chunk in order.chunks(width) {
            let sols: Vec<Result<LpSolution>> =
                pool.install(|| chunk.par_iter().map(|&g| self.solve(Some(g), zeta)).collect());
            lps += chunk.len();
            for (&g, sol) in chunk.iter().zip(sols) {
                let sol = sol?;
                iters += sol.stats.iterations;
                calls += sol.stats.oracle_calls;
                builds += sol.gh_builds;
                let better = match &best {
                    None => true,
                    Some((bg, b)) => sol.cost < b.cost || (sol.cost == b.cost && g < *bg),
                };
                if better {
                    best = Some((g, sol));
                }
            }
            if best.as_ref().is_some_and(|(_, b)| b.cost <= accept) {
                break;
            }
        }
        let (g, sol) = best.ok_or_else(|| Error::invariant("a free edge remains", "no free edges"))?;
        Ok(Choice {
            pinned: Some(g),
            sol,
            lower_bound: lower,
            lps,
            mw_iterations: iters,
            oracle_calls: calls,
            gh_builds: builds,
        })
    }
}

/// Rounds `x` up to an integer, absorbing floating-point noise just above one.
fn round_up(x: f64) -> u64 {
    ((x - 1e-9).ceil() as u64).max(1)
}

/// Rejects instances that no multiplicity vector can satisfy: some cut with
/// positive requirement has no edges.
fn check_satisfiable<F: ProperFunction + ?Sized>(graph: &Graph, f: &F) -> Result<()> {
    let full = EdgeWeights::uniform(graph.id_bound(), f.max_value());
    match find_violated_set(graph, f, &full)? {
        None => Ok(()),
        Some(cut) => Err(Error::invalid(format!(
            "infeasible instance: no edge leaves vertex set {:?}, which has a positive requirement",
            cut.vertices().collect::<Vec<_>>()
        ))),
    }
}

/// Iterative rounding with the per-iteration residual LPs solved by
/// multiplicative weights. The result covers `f` and, for the uniform `ζ`
/// policy, costs at most `2(1+ε)` times the LP optimum.
pub fn solve<F: ProperFunction + ?Sized>(graph: &Graph, f: &F, config: &SolveConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let eps = config.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("epsilon {eps} must be positive")));
    }
    if f.ground_size() != graph.num_vertices() {
        return Err(Error::invalid("requirement function and graph disagree on |V|"));
    }
    if let ZetaPolicy::Fixed(z) = config.zeta {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::invalid(format!("fixed zeta {z} must be positive")));
        }
    }
    check_satisfiable(graph, f)?;
    let pool = thread_pool(config.jobs)?;
    let m = graph.num_edges();
    let id_bound = graph.id_bound();
    let mut fixed = vec![false; id_bound];
    let mut z = EdgeWeights::uniform(id_bound, 0u64);
    // zero-cost edges are bought at full multiplicity up front
    for e in graph.edges().iter().filter(|e| e.cost == 0.0) {
        fixed[e.id] = true;
        z.set(e.id, f.max_value());
    }
    let zeta_uniform = eps.ln_1p() / m.max(1) as f64;
    let mut spent = 0.0f64;
    let mut audit = Vec::new();
    let mut lp_lower_bound = 0.0;
    let (mut gh_total, mut mw_total, mut calls_total) = (0u64, 0u64, 0u64);

    while find_violated_set(graph, f, &z)?.is_some() {
        let k = audit.len() + 1;
        if k > m {
            return Err(Error::invariant(
                "at most |E| rounding iterations",
                format!("iteration {k} with |E| = {m}"),
            ));
        }
        let free: Vec<EdgeId> = graph.edge_ids().filter(|&e| !fixed[e]).collect();
        if free.is_empty() {
            return Err(Error::invariant("a violated set has a free edge", "every edge is fixed"));
        }
        let zeta = match config.zeta {
            ZetaPolicy::Uniform => zeta_uniform,
            ZetaPolicy::Fixed(z) => z,
            ZetaPolicy::Budgeted => ((eps.ln_1p() - spent) / free.len() as f64).max(zeta_uniform),
        };
        let residual = Residual {
            graph,
            f,
            fixed: &fixed,
            z: &z,
            capped: k >= 2,
            exact: config.exact_certification,
        };
        let choice = match config.pinning {
            PinPolicy::All => residual.all_pins(&free, zeta, &pool)?,
            PinPolicy::Shortcut => residual.shortcut(&free, zeta, &pool)?,
        };
        let rhs_cap = if k >= 2 {
            m as f64 / 2.0
        } else {
            (m as f64 / 2.0).max(f.max_value() as f64)
        };
        if k == 1 {
            lp_lower_bound = choice.lower_bound;
        }
        let certified = ratio(choice.sol.cost, choice.lower_bound);
        spent += certified.max(1.0).ln();

        let mut rounded = Vec::new();
        let mut dropped = Vec::new();
        for &e in &free {
            let x = choice.sol.x[e];
            if x >= 0.5 {
                let ze = round_up(x);
                fixed[e] = true;
                z.set(e, ze);
                rounded.push(RoundedEdge { edge: e, x, z: ze });
            } else if x == 0.0 {
                fixed[e] = true;
                dropped.push(e);
            }
        }
        if rounded.is_empty() && dropped.is_empty() {
            return Err(Error::invariant(
                "each iteration fixes an edge",
                format!("iteration {k} left every edge free"),
            ));
        }
        gh_total += choice.gh_builds;
        mw_total += choice.mw_iterations;
        calls_total += choice.oracle_calls;
        audit.push(IterationAudit {
            k,
            zeta,
            pinned: choice.pinned,
            lp_cost: choice.sol.cost,
            lp_lower_bound: choice.lower_bound,
            certified_ratio: certified,
            rounded,
            dropped,
            free_edges: free.len(),
            lps_solved: choice.lps,
            mw_iterations: choice.mw_iterations,
            oracle_calls: choice.oracle_calls,
            gh_builds: choice.gh_builds,
            rhs_cap,
        });
    }

    let cost = graph.total_cost(&z);
    Ok(SolveReport {
        z: z.values().to_vec(),
        cost,
        lp_lower_bound,
        certified_ratio: ratio(cost, lp_lower_bound),
        iterations: audit.len(),
        gh_builds: gh_total,
        mw_iterations: mw_total,
        oracle_calls: calls_total,
        zeta_uniform,
        audit,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// The first residual LP (no pinned edge), solved to within `1 + accuracy`.
pub fn solve_relaxation<F: ProperFunction + ?Sized>(
    graph: &Graph,
    f: &F,
    accuracy: f64,
    exact: bool,
) -> Result<LpSolution> {
    if f.ground_size() != graph.num_vertices() {
        return Err(Error::invalid("requirement function and graph disagree on |V|"));
    }
    check_satisfiable(graph, f)?;
    let mut fixed = vec![false; graph.id_bound()];
    let mut z = EdgeWeights::uniform(graph.id_bound(), 0u64);
    for e in graph.edges().iter().filter(|e| e.cost == 0.0) {
        fixed[e.id] = true;
        z.set(e.id, f.max_value());
    }
    let res = ResidualInstance::new(graph, f, fixed, z, None)?;
    solve_lp(&res, accuracy, exact)
}
