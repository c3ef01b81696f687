//! Correlation-optimal completion of partially observed rank tables.
//!
//! Each expert `j` has observed cells with fixed integer ranks and a set of
//! free items that must share the free rank slots. A free item/slot pairing is
//! an `m_j x m_j` assignment matrix `x_j`. The objective is
//!
//! ```text
//! f(x) = sum_i exp( sum_j sum_k x_j[i, k] * ln(k / (n + 1)) )
//! ```
//!
//! (observed cells contribute their fixed log rank), which equals
//! `sum_i prod_j R_j(i)` at any permutation. Relaxing `x_j` to `[0, 1]` with
//! row and column sums of one gives a convex objective over a product of
//! Birkhoff polytopes: minimization is a convex program, maximization only
//! reaches a stationary point.
//!
//! The equality constraints are moved into the objective with quadratic
//! penalties (plus multiplier estimates, so feasibility does not need an
//! unbounded penalty), and each penalized subproblem is solved by projected
//! gradient descent on the box with backtracking. Observed cells never enter
//! the problem, so they are matched exactly.

use std::collections::BTreeSet;

use log::warn;

use crate::correlation::rho_from_product_sum;
use crate::error::{Error, Result};
use crate::rank::{Direction, ObjectId, PartialRanking, RankMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeMode {
    /// Maximize multivariate rho.
    Max,
    /// Minimize multivariate rho.
    Min,
}

impl std::str::FromStr for ImputeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(ImputeMode::Max),
            "min" => Ok(ImputeMode::Min),
            other => Err(Error::invalid(format!("unknown imputation mode `{other}`"))),
        }
    }
}

/// Settings for the penalty solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Projected-gradient iterations per penalty round.
    pub max_iters: usize,
    /// Target for the largest row/column sum violation.
    pub tolerance: f64,
    pub initial_penalty: f64,
    /// Multiplier applied to the penalty weight after each of the first
    /// `penalty_rounds` rounds.
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    /// Upper limit on rounds; rounds past `penalty_rounds` only refine the
    /// multiplier estimates.
    pub max_rounds: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 20_000,
            tolerance: 1e-6,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            penalty_rounds: 5,
            max_rounds: 40,
        }
    }
}

/// An `n x d` rank table where some cells are unobserved.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRanks {
    objects: Vec<ObjectId>,
    experts: Vec<String>,
    /// Row-major, `n x d`, integer ranks in `1..=n`.
    cells: Vec<Option<u32>>,
}

impl ObservedRanks {
    pub fn new(objects: Vec<ObjectId>, experts: Vec<String>, cells: Vec<Option<u32>>) -> Result<Self> {
        let (n, d) = (objects.len(), experts.len());
        if cells.len() != n * d {
            return Err(Error::invalid(format!(
                "expected {} cells, got {}",
                n * d,
                cells.len()
            )));
        }
        if d == 0 || n == 0 {
            return Err(Error::invalid(
                "rank table needs at least one object and one expert",
            ));
        }
        for j in 0..d {
            let mut used = BTreeSet::new();
            for i in 0..n {
                if let Some(r) = cells[i * d + j] {
                    if r == 0 || r as usize > n {
                        return Err(Error::RankOutOfRange {
                            object: objects[i].to_string(),
                            rank: r as f64,
                            n,
                        });
                    }
                    if !used.insert(r) {
                        return Err(Error::DuplicateRank {
                            expert: experts[j].clone(),
                            rank: r,
                        });
                    }
                }
            }
        }
        Ok(ObservedRanks {
            objects,
            experts,
            cells,
        })
    }

    /// Converts top-k / bottom-k lists into absolute positions over
    /// `full_domain`: a top list keeps positions `1..=k`, a bottom list
    /// occupies `n-k+1..=n`. Tied positions cannot be placed and are rejected.
    pub fn from_partials(
        experts: &[PartialRanking],
        names: Vec<String>,
        full_domain: &[ObjectId],
    ) -> Result<Self> {
        if names.len() != experts.len() {
            return Err(Error::invalid("expert names and lists differ in length"));
        }
        let n = full_domain.len();
        let d = experts.len();
        let mut cells = vec![None; n * d];
        for (j, p) in experts.iter().enumerate() {
            let k = p.len();
            let offset = match p.direction() {
                Direction::Top => 0,
                Direction::Bottom => n.saturating_sub(k),
            };
            for (id, pos) in p.positions() {
                let i = full_domain.iter().position(|o| o == id).ok_or_else(|| {
                    Error::invalid(format!("ranked object `{id}` is not in the full domain"))
                })?;
                let rounded = pos.round();
                if (pos - rounded).abs() > 1e-9 {
                    return Err(Error::DuplicateRank {
                        expert: names[j].clone(),
                        rank: pos.floor() as u32,
                    });
                }
                cells[i * d + j] = Some(rounded as u32 + offset as u32);
            }
        }
        ObservedRanks::new(full_domain.to_vec(), names, cells)
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    pub fn d(&self) -> usize {
        self.experts.len()
    }

    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn experts(&self) -> &[String] {
        &self.experts
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.cells[i * self.d() + j]
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Free items and free rank slots (ascending) of expert `j`.
    pub fn free_slots(&self, j: usize) -> (Vec<usize>, Vec<u32>) {
        let n = self.n();
        let items: Vec<usize> = (0..n).filter(|&i| self.get(i, j).is_none()).collect();
        let used: BTreeSet<u32> = (0..n).filter_map(|i| self.get(i, j)).collect();
        let ranks = (1..=n as u32).filter(|r| !used.contains(r)).collect();
        (items, ranks)
    }

    /// Completes the table by giving every free cell of expert `j` the mean
    /// of that expert's free rank slots. This is the average over all
    /// integer completions, so its rho lies between the min- and
    /// max-imputed values.
    pub fn mean_fill(&self) -> Result<RankMatrix> {
        let (n, d) = (self.n(), self.d());
        let denom = n as f64 + 1.0;
        let mut values = vec![0.0; n * d];
        for j in 0..d {
            let (items, ranks) = self.free_slots(j);
            let fill = if ranks.is_empty() {
                0.0
            } else {
                ranks.iter().map(|r| *r as f64).sum::<f64>() / ranks.len() as f64 / denom
            };
            for i in 0..n {
                values[i * d + j] = self.get(i, j).map_or(fill, |r| r as f64 / denom);
            }
            debug_assert!(items.len() == ranks.len());
        }
        RankMatrix::new(self.objects.clone(), self.experts.clone(), values)
    }

    /// Completes the table with the given integer ranks for the free cells of
    /// each expert (`assignments[j][t]` is the rank of the `t`-th free item).
    pub fn complete(&self, assignments: &[Vec<u32>]) -> Result<RankMatrix> {
        let (n, d) = (self.n(), self.d());
        let denom = n as f64 + 1.0;
        let mut values = vec![0.0; n * d];
        for j in 0..d {
            let (items, _) = self.free_slots(j);
            for i in 0..n {
                if let Some(r) = self.get(i, j) {
                    values[i * d + j] = r as f64 / denom;
                }
            }
            for (t, &i) in items.iter().enumerate() {
                values[i * d + j] = assignments[j][t] as f64 / denom;
            }
        }
        RankMatrix::new(self.objects.clone(), self.experts.clone(), values)
    }
}

/// Relaxed assignment for one expert's free items.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentBlock {
    /// Row indices (into the object list) of the free items.
    pub free_items: Vec<usize>,
    /// Free rank slots, ascending.
    pub free_ranks: Vec<u32>,
    /// `m x m` row-major; entry `(t, s)` is the weight of free item `t` on
    /// rank `free_ranks[s]`.
    pub x: Vec<f64>,
}

impl AssignmentBlock {
    fn m(&self) -> usize {
        self.free_items.len()
    }

    /// Expected rank `sum_k x[t, k] * k` of each free item.
    pub fn expected_ranks(&self) -> Vec<f64> {
        let m = self.m();
        (0..m)
            .map(|t| {
                (0..m)
                    .map(|s| self.x[t * m + s] * self.free_ranks[s] as f64)
                    .sum()
            })
            .collect()
    }
}

/// Output of the relaxed solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAssignment {
    pub blocks: Vec<AssignmentBlock>,
    pub observed: ObservedRanks,
    pub mode: ImputeMode,
    /// `sum_i exp(sum_j sum_k x_ijk ln(k / (n + 1)))` at the relaxed point.
    pub objective_value: f64,
    /// Largest absolute row/column sum violation.
    pub feasibility_residual: f64,
    /// False when the residual target was not reached within the configured
    /// rounds; the best point found is still returned.
    pub converged: bool,
}

impl RelaxedAssignment {
    /// The full `n x n` indicator matrix of expert `j` (rows are objects,
    /// columns ranks `1..=n`), observed cells as one-hot rows.
    pub fn dense(&self, j: usize) -> Vec<f64> {
        let n = self.observed.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            if let Some(r) = self.observed.get(i, j) {
                out[i * n + (r as usize - 1)] = 1.0;
            }
        }
        let b = &self.blocks[j];
        let m = b.m();
        for (t, &i) in b.free_items.iter().enumerate() {
            for (s, &r) in b.free_ranks.iter().enumerate() {
                out[i * n + (r as usize - 1)] = b.x[t * m + s];
            }
        }
        out
    }

    /// Multivariate rho evaluated at the relaxed point.
    pub fn relaxed_rho(&self) -> Result<f64> {
        rho_from_product_sum(self.objective_value, self.observed.n(), self.observed.d())
    }
}

struct Problem {
    n: usize,
    /// fixed log-rank sum per object from observed cells
    base: Vec<f64>,
    blocks: Vec<BlockLayout>,
    len: usize,
}

struct BlockLayout {
    items: Vec<usize>,
    ranks: Vec<u32>,
    log_ranks: Vec<f64>,
    offset: usize,
}

impl BlockLayout {
    fn m(&self) -> usize {
        self.items.len()
    }
}

impl Problem {
    fn new(obs: &ObservedRanks) -> Self {
        let (n, d) = (obs.n(), obs.d());
        let denom = n as f64 + 1.0;
        let mut base = vec![0.0; n];
        for (i, b) in base.iter_mut().enumerate() {
            for j in 0..d {
                if let Some(r) = obs.get(i, j) {
                    *b += (r as f64 / denom).ln();
                }
            }
        }
        let mut offset = 0;
        let blocks = (0..d)
            .map(|j| {
                let (items, ranks) = obs.free_slots(j);
                let log_ranks = ranks.iter().map(|r| (*r as f64 / denom).ln()).collect();
                let layout = BlockLayout {
                    offset,
                    items,
                    ranks,
                    log_ranks,
                };
                offset += layout.m() * layout.m();
                layout
            })
            .collect();
        Problem {
            n,
            base,
            blocks,
            len: offset,
        }
    }

    /// Per-object exponent `s_i`.
    fn exponents(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.base.clone();
        for b in &self.blocks {
            let m = b.m();
            for (t, &i) in b.items.iter().enumerate() {
                let row = &x[b.offset + t * m..b.offset + (t + 1) * m];
                s[i] += row.iter().zip(&b.log_ranks).map(|(a, l)| a * l).sum::<f64>();
            }
        }
        s
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.exponents(x).iter().map(|v| v.exp()).sum()
    }

    /// Row and column sum violations, laid out block by block as
    /// `[rows(m), cols(m)]`.
    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let mut c = 0;
        for b in &self.blocks {
            let m = b.m();
            let xb = &x[b.offset..b.offset + m * m];
            for t in 0..m {
                out[c + t] = xb[t * m..(t + 1) * m].iter().sum::<f64>() - 1.0;
            }
            for s in 0..m {
                out[c + m + s] = (0..m).map(|t| xb[t * m + s]).sum::<f64>() - 1.0;
            }
            c += 2 * m;
        }
    }

    fn n_constraints(&self) -> usize {
        self.blocks.iter().map(|b| 2 * b.m()).sum()
    }
}

/// Penalized objective and its gradient.
struct Penalized<'a> {
    problem: &'a Problem,
    sign: f64,
    mu: f64,
    lambda: &'a [f64],
    scratch: Vec<f64>,
}

impl Penalized<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        let p = self.problem;
        let f = p.objective(x) / p.n as f64;
        p.residuals(x, &mut self.scratch);
        let pen: f64 = self
            .scratch
            .iter()
            .zip(self.lambda)
            .map(|(c, l)| l * c + 0.5 * self.mu * c * c)
            .sum();
        self.sign * f + pen
    }

    fn value_and_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.problem;
        let s = p.exponents(x);
        let terms: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let nf = p.n as f64;
        let f = terms.iter().sum::<f64>() / nf;
        p.residuals(x, &mut self.scratch);
        let mut pen = 0.0;
        let mut c = 0;
        for b in &p.blocks {
            let m = b.m();
            for t in 0..m {
                let wt = self.sign * terms[b.items[t]] / nf;
                let rr = self.lambda[c + t] + self.mu * self.scratch[c + t];
                for s in 0..m {
                    let cc = self.lambda[c + m + s] + self.mu * self.scratch[c + m + s];
                    grad[b.offset + t * m + s] = wt * b.log_ranks[s] + rr + cc;
                }
            }
            c += 2 * m;
        }
        for (cv, l) in self.scratch.iter().zip(self.lambda) {
            pen += l * cv + 0.5 * self.mu * cv * cv;
        }
        self.sign * f + pen
    }
}

fn project_box(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Spectral projected gradient on the box `[0, 1]`: Barzilai-Borwein step
/// lengths with a nonmonotone Armijo search over the last few objective
/// values. Returns the final stationarity measure
/// `|| P(x - grad) - x ||_inf`.
fn solve_box(obj: &mut Penalized<'_>, x: &mut [f64], max_iters: usize, tol: f64) -> f64 {
    const MEMORY: usize = 10;
    const GAMMA: f64 = 1e-4;
    let len = x.len();
    let mut grad = vec![0.0; len];
    let mut new_grad = vec![0.0; len];
    let mut dir = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut fx = obj.value_and_grad(x, &mut grad);
    let mut history = std::collections::VecDeque::with_capacity(MEMORY);
    history.push_back(fx);
    let stationarity = |x: &[f64], g: &[f64]| {
        x.iter()
            .zip(g)
            .map(|(a, b)| (project_box(a - b) - a).abs())
            .fold(0.0, f64::max)
    };
    let mut pg = stationarity(x, &grad);
    let gmax = grad.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-12);
    let mut alpha = (1.0 / gmax).clamp(1e-12, 1e12);
    for _ in 0..max_iters {
        if pg <= tol {
            break;
        }
        let mut slope = 0.0;
        for i in 0..len {
            dir[i] = project_box(x[i] - alpha * grad[i]) - x[i];
            slope += grad[i] * dir[i];
        }
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut f_trial;
        loop {
            for i in 0..len {
                trial[i] = x[i] + lambda * dir[i];
            }
            f_trial = obj.value(&trial);
            if f_trial <= f_ref + GAMMA * lambda * slope || lambda < 1e-12 {
                break;
            }
            // safeguarded quadratic interpolation
            let denom = 2.0 * (f_trial - fx - lambda * slope);
            let next = if denom > 0.0 {
                -slope * lambda * lambda / denom
            } else {
                lambda / 2.0
            };
            lambda = next.clamp(0.1 * lambda, 0.5 * lambda);
        }
        let f_new = obj.value_and_grad(&trial, &mut new_grad);
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..len {
            let s = trial[i] - x[i];
            ss += s * s;
            sy += s * (new_grad[i] - grad[i]);
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            1e12
        };
        x.copy_from_slice(&trial);
        std::mem::swap(&mut grad, &mut new_grad);
        fx = f_new;
        if history.len() == MEMORY {
            history.pop_front();
        }
        history.push_back(fx);
        pg = stationarity(x, &grad);
        if ss == 0.0 {
            break;
        }
    }
    pg
}

/// Rounds a relaxed block: free items sorted by expected rank (ties by object
/// id) take the free slots in ascending order.
fn round_block(block: &AssignmentBlock, objects: &[ObjectId]) -> Vec<u32> {
    let scores = block.expected_ranks();
    let mut order: Vec<usize> = (0..block.m()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .total_cmp(&scores[b])
            .then_with(|| objects[block.free_items[a]].cmp(&objects[block.free_items[b]]))
    });
    let mut out = vec![0; block.m()];
    for (slot, &t) in order.iter().enumerate() {
        out[t] = block.free_ranks[slot];
    }
    out
}

/// Greedy integer completion followed by pairwise swaps within each expert
/// until no swap improves the objective. Returns the vertex as a relaxed
/// point.
fn swap_polished_vertex(problem: &Problem, sign: f64) -> Vec<f64> {
    // perm[j][t] = slot index of free item t in block j
    let mean_log = |b: &BlockLayout| b.log_ranks.iter().sum::<f64>() / b.m().max(1) as f64;
    let mut s = problem.base.clone();
    for b in &problem.blocks {
        let fill = mean_log(b);
        for &i in &b.items {
            s[i] += fill;
        }
    }
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(problem.blocks.len());
    for b in &problem.blocks {
        let fill = mean_log(b);
        let mut order: Vec<usize> = (0..b.m()).collect();
        // max: objects already near the top take the top free slots
        order.sort_by(|&a, &c| {
            let (sa, sc) = (s[b.items[a]], s[b.items[c]]);
            if sign < 0.0 {
                sa.total_cmp(&sc)
            } else {
                sc.total_cmp(&sa)
            }
            .then(a.cmp(&c))
        });
        let mut perm = vec![0; b.m()];
        for (slot, &t) in order.iter().enumerate() {
            perm[t] = slot;
            s[b.items[t]] += b.log_ranks[slot] - fill;
        }
        perms.push(perm);
    }
    // objective is sign * sum exp(s); lower is better
    let mut improved = true;
    while improved {
        improved = false;
        for (b, perm) in problem.blocks.iter().zip(perms.iter_mut()) {
            for t in 0..b.m() {
                for u in t + 1..b.m() {
                    let (it, iu) = (b.items[t], b.items[u]);
                    let diff = b.log_ranks[perm[u]] - b.log_ranks[perm[t]];
                    let before = s[it].exp() + s[iu].exp();
                    let after = (s[it] + diff).exp() + (s[iu] - diff).exp();
                    if sign * (after - before) < -1e-12 * before {
                        s[it] += diff;
                        s[iu] -= diff;
                        perm.swap(t, u);
                        improved = true;
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; problem.len];
    for (b, perm) in problem.blocks.iter().zip(&perms) {
        for (t, &slot) in perm.iter().enumerate() {
            x[b.offset + t * b.m() + slot] = 1.0;
        }
    }
    x
}

struct Run {
    x: Vec<f64>,
    residual: f64,
    converged: bool,
}

/// Augmented Lagrangian rounds from the starting point `x`.
fn run_penalty(problem: &Problem, sign: f64, mut x: Vec<f64>, cfg: &OptimizerConfig) -> Run {
    let nc = problem.n_constraints();
    let mut lambda = vec![0.0; nc];
    let mut resid = vec![0.0; nc];
    let mut mu = cfg.initial_penalty;
    let mut residual = 0.0;
    let mut prev_obj = None;
    for round in 0..cfg.max_rounds.max(1) {
        let mut pen = Penalized {
            problem,
            sign,
            mu,
            lambda: &lambda,
            scratch: vec![0.0; nc],
        };
        let pg = solve_box(&mut pen, &mut x, cfg.max_iters, cfg.tolerance * 1e-2);
        problem.residuals(&x, &mut resid);
        residual = resid.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        for (l, c) in lambda.iter_mut().zip(&resid) {
            *l += mu * c;
        }
        // a feasible point whose objective no longer moves between rounds
        // counts as converged even when the ill-conditioned inner problem
        // keeps its projected gradient above the tolerance
        let obj = problem.objective(&x);
        let stalled = prev_obj.is_some_and(|p: f64| (obj - p).abs() <= cfg.tolerance * obj.abs().max(1.0));
        prev_obj = (residual <= cfg.tolerance).then_some(obj);
        if residual <= cfg.tolerance && (pg <= cfg.tolerance || stalled) {
            return Run {
                x,
                residual,
                converged: true,
            };
        }
        if round + 1 < cfg.penalty_rounds {
            mu *= cfg.penalty_growth;
        }
    }
    Run {
        x,
        residual,
        converged: false,
    }
}

/// Solves the relaxed max/min imputation program and rounds it to a complete
/// rank table.
///
/// The program is started twice: from the barycenter of every assignment
/// block and from a swap-polished integer completion. The feasible run with
/// the better objective wins. For max mode the result is still only a
/// stationary point.
pub fn impute_optimal(
    observed: &ObservedRanks,
    mode: ImputeMode,
    cfg: &OptimizerConfig,
) -> Result<(RankMatrix, RelaxedAssignment)> {
    let problem = Problem::new(observed);
    let sign = match mode {
        ImputeMode::Min => 1.0,
        ImputeMode::Max => -1.0,
    };
    let run = if problem.len == 0 {
        Run {
            x: Vec::new(),
            residual: 0.0,
            converged: true,
        }
    } else {
        let mut center = vec![0.0; problem.len];
        for b in &problem.blocks {
            let m = b.m();
            center[b.offset..b.offset + m * m].fill(1.0 / m as f64);
        }
        let starts = [center, swap_polished_vertex(&problem, sign)];
        let runs: Vec<Run> = starts
            .into_iter()
            .map(|x0| run_penalty(&problem, sign, x0, cfg))
            .collect();
        let score = |r: &Run| (!r.converged, sign * problem.objective(&r.x));
        runs.into_iter()
            .min_by(|a, b| {
                let (fa, va) = score(a);
                let (fb, vb) = score(b);
                fa.cmp(&fb).then(va.total_cmp(&vb))
            })
            .expect("two starts")
    };
    if !run.converged {
        warn!("penalty solver stopped with residual {:.3e}", run.residual);
    }

    let x = run.x;
    let blocks: Vec<AssignmentBlock> = problem
        .blocks
        .iter()
        .map(|b| AssignmentBlock {
            free_items: b.items.clone(),
            free_ranks: b.ranks.clone(),
            x: x[b.offset..b.offset + b.m() * b.m()].to_vec(),
        })
        .collect();
    let assignments: Vec<Vec<u32>> = blocks
        .iter()
        .map(|b| round_block(b, observed.objects()))
        .collect();
    let matrix = observed.complete(&assignments)?;
    let relaxed = RelaxedAssignment {
        blocks,
        observed: observed.clone(),
        mode,
        objective_value: problem.objective(&x),
        feasibility_residual: run.residual,
        converged: run.converged,
    };
    Ok((matrix, relaxed))
}

/// [`impute_optimal`] on top-k / bottom-k lists over `full_domain`.
pub fn impute_optimal_partials(
    experts: &[PartialRanking],
    names: Vec<String>,
    full_domain: &[ObjectId],
    mode: ImputeMode,
    cfg: &OptimizerConfig,
) -> Result<(RankMatrix, RelaxedAssignment)> {
    let observed = ObservedRanks::from_partials(experts, names, full_domain)?;
    impute_optimal(&observed, mode, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::spearman_multivariate;

    fn table(cols: &[Vec<Option<u32>>]) -> ObservedRanks {
        let d = cols.len();
        let n = cols[0].len();
        let mut cells = vec![None; n * d];
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                cells[i * d + j] = *v;
            }
        }
        ObservedRanks::new(
            (0..n).map(|i| ObjectId::new(format!("o{i}"))).collect(),
            (0..d).map(|j| format!("e{j}")).collect(),
            cells,
        )
        .unwrap()
    }

    #[test]
    fn complete_input_is_returned_unchanged() {
        let obs = table(&[vec![Some(1), Some(2), Some(3)], vec![Some(2), Some(3), Some(1)]]);
        let (m, relaxed) = impute_optimal(&obs, ImputeMode::Max, &OptimizerConfig::default()).unwrap();
        assert_eq!(m.column(0), vec![0.25, 0.5, 0.75]);
        assert_eq!(m.column(1), vec![0.5, 0.75, 0.25]);
        let direct: f64 = (0..3).map(|i| m.row(i).iter().product::<f64>()).sum();
        assert!((relaxed.objective_value - direct).abs() < 1e-15);
        assert!(relaxed.converged);
        assert_eq!(relaxed.feasibility_residual, 0.0);
    }

    #[test]
    fn fully_missing_expert_follows_the_other() {
        let obs = table(&[vec![Some(1), Some(2), Some(3)], vec![None, None, None]]);
        let cfg = OptimizerConfig::default();
        let (m, r) = impute_optimal(&obs, ImputeMode::Max, &cfg).unwrap();
        assert_eq!(m.column(1), vec![0.25, 0.5, 0.75]);
        assert!(r.feasibility_residual <= 1e-6);
        let (m, r) = impute_optimal(&obs, ImputeMode::Min, &cfg).unwrap();
        assert_eq!(m.column(1), vec![0.75, 0.5, 0.25]);
        assert!(r.feasibility_residual <= 1e-6);
        let rho = spearman_multivariate(&m).unwrap().rho;
        assert!((rho + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_duplicate_ranks() {
        let err = ObservedRanks::new(
            vec!["a".into(), "b".into()],
            vec!["e".into()],
            vec![Some(1), Some(1)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateRank { rank: 1, .. }));
        assert!(ObservedRanks::new(vec!["a".into()], vec!["e".into()], vec![Some(2)]).is_err());
    }

    #[test]
    fn dense_rows_and_columns_sum_to_one() {
        let obs = table(&[
            vec![Some(1), None, None, Some(4)],
            vec![None, Some(2), None, None],
            vec![Some(3), None, None, None],
        ]);
        let (_, r) = impute_optimal(&obs, ImputeMode::Min, &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        for j in 0..3 {
            let x = r.dense(j);
            for i in 0..4 {
                let row: f64 = x[i * 4..(i + 1) * 4].iter().sum();
                let col: f64 = (0..4).map(|t| x[t * 4 + i]).sum();
                assert!((row - 1.0).abs() <= 1e-6 && (col - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn from_partials_places_bottom_lists_at_the_end() {
        let dom: Vec<ObjectId> = ["a", "b", "c", "d"].iter().map(|s| (*s).into()).collect();
        let top = PartialRanking::from_positions([("a", 1.0), ("b", 2.0)], Direction::Top).unwrap();
        let bottom = PartialRanking::from_positions([("c", 1.0), ("d", 2.0)], Direction::Bottom).unwrap();
        let obs = ObservedRanks::from_partials(&[top, bottom], vec!["t".into(), "b".into()], &dom).unwrap();
        assert_eq!(obs.get(0, 0), Some(1));
        assert_eq!(obs.get(1, 0), Some(2));
        assert_eq!(obs.get(2, 1), Some(3));
        assert_eq!(obs.get(3, 1), Some(4));
        assert_eq!(obs.missing_count(), 4);

        let tied = PartialRanking::from_positions([("a", 1.0), ("b", 1.0)], Direction::Top).unwrap();
        assert!(ObservedRanks::from_partials(&[tied], vec!["t".into()], &dom).is_err());
    }
}
