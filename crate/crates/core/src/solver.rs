//! Minimization of the merit function with ω–τ continuation.
//!
//! Each stage runs damped Newton steps on `φ`. The step solves the
//! quasi-definite system
//!
//! ```text
//! [ H + δI   Jᵀ  ] [dx]   [ -∇(F + τΓ) ]
//! [ J       -ωI  ] [μ ] = [ -C         ]
//! ```
//!
//! which is equivalent to `(H + δI + JᵀJ/ω) dx = -∇φ` but avoids forming
//! the `1/ω` block. Unknowns are interleaved so the matrix stays banded.

use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::fem::{FESpace, Trajectory};
use crate::problem::{feasibility_residual, DynamicProblem};
use crate::transcription::{push_trajectory_interior, Assembly, HessianMode, PenaltyBarrierParams, TranscribedNlp};

/// Solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub omega_target: f64,
    pub tau_target: f64,
    pub continuation_start: f64,
    pub continuation_factor: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub fraction_to_boundary: f64,
    pub regularization_floor: f64,
    pub hessian: HessianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            omega_target: 1e-10,
            tau_target: 1e-10,
            continuation_start: 1e-2,
            continuation_factor: 10.0,
            grad_tol: 1e-8,
            max_iters: 200,
            fraction_to_boundary: 0.995,
            regularization_floor: 1e-12,
            hessian: HessianMode::GaussNewton,
        }
    }
}

/// Relative Newton decrement below which a stage counts as converged.
const DECREMENT_TOL: f64 = 1e-14;
/// Relative decrement accepted when the line search can no longer make progress.
const STALL_DECREMENT_TOL: f64 = 1e-9;
const ARMIJO: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const DUAL_SAFEGUARD: f64 = 1e10;
const MIN_STEP: f64 = 1e-12;
const MAX_SHIFT_TRIES: usize = 40;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("omega_target", self.omega_target),
            ("tau_target", self.tau_target),
            ("continuation_start", self.continuation_start),
            ("grad_tol", self.grad_tol),
            ("regularization_floor", self.regularization_floor),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.continuation_factor > 1.0) {
            return Err(Error::Config("continuation_factor must exceed 1".into()));
        }
        if !(self.fraction_to_boundary > 0.0 && self.fraction_to_boundary < 1.0) {
            return Err(Error::Config("fraction_to_boundary must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        PenaltyBarrierParams::new(self.omega_target, self.tau_target).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The `(ω, τ)` stages, each reduced by `continuation_factor` until the targets.
    pub fn stages(&self) -> Vec<PenaltyBarrierParams> {
        let seq = |target: f64| {
            let mut v = vec![];
            let mut w = self.continuation_start.min(0.5);
            while w > target * (1.0 + 1e-9) {
                v.push(w);
                w /= self.continuation_factor;
            }
            v.push(target);
            v
        };
        let om = seq(self.omega_target);
        let ta = seq(self.tau_target);
        let n = om.len().max(ta.len());
        (0..n)
            .map(|k| {
                let omega = om[k.min(om.len() - 1)];
                let tau = ta[k.min(ta.len() - 1)].min(omega);
                PenaltyBarrierParams { omega, tau }
            })
            .collect()
    }
}

/// Outcome of a minimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
    LinearSolveFailure,
}

impl SolveStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }
}

/// One accepted Newton iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub merit: f64,
    pub grad_inf: f64,
    pub step: f64,
    pub min_z: f64,
    pub shift: f64,
}

/// Summary of one continuation stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub omega: f64,
    pub tau: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub merit: f64,
    pub grad_inf: f64,
    pub min_z: f64,
    pub records: Vec<IterRecord>,
}

/// Result of [`minimize`].
#[derive(Clone, Debug)]
pub struct Minimization {
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub stages: Vec<StageTrace>,
    pub objective: f64,
    pub constraints: Vec<f64>,
}

impl Minimization {
    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }
}

struct Ordering {
    pos: Vec<usize>,
    n_vars: usize,
}

fn order_unknowns(n_vars: usize, a: &Assembly, layout: &crate::transcription::Layout) -> Ordering {
    let n_rows = a.constraints.len();
    let mut key = vec![0usize; n_vars + n_rows];
    for (d, k) in key.iter_mut().enumerate().take(n_vars) {
        *k = 2 * d;
    }
    let mut row_key = vec![0usize; n_rows];
    for b in &a.blocks {
        for (row, jac) in &b.jacobian {
            let mx = b.dofs.iter().zip(jac).filter(|(_, v)| **v != 0.0).map(|(d, _)| *d).max().unwrap_or(0);
            row_key[*row] = row_key[*row].max(mx);
        }
    }
    for &(row, k) in &a.linear {
        let lr = &layout.linear_rows[k];
        let mx = lr.dofs.iter().zip(&lr.coefs).filter(|(_, v)| **v != 0.0).map(|(d, _)| *d).max().unwrap_or(0);
        row_key[row] = mx;
    }
    for r in 0..n_rows {
        key[n_vars + r] = 2 * row_key[r] + 1;
    }
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by_key(|&i| (key[i], i));
    let mut pos = vec![0; key.len()];
    for (p, &i) in idx.iter().enumerate() {
        pos[i] = p;
    }
    Ordering { pos, n_vars }
}

fn bandwidth(ord: &Ordering, a: &Assembly, layout: &crate::transcription::Layout) -> usize {
    let pos = &ord.pos;
    let mut bw = 0usize;
    let span = |x: usize, y: usize| if x > y { x - y } else { y - x };
    for b in &a.blocks {
        let nd = b.dofs.len();
        for r in 0..nd {
            for c in 0..nd {
                if b.hessian.get(r * nd + c).copied().unwrap_or(0.0) != 0.0 {
                    bw = bw.max(span(pos[b.dofs[r]], pos[b.dofs[c]]));
                }
            }
        }
        for (row, jac) in &b.jacobian {
            let pr = pos[ord.n_vars + row];
            for (d, v) in b.dofs.iter().zip(jac) {
                if *v != 0.0 {
                    bw = bw.max(span(pr, pos[*d]));
                }
            }
        }
    }
    for &(row, k) in &a.linear {
        let lr = &layout.linear_rows[k];
        let pr = pos[ord.n_vars + row];
        for (d, v) in lr.dofs.iter().zip(&lr.coefs) {
            if *v != 0.0 {
                bw = bw.max(span(pr, pos[*d]));
            }
        }
    }
    bw
}

/// Solves the augmented Newton system with primal shift `shift`.
fn newton_direction(nlp: &TranscribedNlp, a: &Assembly, ord: &Ordering, bw: usize, shift: f64) -> Result<Vec<f64>> {
    let layout = &nlp.layout;
    let n = ord.n_vars;
    let total = n + a.constraints.len();
    let pos = &ord.pos;
    let mut m = BandMatrix::zeros(total, bw, bw);
    for b in &a.blocks {
        let nd = b.dofs.len();
        for r in 0..nd {
            for c in 0..nd {
                let v = b.hessian[r * nd + c];
                if v != 0.0 {
                    m.add(pos[b.dofs[r]], pos[b.dofs[c]], v);
                }
            }
        }
        for (row, jac) in &b.jacobian {
            let pr = pos[n + row];
            for (d, v) in b.dofs.iter().zip(jac) {
                if *v != 0.0 {
                    m.add(pr, pos[*d], *v);
                    m.add(pos[*d], pr, *v);
                }
            }
        }
    }
    for &(row, k) in &a.linear {
        let lr = &layout.linear_rows[k];
        let pr = pos[n + row];
        for (d, v) in lr.dofs.iter().zip(&lr.coefs) {
            if *v != 0.0 {
                m.add(pr, pos[*d], *v);
                m.add(pos[*d], pr, *v);
            }
        }
    }
    for d in 0..n {
        m.add(pos[d], pos[d], shift);
    }
    for r in 0..a.constraints.len() {
        m.add(pos[n + r], pos[n + r], -nlp.params.omega);
    }
    let mut rhs = vec![0.0; total];
    for d in 0..n {
        rhs[pos[d]] = -a.gradient[d];
    }
    for (r, c) in a.constraints.iter().enumerate() {
        rhs[pos[n + r]] = -c;
    }
    let lu = m.factor()?;
    lu.solve(&mut rhs);
    let dx: Vec<f64> = (0..n).map(|d| rhs[pos[d]]).collect();
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite Newton direction".into()));
    }
    Ok(dx)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn min_barrier(nlp: &TranscribedNlp, x: &[f64]) -> f64 {
    nlp.barrier_values(x).iter().map(|v| v.2).fold(f64::INFINITY, f64::min)
}

/// Primal-dual update of the barrier multipliers towards `ν z = τ`,
/// safeguarded to stay within a factor `DUAL_SAFEGUARD` of `τ / z`.
fn update_duals(nu: &mut [f64], z: &[(f64, usize, f64)], dz: &[(f64, usize, f64)], alpha: f64, tau: f64) {
    for ((n, z), dz) in nu.iter_mut().zip(z).zip(dz) {
        let (z, dz) = (z.2, dz.2);
        let step = tau / z - *n - *n / z * dz;
        let mut beta = 1.0;
        if step < 0.0 {
            beta = (0.995 * *n / -step).min(1.0);
        }
        let trial = *n + beta * step;
        let zn = z + alpha * dz;
        *n = trial.clamp(tau / (DUAL_SAFEGUARD * zn), DUAL_SAFEGUARD * tau / zn);
    }
}

struct StageOutcome {
    status: SolveStatus,
    trace: StageTrace,
    last_shift: f64,
}

fn run_stage(nlp: &TranscribedNlp, x: &mut Vec<f64>, cfg: &SolverConfig, stage: usize, mut last_shift: f64) -> Result<StageOutcome> {
    let omega = nlp.params.omega;
    let mut records = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut merit = nlp.merit(x)?;
    let mut grad_inf = f64::INFINITY;
    let mut iters = 0;
    let tau = nlp.params.tau;
    let mut nu: Vec<f64> = nlp.barrier_values(x).iter().map(|v| tau / v.2).collect();
    for iter in 0..cfg.max_iters {
        let mode = cfg.hessian;
        let a = nlp.assemble_primal_dual(x, mode, &nu)?;
        let g = a.merit_gradient(&nlp.layout, omega);
        grad_inf = inf_norm(&g);
        let scale = 1.0 + merit.abs();
        if grad_inf <= cfg.grad_tol * scale {
            status = SolveStatus::Converged;
            break;
        }
        let ord = order_unknowns(x.len(), &a, &nlp.layout);
        let bw = bandwidth(&ord, &a, &nlp.layout);
        // regularized Newton direction
        let mut shift = 0.0;
        let mut found = None;
        for attempt in 0..=MAX_SHIFT_TRIES {
            if attempt == 1 {
                shift = cfg.regularization_floor.max(0.5 * last_shift);
            } else if attempt > 1 {
                shift *= 2.0;
            }
            let dx = match newton_direction(nlp, &a, &ord, bw, shift) {
                Ok(dx) => dx,
                Err(_) => continue,
            };
            let gtd = dot(&g, &dx);
            let jd = a.jacobian_times(&nlp.layout, &dx);
            let curv = a.hessian_quadratic(&dx) + shift * dot(&dx, &dx) + dot(&jd, &jd) / omega;
            if gtd < 0.0 && curv > 0.0 {
                found = Some((dx, gtd));
                break;
            }
        }
        let Some((dx, gtd)) = found else {
            status = SolveStatus::LinearSolveFailure;
            break;
        };
        if shift > 0.0 {
            last_shift = shift;
        } else {
            last_shift *= 0.25;
        }
        let decrement = -gtd;
        if decrement <= DECREMENT_TOL * scale {
            status = SolveStatus::Converged;
            break;
        }
        // fraction to boundary on barrier values
        let zv = nlp.barrier_values(x);
        let dz = nlp.barrier_values(&dx);
        let mut alpha: f64 = 1.0;
        for (z, d) in zv.iter().zip(&dz) {
            if d.2 < 0.0 {
                alpha = alpha.min(cfg.fraction_to_boundary * z.2 / -d.2);
            }
        }
        let alpha_ftb = alpha;
        let mut accepted = None;
        let mut trial = vec![0.0; x.len()];
        while alpha >= MIN_STEP {
            for ((t, xi), di) in trial.iter_mut().zip(x.iter()).zip(&dx) {
                *t = xi + alpha * di;
            }
            match nlp.merit(&trial) {
                Ok(m) if m <= merit + ARMIJO * alpha * gtd => {
                    accepted = Some(m);
                    break;
                }
                Ok(_) | Err(Error::BarrierDomain { .. }) | Err(Error::Evaluation { .. }) => alpha *= BACKTRACK,
                Err(e) => return Err(e),
            }
        }
        iters = iter + 1;
        let Some(new_merit) = accepted else {
            status = if decrement <= STALL_DECREMENT_TOL * scale {
                SolveStatus::Converged
            } else {
                SolveStatus::LineSearchFailure
            };
            break;
        };
        std::mem::swap(x, &mut trial);
        merit = new_merit;
        update_duals(&mut nu, &zv, &dz, alpha, tau);
        let rec = IterRecord { iter, merit, grad_inf, step: alpha, min_z: min_barrier(nlp, x), shift };
        debug!(
            "stage={} iter={} merit={:.12e} grad_inf={:.3e} step={:.3e} ftb={:.3e} min_z={:.3e} shift={:.1e}",
            stage, rec.iter, rec.merit, rec.grad_inf, rec.step, alpha_ftb, rec.min_z, rec.shift
        );
        records.push(rec);
    }
    let trace = StageTrace {
        omega,
        tau: nlp.params.tau,
        iterations: iters,
        status,
        merit,
        grad_inf,
        min_z: min_barrier(nlp, x),
        records,
    };
    Ok(StageOutcome { status, trace, last_shift })
}

/// Runs the continuation from `x0`. Fails only if `x0` is outside the barrier domain
/// or the configuration is invalid; non-convergence is reported in the status.
///
/// The reported status is that of the final stage; earlier stages only warm start it.
pub fn minimize(base: &TranscribedNlp, x0: Vec<f64>, cfg: &SolverConfig) -> Result<Minimization> {
    cfg.validate()?;
    let mut x = x0;
    base.merit(&x)?;
    let mut stages = Vec::new();
    let mut status = SolveStatus::Converged;
    let mut last_shift = 0.0;
    for (k, params) in cfg.stages().into_iter().enumerate() {
        let nlp = base.with_params(params);
        let out = run_stage(&nlp, &mut x, cfg, k, last_shift)?;
        last_shift = out.last_shift;
        status = out.status;
        stages.push(out.trace);
    }
    let objective = base.objective(&x)?;
    let constraints = base.constraints(&x)?;
    Ok(Minimization { x, status, stages, objective, constraints })
}

/// Result of a finite element solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    /// `F_h` at the solution.
    pub objective: f64,
    /// Independent feasibility residual.
    pub r_feas: f64,
    pub g_opt: Option<f64>,
    pub status: SolveStatus,
    pub stages: Vec<StageTrace>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    /// Sets `g_opt = max(F_h - F_ref, 0)`.
    pub fn with_reference(mut self, reference_objective: f64) -> Self {
        self.g_opt = Some(crate::analysis::optimality_gap(self.objective, reference_objective));
        self
    }
}

/// How [`initial_guess`] fills `y`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// `y` constant at the start hint (or zero).
    Constant,
    /// `y` linear between the start and end hints.
    #[default]
    LinearBoundary,
}

/// Starting trajectory from the problem's boundary hints; `z` is set to the
/// hint or to 1.
pub fn initial_guess(problem: &DynamicProblem, space: &FESpace, strategy: GuessStrategy) -> Trajectory {
    let n_y = problem.n_y;
    let start = problem.hints.y_start.clone().unwrap_or_else(|| vec![0.0; n_y]);
    let end = match strategy {
        GuessStrategy::Constant => start.clone(),
        GuessStrategy::LinearBoundary => problem.hints.y_end.clone().unwrap_or_else(|| start.clone()),
    };
    let z = problem.hints.z_value.clone().unwrap_or_else(|| vec![1.0; problem.n_z]);
    let (t0, te) = (problem.t0, problem.t_end);
    Trajectory::interpolate(space.clone(), |t| {
        let s = (t - t0) / (te - t0);
        let mut v: Vec<f64> = start.iter().zip(&end).map(|(a, b)| a + s * (b - a)).collect();
        v.extend_from_slice(&z);
        v
    })
}

/// Minimizes the transcription built by `nlp_factory` from `initial`, then
/// measures the independent feasibility residual.
pub fn solve(
    nlp_factory: impl Fn(PenaltyBarrierParams) -> Result<TranscribedNlp>,
    initial: Trajectory,
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let first = config.stages()[0];
    let nlp = nlp_factory(first)?;
    let mut initial = initial;
    push_trajectory_interior(&nlp.problem, &mut initial, first.tau / first.l_omega());
    let (space, x0) = initial.into_parts();
    let min = minimize(&nlp, x0, config)?;
    let trajectory = Trajectory::new(space, min.x)?;
    let r_feas = feasibility_residual(&nlp.problem, &trajectory)?;
    Ok(SolveReport {
        trajectory,
        objective: min.objective,
        r_feas,
        g_opt: None,
        status: min.status,
        stages: min.stages,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// [`solve`] for the finite element transcription with the default rule.
pub fn solve_fem(problem: &DynamicProblem, space: &FESpace, config: &SolverConfig) -> Result<SolveReport> {
    let layout = std::sync::Arc::new(crate::transcription::fem_layout(problem, space, &crate::transcription::default_rule(space.p))?);
    let initial = initial_guess(problem, space, GuessStrategy::LinearBoundary);
    solve(|params| Ok(TranscribedNlp::new(problem.clone(), layout.clone(), params)), initial, config)
}
