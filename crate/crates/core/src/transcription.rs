//! Assembly of the discrete penalty-barrier merit function
//! `φ(x) = F_h + ‖C_h‖² / (2ω) + τ Γ_h`.
//!
//! The same machinery serves the finite element transcription and the
//! collocation baselines: both are described by a [`Layout`] of evaluation
//! sites, each with a linear map from global coefficients to `(ẏ, y, z)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{FESpace, Trajectory};
use crate::problem::{AlgebraicKind, DynamicProblem, ModelScalar};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::scalar::{Differentiable, Dual16, Dual32, Dual8, Hyper16, Hyper32, Hyper8, MAX_LOCAL_INPUTS};

/// Penalty and barrier weights, `0 < τ ≤ ω ≤ 0.5`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBarrierParams {
    pub omega: f64,
    pub tau: f64,
}

impl PenaltyBarrierParams {
    pub fn new(omega: f64, tau: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 0.5) {
            return Err(Error::Input(format!("omega = {omega} must lie in (0, 0.5]")));
        }
        if !(tau > 0.0 && tau <= omega) {
            return Err(Error::Input(format!("tau = {tau} must lie in (0, omega]")));
        }
        Ok(Self { omega, tau })
    }

    /// Lipschitz estimate `L_F + L_r / (2ω)` with `L_F = L_r = 2`.
    pub fn l_omega(&self) -> f64 {
        2.0 + 1.0 / self.omega
    }
}

/// One evaluation point of the path functions.
#[derive(Clone, Debug)]
pub struct Site {
    pub t: f64,
    /// Weight of `f`.
    pub w_obj: f64,
    /// Factor applied to `c` inside `C_h`; zero skips the residual.
    pub w_res: f64,
    /// Weight of `-log z` terms.
    pub w_bar: f64,
    /// Row-major `(2 n_y + n_z) × dofs.len()` map to `(ẏ, y, z)`.
    pub map: Vec<f64>,
}

/// Sites sharing one set of coefficients.
#[derive(Clone, Debug)]
pub struct Block {
    pub dofs: Vec<usize>,
    pub sites: Vec<Site>,
}

/// A residual row that is linear in the coefficients: `Σ coefs[k] x[dofs[k]]`.
#[derive(Clone, Debug)]
pub struct LinearRow {
    pub dofs: Vec<usize>,
    pub coefs: Vec<f64>,
}

/// Map from coefficients to the stacked point values `y(t_1), …, y(t_M)`.
#[derive(Clone, Debug)]
pub struct PointBlock {
    pub dofs: Vec<usize>,
    /// Row-major `(n_y · M) × dofs.len()`.
    pub map: Vec<f64>,
}

/// Discretization structure independent of the penalty parameters.
#[derive(Clone, Debug)]
pub struct Layout {
    pub n_vars: usize,
    pub blocks: Vec<Block>,
    pub points: PointBlock,
    pub linear_rows: Vec<LinearRow>,
}

impl Layout {
    /// Number of rows of `C_h`.
    pub fn n_rows(&self, problem: &DynamicProblem) -> usize {
        let sites: usize = self.blocks.iter().map(|b| b.sites.iter().filter(|s| s.w_res > 0.0).count()).sum();
        problem.n_b + sites * problem.n_c + self.linear_rows.len()
    }
}

/// Builds the finite element layout: one block per mesh interval with the
/// sites at the mapped nodes of `rule`.
pub fn fem_layout(problem: &DynamicProblem, space: &FESpace, rule: &QuadratureRule) -> Result<Layout> {
    if space.n_y != problem.n_y || space.n_z != problem.n_z {
        return Err(Error::Input("space dimensions do not match the problem".into()));
    }
    let mesh = space.mesh();
    if (mesh.t0() - problem.t0).abs() > 1e-12 * (1.0 + problem.t0.abs())
        || (mesh.t_end() - problem.t_end).abs() > 1e-12 * (1.0 + problem.t_end.abs())
    {
        return Err(Error::Input("mesh does not cover the problem horizon".into()));
    }
    let (n_y, n_z) = (space.n_y, space.n_z);
    let m = 2 * n_y + n_z;
    let k = space.local_nodes();
    let basis = space.basis();
    let mut phi = vec![0.0; k];
    let mut dphi = vec![0.0; k];
    let mut blocks = Vec::with_capacity(mesh.n_intervals());
    for (i, (a, b)) in mesh.intervals().enumerate() {
        let dofs = space.interval_dofs(i);
        let nd = dofs.len();
        let half = 0.5 * (b - a);
        let mut sites = Vec::with_capacity(rule.len());
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            basis.values(*xi, &mut phi);
            basis.derivatives(*xi, &mut dphi);
            let mut map = vec![0.0; m * nd];
            for l in 0..k {
                for c in 0..n_y {
                    let col = l * n_y + c;
                    map[c * nd + col] = dphi[l] / half;
                    map[(n_y + c) * nd + col] = phi[l];
                }
                for c in 0..n_z {
                    let col = k * n_y + l * n_z + c;
                    map[(2 * n_y + c) * nd + col] = phi[l];
                }
            }
            let weight = w * half;
            sites.push(Site { t: a + half * (xi + 1.0), w_obj: weight, w_res: weight.sqrt(), w_bar: weight, map });
        }
        blocks.push(Block { dofs, sites });
    }
    let points = fem_point_block(problem, space)?;
    Ok(Layout { n_vars: space.dim(), blocks, points, linear_rows: Vec::new() })
}

fn fem_point_block(problem: &DynamicProblem, space: &FESpace) -> Result<PointBlock> {
    let n_y = space.n_y;
    let k = space.local_nodes();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut phi = vec![0.0; k];
    for &t in &problem.point_times {
        let i = space.mesh().locate(t)?;
        let (a, b) = space.mesh().interval(i);
        space.basis().values(2.0 * (t - a) / (b - a) - 1.0, &mut phi);
        for c in 0..n_y {
            rows.push((0..k).map(|l| (space.y_dof(i, l, c), phi[l])).collect());
        }
    }
    Ok(point_block_from_rows(rows))
}

/// Assembles a [`PointBlock`] from sparse rows.
pub fn point_block_from_rows(rows: Vec<Vec<(usize, f64)>>) -> PointBlock {
    let mut dofs: Vec<usize> = rows.iter().flatten().map(|&(d, _)| d).collect();
    dofs.sort_unstable();
    dofs.dedup();
    let nd = dofs.len();
    let mut map = vec![0.0; rows.len() * nd];
    for (r, row) in rows.iter().enumerate() {
        for &(d, v) in row {
            let col = dofs.binary_search(&d).unwrap();
            map[r * nd + col] += v;
        }
    }
    PointBlock { dofs, map }
}

/// Which second-order terms enter the Newton Hessian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    /// Exact second derivatives of `f`, the barrier and the residuals.
    Exact,
    /// Drops the residual curvature: the penalty block is `JᵀJ/ω` only.
    #[default]
    GaussNewton,
}

/// Local Hessian and Jacobian rows of one block.
#[derive(Clone, Debug)]
pub struct BlockAssembly {
    pub dofs: Vec<usize>,
    /// Row-major `dofs.len()²` Hessian of `F_h + τΓ_h + Σ C_i ∇²C_i / ω`.
    pub hessian: Vec<f64>,
    /// `(row of C_h, dense Jacobian row over dofs)`.
    pub jacobian: Vec<(usize, Vec<f64>)>,
}

/// Everything a Newton step needs at one iterate.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub objective: f64,
    pub barrier: f64,
    pub constraints: Vec<f64>,
    /// Gradient of `F_h + τ Γ_h` (the penalty part is `JᵀC/ω`).
    pub gradient: Vec<f64>,
    pub blocks: Vec<BlockAssembly>,
    /// Linear rows as `(row of C_h, index into layout.linear_rows)`.
    pub linear: Vec<(usize, usize)>,
}

impl Assembly {
    /// `∇φ = gradient + JᵀC/ω`.
    pub fn merit_gradient(&self, layout: &Layout, omega: f64) -> Vec<f64> {
        let mut g = self.gradient.clone();
        for b in &self.blocks {
            for (row, jac) in &b.jacobian {
                let s = self.constraints[*row] / omega;
                for (d, v) in b.dofs.iter().zip(jac) {
                    g[*d] += s * v;
                }
            }
        }
        for &(row, k) in &self.linear {
            let s = self.constraints[row] / omega;
            let lr = &layout.linear_rows[k];
            for (d, v) in lr.dofs.iter().zip(&lr.coefs) {
                g[*d] += s * v;
            }
        }
        g
    }

    /// `J v`.
    pub fn jacobian_times(&self, layout: &Layout, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.constraints.len()];
        for b in &self.blocks {
            for (row, jac) in &b.jacobian {
                out[*row] += b.dofs.iter().zip(jac).map(|(d, j)| j * v[*d]).sum::<f64>();
            }
        }
        for &(row, k) in &self.linear {
            let lr = &layout.linear_rows[k];
            out[row] += lr.dofs.iter().zip(&lr.coefs).map(|(d, c)| c * v[*d]).sum::<f64>();
        }
        out
    }

    /// `vᵀ H v` for the assembled Hessian.
    pub fn hessian_quadratic(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for b in &self.blocks {
            let nd = b.dofs.len();
            for r in 0..nd {
                let vr = v[b.dofs[r]];
                if vr == 0.0 {
                    continue;
                }
                for c in 0..nd {
                    s += vr * b.hessian[r * nd + c] * v[b.dofs[c]];
                }
            }
        }
        s
    }
}

/// Derivatives of the path or point functions at one set of local inputs.
#[derive(Clone, Debug, Default)]
struct LocalDerivs {
    m: usize,
    f: f64,
    gf: Vec<f64>,
    hf: Vec<f64>,
    c: Vec<f64>,
    gc: Vec<f64>,
    hc: Vec<f64>,
}

impl LocalDerivs {
    fn reset(&mut self, m: usize, n_c: usize, second: bool) {
        self.m = m;
        self.gf.clear();
        self.gf.resize(m, 0.0);
        self.c.clear();
        self.c.resize(n_c, 0.0);
        self.gc.clear();
        self.gc.resize(n_c * m, 0.0);
        self.hf.clear();
        self.hc.clear();
        if second {
            self.hf.resize(m * m, 0.0);
            self.hc.resize(n_c * m * m, 0.0);
        }
    }
}

fn seeds<S: Differentiable>(u: &[f64]) -> Vec<S> {
    u.iter().enumerate().map(|(k, &v)| S::variable(v, k)).collect()
}

fn fill_scalar<S: Differentiable>(s: &S, m: usize, g: &mut [f64], h: &mut [f64]) {
    for a in 0..m {
        g[a] = s.gradient_entry(a);
    }
    if S::SECOND_ORDER {
        for a in 0..m {
            for b in 0..m {
                h[a * m + b] = s.hessian_entry(a, b);
            }
        }
    }
}

fn path_kernel<S: ModelScalar + Differentiable>(problem: &DynamicProblem, u: &[f64], t: f64, with_f: bool, out: &mut LocalDerivs) {
    let (n_y, n_c) = (problem.n_y, problem.n_c);
    let m = u.len();
    out.reset(m, n_c, S::SECOND_ORDER);
    let vars: Vec<S> = seeds(u);
    let (yd, rest) = vars.split_at(n_y);
    let (y, z) = rest.split_at(n_y);
    if with_f {
        let f = S::objective(problem.model(), yd, y, z, t);
        out.f = f.value();
        fill_scalar(&f, m, &mut out.gf, &mut out.hf);
    }
    let mut c = vec![S::zero(); n_c];
    S::residual(problem.model(), yd, y, z, t, &mut c);
    for (i, ci) in c.iter().enumerate() {
        out.c[i] = ci.value();
        let (g, h) = (&mut out.gc[i * m..(i + 1) * m], if S::SECOND_ORDER { &mut out.hc[i * m * m..(i + 1) * m * m] } else { &mut [][..] });
        fill_scalar(ci, m, g, h);
    }
}

fn point_kernel<S: ModelScalar + Differentiable>(problem: &DynamicProblem, u: &[f64], out: &mut LocalDerivs) {
    let m = u.len();
    out.reset(m, problem.n_b, S::SECOND_ORDER);
    let vars: Vec<S> = seeds(u);
    let mut b = vec![S::zero(); problem.n_b];
    S::points(problem.model(), &vars, &mut b);
    for (i, bi) in b.iter().enumerate() {
        out.c[i] = bi.value();
        let (g, h) = (&mut out.gc[i * m..(i + 1) * m], if S::SECOND_ORDER { &mut out.hc[i * m * m..(i + 1) * m * m] } else { &mut [][..] });
        fill_scalar(bi, m, g, h);
    }
}

fn too_many(m: usize) -> Error {
    Error::Input(format!("{m} local inputs exceed the supported maximum of {MAX_LOCAL_INPUTS}"))
}

fn path_derivs(problem: &DynamicProblem, u: &[f64], t: f64, second: bool, with_f: bool, out: &mut LocalDerivs) -> Result<()> {
    match (second, u.len()) {
        (false, 0..=8) => path_kernel::<Dual8>(problem, u, t, with_f, out),
        (false, 9..=16) => path_kernel::<Dual16>(problem, u, t, with_f, out),
        (false, 17..=32) => path_kernel::<Dual32>(problem, u, t, with_f, out),
        (true, 0..=8) => path_kernel::<Hyper8>(problem, u, t, with_f, out),
        (true, 9..=16) => path_kernel::<Hyper16>(problem, u, t, with_f, out),
        (true, 17..=32) => path_kernel::<Hyper32>(problem, u, t, with_f, out),
        (_, m) => return Err(too_many(m)),
    }
    Ok(())
}

fn point_derivs(problem: &DynamicProblem, u: &[f64], second: bool, out: &mut LocalDerivs) -> Result<()> {
    match (second, u.len()) {
        (false, 0..=8) => point_kernel::<Dual8>(problem, u, out),
        (false, 9..=16) => point_kernel::<Dual16>(problem, u, out),
        (false, 17..=32) => point_kernel::<Dual32>(problem, u, out),
        (true, 0..=8) => point_kernel::<Hyper8>(problem, u, out),
        (true, 9..=16) => point_kernel::<Hyper16>(problem, u, out),
        (true, 17..=32) => point_kernel::<Hyper32>(problem, u, out),
        (_, m) => return Err(too_many(m)),
    }
    Ok(())
}

fn apply_map(map: &[f64], rows: usize, dofs: &[usize], x: &[f64], out: &mut Vec<f64>) {
    let nd = dofs.len();
    out.clear();
    for r in 0..rows {
        let row = &map[r * nd..(r + 1) * nd];
        out.push(row.iter().zip(dofs).map(|(a, d)| a * x[*d]).sum());
    }
}

/// `out[nd] += Aᵀ g` for a row-major `m × nd` map.
fn add_pullback_vec(map: &[f64], m: usize, nd: usize, g: &[f64], scale: f64, out: &mut [f64]) {
    for r in 0..m {
        let gr = g[r] * scale;
        if gr == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(&map[r * nd..(r + 1) * nd]) {
            *o += gr * a;
        }
    }
}

/// `out[nd × nd] += Aᵀ H A` for a row-major `m × nd` map and `m × m` matrix.
fn add_pullback_mat(map: &[f64], m: usize, nd: usize, h: &[f64], out: &mut [f64], tmp: &mut Vec<f64>) {
    // tmp = H A  (m × nd)
    tmp.clear();
    tmp.resize(m * nd, 0.0);
    for r in 0..m {
        for s in 0..m {
            let hv = h[r * m + s];
            if hv == 0.0 {
                continue;
            }
            let (dst, src) = (&mut tmp[r * nd..(r + 1) * nd], &map[s * nd..(s + 1) * nd]);
            for (d, a) in dst.iter_mut().zip(src) {
                *d += hv * a;
            }
        }
    }
    for r in 0..m {
        let arow = &map[r * nd..(r + 1) * nd];
        let trow = &tmp[r * nd..(r + 1) * nd];
        for (i, &ai) in arow.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let orow = &mut out[i * nd..(i + 1) * nd];
            for (o, t) in orow.iter_mut().zip(trow) {
                *o += ai * t;
            }
        }
    }
}

/// The discretized problem for fixed `(ω, τ)`.
#[derive(Clone, Debug)]
pub struct TranscribedNlp {
    pub problem: DynamicProblem,
    pub layout: Arc<Layout>,
    pub params: PenaltyBarrierParams,
    barrier_components: Vec<usize>,
}

impl TranscribedNlp {
    pub fn new(problem: DynamicProblem, layout: Arc<Layout>, params: PenaltyBarrierParams) -> Self {
        let barrier_components = problem.barrier_components();
        Self { problem, layout, params, barrier_components }
    }

    /// Finite element transcription with `rule` on every interval.
    pub fn fem(problem: DynamicProblem, space: &FESpace, rule: &QuadratureRule, params: PenaltyBarrierParams) -> Result<Self> {
        let layout = fem_layout(&problem, space, rule)?;
        Ok(Self::new(problem, Arc::new(layout), params))
    }

    /// Finite element transcription with [`default_rule`].
    pub fn fem_default(problem: DynamicProblem, space: &FESpace, params: PenaltyBarrierParams) -> Result<Self> {
        let rule = default_rule(space.p);
        Self::fem(problem, space, &rule, params)
    }

    pub fn with_params(&self, params: PenaltyBarrierParams) -> Self {
        Self { params, ..self.clone() }
    }

    pub fn n_vars(&self) -> usize {
        self.layout.n_vars
    }

    fn m(&self) -> usize {
        self.problem.local_inputs()
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        crate::error::check_len("coefficients", self.layout.n_vars, x.len())
    }

    /// `F_h`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let p = &self.problem;
        let mut u = Vec::new();
        let mut total = 0.0;
        for b in &self.layout.blocks {
            for s in &b.sites {
                if s.w_obj == 0.0 {
                    continue;
                }
                apply_map(&s.map, self.m(), &b.dofs, x, &mut u);
                let (yd, rest) = u.split_at(p.n_y);
                let (y, z) = rest.split_at(p.n_y);
                let f = <f64 as ModelScalar>::objective(p.model(), yd, y, z, s.t);
                if !f.is_finite() {
                    return Err(Error::Evaluation { what: "objective".into(), t: s.t });
                }
                total += s.w_obj * f;
            }
        }
        Ok(total)
    }

    /// `C_h`: point residuals, then weighted path residuals site by site,
    /// then linear rows.
    pub fn constraints(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let p = &self.problem;
        let mut out = Vec::with_capacity(self.layout.n_rows(p));
        if p.n_b > 0 {
            let mut yp = Vec::new();
            let pb = &self.layout.points;
            apply_map(&pb.map, p.n_y * p.point_times.len(), &pb.dofs, x, &mut yp);
            let mut b = vec![0.0; p.n_b];
            <f64 as ModelScalar>::points(p.model(), &yp, &mut b);
            if let Some(k) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::Evaluation { what: format!("point residual {k}"), t: p.point_times[0] });
            }
            out.extend(b);
        }
        let mut u = Vec::new();
        let mut c = vec![0.0; p.n_c];
        for blk in &self.layout.blocks {
            for s in &blk.sites {
                if s.w_res == 0.0 {
                    continue;
                }
                apply_map(&s.map, self.m(), &blk.dofs, x, &mut u);
                let (yd, rest) = u.split_at(p.n_y);
                let (y, z) = rest.split_at(p.n_y);
                <f64 as ModelScalar>::residual(p.model(), yd, y, z, s.t, &mut c);
                for v in &c {
                    if !v.is_finite() {
                        return Err(Error::Evaluation { what: "path residual".into(), t: s.t });
                    }
                    out.push(s.w_res * v);
                }
            }
        }
        for lr in &self.layout.linear_rows {
            out.push(lr.dofs.iter().zip(&lr.coefs).map(|(d, c)| c * x[*d]).sum());
        }
        Ok(out)
    }

    /// Values of the barrier components at all barrier sites, with their
    /// time and component; linear in `x`.
    pub fn barrier_values(&self, x: &[f64]) -> Vec<(f64, usize, f64)> {
        let p = &self.problem;
        let m = self.m();
        let mut out = Vec::new();
        for b in &self.layout.blocks {
            let nd = b.dofs.len();
            for s in &b.sites {
                if s.w_bar == 0.0 {
                    continue;
                }
                for &j in &self.barrier_components {
                    let r = 2 * p.n_y + j;
                    let row = &s.map[r * nd..(r + 1) * nd];
                    let v: f64 = row.iter().zip(&b.dofs).map(|(a, d)| a * x[*d]).sum();
                    out.push((s.t, j, v));
                }
                debug_assert!(m >= 2 * p.n_y);
            }
        }
        out
    }

    /// `Γ_h = -Σ w log z` over barrier sites and components.
    pub fn barrier(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let mut total = 0.0;
        let p = &self.problem;
        for b in &self.layout.blocks {
            let nd = b.dofs.len();
            for s in &b.sites {
                if s.w_bar == 0.0 {
                    continue;
                }
                for &j in &self.barrier_components {
                    let r = 2 * p.n_y + j;
                    let v: f64 = s.map[r * nd..(r + 1) * nd].iter().zip(&b.dofs).map(|(a, d)| a * x[*d]).sum();
                    if !(v > 0.0) {
                        return Err(Error::BarrierDomain { component: j, t: s.t, value: v });
                    }
                    total -= s.w_bar * v.ln();
                }
            }
        }
        Ok(total)
    }

    /// `φ(x)`.
    pub fn merit(&self, x: &[f64]) -> Result<f64> {
        let g = self.barrier(x)?;
        let f = self.objective(x)?;
        let c = self.constraints(x)?;
        let r: f64 = c.iter().map(|v| v * v).sum();
        Ok(f + r / (2.0 * self.params.omega) + self.params.tau * g)
    }

    /// `∇φ(x)` by forward-mode differentiation.
    pub fn merit_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let a = self.assemble_inner(x, false, HessianMode::GaussNewton, None)?;
        Ok(a.merit_gradient(&self.layout, self.params.omega))
    }

    /// Values, gradient, Jacobian and Hessian blocks for a Newton step.
    pub fn assemble(&self, x: &[f64], mode: HessianMode) -> Result<Assembly> {
        self.assemble_inner(x, true, mode, None)
    }

    /// [`assemble`](Self::assemble) with the barrier curvature `τ w / z²`
    /// replaced by `w ν / z`, where `ν` holds one multiplier estimate per
    /// entry of [`barrier_values`](Self::barrier_values).
    pub fn assemble_primal_dual(&self, x: &[f64], mode: HessianMode, duals: &[f64]) -> Result<Assembly> {
        self.assemble_inner(x, true, mode, Some(duals))
    }

    fn assemble_inner(&self, x: &[f64], second: bool, mode: HessianMode, duals: Option<&[f64]>) -> Result<Assembly> {
        self.check_x(x)?;
        let p = &self.problem;
        let (n_y, n_c) = (p.n_y, p.n_c);
        let m = self.m();
        let omega = self.params.omega;
        let tau = self.params.tau;
        let exact = mode == HessianMode::Exact;
        let mut gradient = vec![0.0; self.layout.n_vars];
        let mut constraints = Vec::with_capacity(self.layout.n_rows(p));
        let mut blocks = Vec::with_capacity(self.layout.blocks.len() + 1);
        let mut d = LocalDerivs::default();
        let mut u = Vec::new();
        let mut tmp = Vec::new();
        let mut objective = 0.0;
        let mut barrier = 0.0;
        let mut k_bar = 0;

        if p.n_b > 0 {
            let pb = &self.layout.points;
            let nd = pb.dofs.len();
            let mi = n_y * p.point_times.len();
            apply_map(&pb.map, mi, &pb.dofs, x, &mut u);
            point_derivs(p, &u, second, &mut d)?;
            let mut hu = vec![0.0; mi * mi];
            let mut jacobian = Vec::with_capacity(p.n_b);
            for i in 0..p.n_b {
                if !d.c[i].is_finite() {
                    return Err(Error::Evaluation { what: format!("point residual {i}"), t: p.point_times[0] });
                }
                let row = constraints.len();
                constraints.push(d.c[i]);
                let mut jr = vec![0.0; nd];
                add_pullback_vec(&pb.map, mi, nd, &d.gc[i * mi..(i + 1) * mi], 1.0, &mut jr);
                jacobian.push((row, jr));
                if second && exact {
                    let s = d.c[i] / omega;
                    for (h, v) in hu.iter_mut().zip(&d.hc[i * mi * mi..(i + 1) * mi * mi]) {
                        *h += s * v;
                    }
                }
            }
            let mut hessian = vec![0.0; if second { nd * nd } else { 0 }];
            if second {
                add_pullback_mat(&pb.map, mi, nd, &hu, &mut hessian, &mut tmp);
            }
            blocks.push(BlockAssembly { dofs: pb.dofs.clone(), hessian, jacobian });
        }

        let mut gu = vec![0.0; m];
        let mut hu = vec![0.0; m * m];
        for blk in &self.layout.blocks {
            let nd = blk.dofs.len();
            let mut hessian = vec![0.0; if second { nd * nd } else { 0 }];
            let mut gl = vec![0.0; nd];
            let mut jacobian = Vec::with_capacity(blk.sites.len() * n_c);
            for s in &blk.sites {
                apply_map(&s.map, m, &blk.dofs, x, &mut u);
                let with_f = s.w_obj != 0.0;
                let with_c = s.w_res != 0.0;
                if with_f || with_c {
                    path_derivs(p, &u, s.t, second, with_f, &mut d)?;
                }
                gu.iter_mut().for_each(|v| *v = 0.0);
                if second {
                    hu.iter_mut().for_each(|v| *v = 0.0);
                }
                if with_f {
                    if !d.f.is_finite() {
                        return Err(Error::Evaluation { what: "objective".into(), t: s.t });
                    }
                    objective += s.w_obj * d.f;
                    for a in 0..m {
                        gu[a] += s.w_obj * d.gf[a];
                    }
                    if second {
                        for (h, v) in hu.iter_mut().zip(&d.hf) {
                            *h += s.w_obj * v;
                        }
                    }
                }
                if s.w_bar != 0.0 {
                    for &j in &self.barrier_components {
                        let r = 2 * n_y + j;
                        let z = u[r];
                        if !(z > 0.0) {
                            return Err(Error::BarrierDomain { component: j, t: s.t, value: z });
                        }
                        barrier -= s.w_bar * z.ln();
                        gu[r] -= tau * s.w_bar / z;
                        if second {
                            hu[r * m + r] += match duals {
                                Some(nu) => s.w_bar * nu[k_bar] / z,
                                None => tau * s.w_bar / (z * z),
                            };
                        }
                        k_bar += 1;
                    }
                }
                if with_c {
                    let w = s.w_res;
                    for i in 0..n_c {
                        let ci = d.c[i];
                        if !ci.is_finite() {
                            return Err(Error::Evaluation { what: "path residual".into(), t: s.t });
                        }
                        let row = constraints.len();
                        constraints.push(w * ci);
                        let mut jr = vec![0.0; nd];
                        add_pullback_vec(&s.map, m, nd, &d.gc[i * m..(i + 1) * m], w, &mut jr);
                        jacobian.push((row, jr));
                        if second && exact {
                            let sc = w * w * ci / omega;
                            for (h, v) in hu.iter_mut().zip(&d.hc[i * m * m..(i + 1) * m * m]) {
                                *h += sc * v;
                            }
                        }
                    }
                }
                add_pullback_vec(&s.map, m, nd, &gu, 1.0, &mut gl);
                if second {
                    add_pullback_mat(&s.map, m, nd, &hu, &mut hessian, &mut tmp);
                }
            }
            for (dof, g) in blk.dofs.iter().zip(&gl) {
                gradient[*dof] += g;
            }
            blocks.push(BlockAssembly { dofs: blk.dofs.clone(), hessian, jacobian });
        }
        let mut linear = Vec::with_capacity(self.layout.linear_rows.len());
        for (k, lr) in self.layout.linear_rows.iter().enumerate() {
            let row = constraints.len();
            constraints.push(lr.dofs.iter().zip(&lr.coefs).map(|(d, c)| c * x[*d]).sum());
            linear.push((row, k));
        }
        Ok(Assembly { objective, barrier, constraints, gradient, blocks, linear })
    }
}

/// Default transcription rule: `2p + 1` Gauss points per interval, exact to degree `4p + 1`.
pub fn default_rule(p: usize) -> QuadratureRule {
    gauss_legendre(2 * p + 1)
}

/// Componentwise `max(value, threshold)`.
pub fn interior_push(values: &[f64], threshold: f64) -> Vec<f64> {
    values.iter().map(|&v| v.max(threshold)).collect()
}

/// Applies [`interior_push`] to the coefficients of every barrier component of `z`.
pub fn push_trajectory_interior(problem: &DynamicProblem, trajectory: &mut Trajectory, threshold: f64) {
    let space = trajectory.space().clone();
    for j in 0..space.n_z {
        if problem.z_kinds[j] != AlgebraicKind::Nonnegative {
            continue;
        }
        for d in space.z_component_dofs(j) {
            trajectory.coeffs[d] = trajectory.coeffs[d].max(threshold);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::problem::{DaeModel, Dims};
    use crate::scalar::Scalar;

    struct Quad;
    impl DaeModel for Quad {
        fn objective<S: Scalar>(&self, _yd: &[S], _y: &[S], z: &[S], _t: f64) -> S {
            z[0].square()
        }
        fn residual<S: Scalar>(&self, yd: &[S], _y: &[S], z: &[S], _t: f64, out: &mut [S]) {
            out[0] = yd[0] - z[0];
        }
        fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
            out[0] = yp[0];
        }
    }

    fn quad_problem() -> DynamicProblem {
        DynamicProblem::new("quad", Dims { n_y: 1, n_z: 1, n_c: 1, n_b: 1 }, (0.0, 1.0), vec![0.0], Quad).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PenaltyBarrierParams::new(0.6, 0.1).is_err());
        assert!(PenaltyBarrierParams::new(0.1, 0.2).is_err());
        assert!(PenaltyBarrierParams::new(0.1, 0.0).is_err());
        assert!(PenaltyBarrierParams::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn barrier_values_of_simple_functions() {
        let p = quad_problem();
        let space = FESpace::new(Mesh::uniform(0.0, 1.0, 3).unwrap(), 2, 1, 1, false).unwrap();
        let nlp = TranscribedNlp::fem_default(p, &space, PenaltyBarrierParams::new(0.1, 0.1).unwrap()).unwrap();
        let one = Trajectory::interpolate(space.clone(), |_| vec![0.0, 1.0]);
        assert!(nlp.barrier(&one.coeffs).unwrap().abs() < 1e-15);
        let e = Trajectory::interpolate(space.clone(), |_| vec![0.0, std::f64::consts::E]);
        assert!((nlp.barrier(&e.coeffs).unwrap() + 1.0).abs() < 1e-14);
        let lin = Trajectory::interpolate(space.clone(), |t| vec![0.0, t + 1.0]);
        let expect = -(2.0 * 2f64.ln() - 1.0);
        assert!((nlp.barrier(&lin.coeffs).unwrap() - expect).abs() < 1e-8);
        let neg = Trajectory::interpolate(space, |t| vec![0.0, t - 0.5]);
        assert!(matches!(nlp.barrier(&neg.coeffs), Err(Error::BarrierDomain { component: 0, .. })));
    }

    #[test]
    fn gradient_matches_hand_assembly_for_quadratic_problem() {
        // two elements, p = 1: φ is quadratic in the coefficients
        let p = quad_problem();
        let space = FESpace::new(Mesh::uniform(0.0, 1.0, 2).unwrap(), 1, 1, 1, false).unwrap();
        let omega = 0.25;
        let nlp = TranscribedNlp::fem_default(p, &space, PenaltyBarrierParams::new(omega, 1e-3).unwrap()).unwrap();
        let x: Vec<f64> = (0..space.dim()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let g = nlp.merit_gradient(&x).unwrap();
        // hand assembly: gather H and linear term with the exact quadratic structure
        let n = x.len();
        let q = |x: &[f64]| nlp.objective(x).unwrap() + nlp.constraints(x).unwrap().iter().map(|v| v * v).sum::<f64>() / (2.0 * omega);
        let mut hand = vec![0.0; n];
        for i in 0..n {
            // exact for a quadratic: central difference with unit step
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += 1.0;
            xm[i] -= 1.0;
            hand[i] = (q(&xp) - q(&xm)) / 2.0;
        }
        let gb = nlp.barrier_gradient_for_test(&x);
        for i in 0..n {
            assert!((g[i] - hand[i] - 1e-3 * gb[i]).abs() < 1e-12, "{i}: {} vs {}", g[i], hand[i]);
        }
    }

    impl TranscribedNlp {
        fn barrier_gradient_for_test(&self, x: &[f64]) -> Vec<f64> {
            let h = 1e-6;
            (0..x.len())
                .map(|i| {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[i] += h;
                    xm[i] -= h;
                    (self.barrier(&xp).unwrap() - self.barrier(&xm).unwrap()) / (2.0 * h)
                })
                .collect()
        }
    }

    #[test]
    fn penalty_identity_is_exact() {
        let p = quad_problem();
        let space = FESpace::new(Mesh::uniform(0.0, 1.0, 4).unwrap(), 3, 1, 1, false).unwrap();
        let omega = 0.125;
        let nlp = TranscribedNlp::fem_default(p, &space, PenaltyBarrierParams::new(omega, 1e-2).unwrap()).unwrap();
        let x = Trajectory::interpolate(space, |t| vec![t.sin(), 1.0 + t * t]).coeffs;
        let c = nlp.constraints(&x).unwrap();
        let r: f64 = c.iter().map(|v| v * v).sum();
        let penalty = r / (2.0 * omega);
        assert_eq!(penalty * 2.0 * omega, r);
        let a = nlp.assemble(&x, HessianMode::Exact).unwrap();
        assert_eq!(a.constraints, c);
    }

    #[test]
    fn push_clamps_values() {
        assert_eq!(interior_push(&[-1.0, 0.5, 2.0], 1.0), vec![1.0, 1.0, 2.0]);
        assert_eq!(interior_push(&[0.0], 1e-3), vec![1e-3]);
        assert_eq!(interior_push(&[3.0, 4.0], 1.0), vec![3.0, 4.0]);
    }
}
