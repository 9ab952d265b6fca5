//! Trapezoidal, Hermite-Simpson and Legendre-Gauss-Radau collocation on the
//! same [`DynamicProblem`] interface.
//!
//! The collocation conditions become rows of `C_h` and the resulting NLP is
//! minimized by the same penalty-barrier solver as the finite element
//! transcription, so differences in the results come from the
//! discretization alone. Solutions are embedded into an [`FESpace`] for
//! error measurement.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{FESpace, LagrangeBasis, Trajectory};
use crate::mesh::Mesh;
use crate::problem::{feasibility_residual, AlgebraicKind, DynamicProblem};
use crate::quadrature::gauss_radau_right;
use crate::solver::{initial_guess, minimize, GuessStrategy, SolveReport, SolverConfig};
use crate::transcription::{point_block_from_rows, Block, Layout, LinearRow, PenaltyBarrierParams, Site, TranscribedNlp};

/// Ringing score above which a control is flagged.
pub const RINGING_THRESHOLD: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Trapezoidal rule, states and controls at the mesh nodes.
    Tr,
    /// Separated Hermite-Simpson: nodes plus midpoints.
    Hs,
    /// Radau IIA on the `p` right Radau points of each interval.
    Lgr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollocationScheme {
    pub kind: SchemeKind,
    /// Number of Radau points (LGR only).
    pub p: usize,
    radau: Vec<f64>,
    radau_weights: Vec<f64>,
}

impl CollocationScheme {
    pub fn trapezoidal() -> Self {
        Self { kind: SchemeKind::Tr, p: 1, radau: Vec::new(), radau_weights: Vec::new() }
    }

    pub fn hermite_simpson() -> Self {
        Self { kind: SchemeKind::Hs, p: 2, radau: Vec::new(), radau_weights: Vec::new() }
    }

    pub fn radau(p: usize) -> Result<Self> {
        if !(1..=30).contains(&p) {
            return Err(Error::Input(format!("LGR needs 1 ≤ p ≤ 30, got {p}")));
        }
        let rule = gauss_radau_right(p);
        Ok(Self { kind: SchemeKind::Lgr, p, radau: rule.nodes, radau_weights: rule.weights })
    }

    /// `p` is ignored unless `kind` is LGR.
    pub fn new(kind: SchemeKind, p: usize) -> Result<Self> {
        match kind {
            SchemeKind::Tr => Ok(Self::trapezoidal()),
            SchemeKind::Hs => Ok(Self::hermite_simpson()),
            SchemeKind::Lgr => Self::radau(p),
        }
    }

    /// Collocation abscissae on `[-1, 1]`.
    pub fn nodes(&self) -> Vec<f64> {
        match self.kind {
            SchemeKind::Tr => vec![-1.0, 1.0],
            SchemeKind::Hs => vec![-1.0, 0.0, 1.0],
            SchemeKind::Lgr => self.radau.clone(),
        }
    }

    /// Degree of the finite element space the solution is embedded in.
    pub fn embedding_degree(&self) -> usize {
        match self.kind {
            SchemeKind::Tr => 1,
            SchemeKind::Hs => 3,
            SchemeKind::Lgr => self.p,
        }
    }
}

type Rows = Vec<Vec<(usize, f64)>>;

/// Variable numbering and linear maps of a collocation discretization.
#[derive(Clone, Debug)]
pub struct CollocationTranscription {
    pub scheme: CollocationScheme,
    mesh: Mesh,
    n_y: usize,
    n_z: usize,
    n_vars: usize,
    y_basis: Option<LagrangeBasis>,
    z_basis: Option<LagrangeBasis>,
}

impl CollocationTranscription {
    pub fn new(problem: &DynamicProblem, mesh: Mesh, scheme: CollocationScheme) -> Result<Self> {
        if (mesh.t0() - problem.t0).abs() > 1e-12 * (1.0 + problem.t0.abs())
            || (mesh.t_end() - problem.t_end).abs() > 1e-12 * (1.0 + problem.t_end.abs())
        {
            return Err(Error::Input("mesh does not cover the problem horizon".into()));
        }
        let (n_y, n_z) = (problem.n_y, problem.n_z);
        let n = mesh.n_intervals();
        let w = 2 * n_y + n_z;
        let (n_vars, y_basis, z_basis) = match scheme.kind {
            SchemeKind::Tr => ((n + 1) * w, None, None),
            SchemeKind::Hs => ((2 * n + 1) * w, None, None),
            SchemeKind::Lgr => {
                let mut yn = vec![-1.0];
                yn.extend_from_slice(&scheme.radau);
                (n_y + n * scheme.p * (n_y + n_z), Some(LagrangeBasis::new(yn)), Some(LagrangeBasis::new(scheme.radau.clone())))
            }
        };
        Ok(Self { scheme, mesh, n_y, n_z, n_vars, y_basis, z_basis })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn width(&self) -> usize {
        2 * self.n_y + self.n_z
    }

    // TR: point k is mesh node k. HS: point 2k is node k, 2k + 1 the midpoint of interval k.
    fn y_var(&self, point: usize, c: usize) -> usize {
        point * self.width() + c
    }

    fn v_var(&self, point: usize, c: usize) -> usize {
        point * self.width() + self.n_y + c
    }

    fn z_var(&self, point: usize, c: usize) -> usize {
        point * self.width() + 2 * self.n_y + c
    }

    // LGR: local node 0 is the left endpoint, 1..=p the Radau points.
    fn lgr_y(&self, i: usize, l: usize, c: usize) -> usize {
        let p = self.scheme.p;
        let stride = self.n_y + self.n_z;
        match (i, l) {
            (0, 0) => c,
            (_, 0) => self.lgr_y(i - 1, p, c),
            _ => self.n_y + (i * p + l - 1) * stride + c,
        }
    }

    fn lgr_z(&self, i: usize, j: usize, c: usize) -> usize {
        self.n_y + (i * self.scheme.p + j) * (self.n_y + self.n_z) + self.n_y + c
    }

    /// Linear maps from the variables to `(y, z)` at reference point `xi` of interval `i`.
    pub fn eval_rows(&self, i: usize, xi: f64) -> Rows {
        let (n_y, n_z) = (self.n_y, self.n_z);
        let mut rows: Rows = Vec::with_capacity(n_y + n_z);
        match self.scheme.kind {
            SchemeKind::Tr => {
                let s = 0.5 * (xi + 1.0);
                for c in 0..n_y {
                    rows.push(vec![(self.y_var(i, c), 1.0 - s), (self.y_var(i + 1, c), s)]);
                }
                for c in 0..n_z {
                    rows.push(vec![(self.z_var(i, c), 1.0 - s), (self.z_var(i + 1, c), s)]);
                }
            }
            SchemeKind::Hs => {
                let (a, b) = self.mesh.interval(i);
                let h = b - a;
                let s = 0.5 * (xi + 1.0);
                let (s2, s3) = (s * s, s * s * s);
                let (l, m, r) = (2 * i, 2 * i + 1, 2 * i + 2);
                for c in 0..n_y {
                    rows.push(vec![
                        (self.y_var(l, c), 2.0 * s3 - 3.0 * s2 + 1.0),
                        (self.v_var(l, c), h * (s3 - 2.0 * s2 + s)),
                        (self.y_var(r, c), 3.0 * s2 - 2.0 * s3),
                        (self.v_var(r, c), h * (s3 - s2)),
                    ]);
                }
                for c in 0..n_z {
                    rows.push(vec![
                        (self.z_var(l, c), 0.5 * xi * (xi - 1.0)),
                        (self.z_var(m, c), 1.0 - xi * xi),
                        (self.z_var(r, c), 0.5 * xi * (xi + 1.0)),
                    ]);
                }
            }
            SchemeKind::Lgr => {
                let p = self.scheme.p;
                let mut phi = vec![0.0; p + 1];
                self.y_basis.as_ref().unwrap().values(xi, &mut phi);
                for c in 0..n_y {
                    rows.push((0..=p).map(|l| (self.lgr_y(i, l, c), phi[l])).collect());
                }
                let mut psi = vec![0.0; p];
                self.z_basis.as_ref().unwrap().values(xi, &mut psi);
                for c in 0..n_z {
                    rows.push((0..p).map(|j| (self.lgr_z(i, j, c), psi[j])).collect());
                }
            }
        }
        for r in &mut rows {
            r.retain(|&(_, v)| v != 0.0);
        }
        rows
    }

    /// Collocation sites: time, weight and the maps to `(ẏ, y, z)`.
    fn sites(&self) -> Vec<(f64, f64, Rows)> {
        let (n_y, n_z) = (self.n_y, self.n_z);
        let n = self.mesh.n_intervals();
        let nodal = |point: usize| -> Rows {
            let mut r: Rows = (0..n_y).map(|c| vec![(self.v_var(point, c), 1.0)]).collect();
            r.extend((0..n_y).map(|c| vec![(self.y_var(point, c), 1.0)]));
            r.extend((0..n_z).map(|c| vec![(self.z_var(point, c), 1.0)]));
            r
        };
        let len = |i: usize| if i < n { let (a, b) = self.mesh.interval(i); b - a } else { 0.0 };
        let mut out = Vec::new();
        match self.scheme.kind {
            SchemeKind::Tr => {
                for k in 0..=n {
                    let w = 0.5 * (len(k) + if k > 0 { len(k - 1) } else { 0.0 });
                    out.push((self.mesh.nodes()[k], w, nodal(k)));
                }
            }
            SchemeKind::Hs => {
                for k in 0..=n {
                    let w = (len(k) + if k > 0 { len(k - 1) } else { 0.0 }) / 6.0;
                    out.push((self.mesh.nodes()[k], w, nodal(2 * k)));
                    if k < n {
                        let (a, b) = self.mesh.interval(k);
                        out.push((0.5 * (a + b), 4.0 * (b - a) / 6.0, nodal(2 * k + 1)));
                    }
                }
            }
            SchemeKind::Lgr => {
                let p = self.scheme.p;
                let basis = self.y_basis.as_ref().unwrap();
                let mut dphi = vec![0.0; p + 1];
                for (i, (a, b)) in self.mesh.intervals().enumerate() {
                    let half = 0.5 * (b - a);
                    for j in 0..p {
                        let xi = self.scheme.radau[j];
                        basis.derivatives(xi, &mut dphi);
                        let mut r: Rows = (0..n_y).map(|c| (0..=p).map(|l| (self.lgr_y(i, l, c), dphi[l] / half)).collect()).collect();
                        r.extend((0..n_y).map(|c| vec![(self.lgr_y(i, j + 1, c), 1.0)]));
                        r.extend((0..n_z).map(|c| vec![(self.lgr_z(i, j, c), 1.0)]));
                        out.push((a + half * (xi + 1.0), self.scheme.radau_weights[j] * half, r));
                    }
                }
            }
        }
        out
    }

    /// Defect rows linking the nodal derivatives to the states (TR and HS).
    fn defect_rows(&self) -> Vec<LinearRow> {
        let mut rows = Vec::new();
        for (i, (a, b)) in self.mesh.intervals().enumerate() {
            let h = b - a;
            let scale = 1.0 / h.sqrt();
            for c in 0..self.n_y {
                match self.scheme.kind {
                    SchemeKind::Tr => rows.push(LinearRow {
                        dofs: vec![self.y_var(i, c), self.v_var(i, c), self.y_var(i + 1, c), self.v_var(i + 1, c)],
                        coefs: vec![-scale, -0.5 * h * scale, scale, -0.5 * h * scale],
                    }),
                    SchemeKind::Hs => {
                        let (l, m, r) = (2 * i, 2 * i + 1, 2 * i + 2);
                        rows.push(LinearRow {
                            dofs: vec![self.y_var(l, c), self.v_var(l, c), self.y_var(m, c), self.y_var(r, c), self.v_var(r, c)],
                            coefs: vec![-0.5 * scale, -h / 8.0 * scale, scale, -0.5 * scale, h / 8.0 * scale],
                        });
                        rows.push(LinearRow {
                            dofs: vec![self.y_var(l, c), self.v_var(l, c), self.v_var(m, c), self.y_var(r, c), self.v_var(r, c)],
                            coefs: vec![-scale, -h / 6.0 * scale, -4.0 * h / 6.0 * scale, scale, -h / 6.0 * scale],
                        });
                    }
                    SchemeKind::Lgr => {}
                }
            }
        }
        rows
    }

    /// The shared [`Layout`]: one block per collocation site, the barrier
    /// enforced at the sites only.
    pub fn layout(&self, problem: &DynamicProblem) -> Result<Layout> {
        let m = 2 * self.n_y + self.n_z;
        let mut blocks = Vec::new();
        for (t, w, rows) in self.sites() {
            let mut dofs: Vec<usize> = rows.iter().flatten().map(|&(d, _)| d).collect();
            dofs.sort_unstable();
            dofs.dedup();
            let nd = dofs.len();
            let mut map = vec![0.0; m * nd];
            for (r, row) in rows.iter().enumerate() {
                for &(d, v) in row {
                    map[r * nd + dofs.binary_search(&d).unwrap()] += v;
                }
            }
            blocks.push(Block { dofs, sites: vec![Site { t, w_obj: w, w_res: w.sqrt(), w_bar: w, map }] });
        }
        let mut point_rows = Vec::new();
        for &t in &problem.point_times {
            let i = self.mesh.locate(t)?;
            let (a, b) = self.mesh.interval(i);
            let rows = self.eval_rows(i, 2.0 * (t - a) / (b - a) - 1.0);
            point_rows.extend(rows.into_iter().take(self.n_y));
        }
        Ok(Layout { n_vars: self.n_vars, blocks, points: point_block_from_rows(point_rows), linear_rows: self.defect_rows() })
    }

    /// Variables holding `z[c]` at the collocation sites.
    pub fn z_vars(&self, c: usize) -> Vec<usize> {
        let n = self.mesh.n_intervals();
        match self.scheme.kind {
            SchemeKind::Tr => (0..=n).map(|k| self.z_var(k, c)).collect(),
            SchemeKind::Hs => (0..=2 * n).map(|k| self.z_var(k, c)).collect(),
            SchemeKind::Lgr => (0..n).flat_map(|i| (0..self.scheme.p).map(move |j| (i, j))).map(|(i, j)| self.lgr_z(i, j, c)).collect(),
        }
    }

    /// Samples `guess` at the collocation points.
    pub fn sample(&self, guess: &Trajectory) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n_vars];
        let (n_y, n_z) = (self.n_y, self.n_z);
        let n = self.mesh.n_intervals();
        let fill_point = |x: &mut Vec<f64>, point: usize, t: f64| -> Result<()> {
            let v = guess.evaluate(t, 0)?;
            let d = guess.evaluate(t, 1)?;
            for c in 0..n_y {
                x[self.y_var(point, c)] = v[c];
                x[self.v_var(point, c)] = d[c];
            }
            for c in 0..n_z {
                x[self.z_var(point, c)] = v[n_y + c];
            }
            Ok(())
        };
        match self.scheme.kind {
            SchemeKind::Tr => {
                for k in 0..=n {
                    fill_point(&mut x, k, self.mesh.nodes()[k])?;
                }
            }
            SchemeKind::Hs => {
                for k in 0..=n {
                    fill_point(&mut x, 2 * k, self.mesh.nodes()[k])?;
                    if k < n {
                        let (a, b) = self.mesh.interval(k);
                        fill_point(&mut x, 2 * k + 1, 0.5 * (a + b))?;
                    }
                }
            }
            SchemeKind::Lgr => {
                let v = guess.evaluate(self.mesh.t0(), 0)?;
                x[..n_y].copy_from_slice(&v[..n_y]);
                for (i, (a, b)) in self.mesh.intervals().enumerate() {
                    for (j, &xi) in self.scheme.radau.iter().enumerate() {
                        let v = guess.evaluate(a + 0.5 * (b - a) * (xi + 1.0), 0)?;
                        for c in 0..n_y {
                            x[self.lgr_y(i, j + 1, c)] = v[c];
                        }
                        for c in 0..n_z {
                            x[self.lgr_z(i, j, c)] = v[n_y + c];
                        }
                    }
                }
            }
        }
        Ok(x)
    }

    /// Embeds the collocation polynomials into the finite element space of
    /// degree [`CollocationScheme::embedding_degree`]. `z` is continuous for
    /// TR and HS and discontinuous for LGR.
    pub fn embed(&self, x: &[f64]) -> Result<Trajectory> {
        crate::error::check_len("collocation variables", self.n_vars, x.len())?;
        let p = self.scheme.embedding_degree();
        let space = FESpace::new(self.mesh.clone(), p, self.n_y, self.n_z, self.scheme.kind != SchemeKind::Lgr)?;
        let mut coeffs = vec![0.0; space.dim()];
        let nodes = space.basis().nodes().to_vec();
        for i in 0..self.mesh.n_intervals() {
            for (l, &xi) in nodes.iter().enumerate() {
                let rows = self.eval_rows(i, xi);
                for (r, row) in rows.iter().enumerate() {
                    let v: f64 = row.iter().map(|&(d, w)| w * x[d]).sum();
                    let dof = if r < self.n_y { space.y_dof(i, l, r) } else { space.z_dof(i, l, r - self.n_y) };
                    coeffs[dof] = v;
                }
            }
        }
        Trajectory::new(space, coeffs)
    }
}

/// Result of a collocation solve; `report.trajectory` is the embedding.
#[derive(Clone, Debug)]
pub struct CollocationReport {
    pub report: SolveReport,
    pub x: Vec<f64>,
    pub transcription: CollocationTranscription,
}

/// Solves the penalty-relaxed collocation NLP with the shared continuation.
pub fn solve_collocation(problem: &DynamicProblem, mesh: &Mesh, scheme: CollocationScheme, config: &SolverConfig) -> Result<CollocationReport> {
    config.validate()?;
    let start = Instant::now();
    let tr = CollocationTranscription::new(problem, mesh.clone(), scheme)?;
    let layout = Arc::new(tr.layout(problem)?);
    let first = config.stages()[0];
    let nlp = TranscribedNlp::new(problem.clone(), layout, first);
    let guess_space = FESpace::new(mesh.clone(), 1, problem.n_y, problem.n_z, true)?;
    let guess = initial_guess(problem, &guess_space, GuessStrategy::LinearBoundary);
    let mut x0 = tr.sample(&guess)?;
    let threshold = first.tau / first.l_omega();
    for c in 0..problem.n_z {
        if problem.z_kinds[c] == AlgebraicKind::Nonnegative {
            for d in tr.z_vars(c) {
                x0[d] = x0[d].max(threshold);
            }
        }
    }
    let min = minimize(&nlp, x0, config)?;
    let trajectory = tr.embed(&min.x)?;
    let r_feas = feasibility_residual(problem, &trajectory)?;
    let report = SolveReport {
        trajectory,
        objective: min.objective,
        r_feas,
        g_opt: None,
        status: min.status,
        stages: min.stages,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(CollocationReport { report, x: min.x, transcription: tr })
}

/// Builds the collocation NLP for fixed `(ω, τ)`.
pub fn transcribe_collocation(
    problem: &DynamicProblem,
    mesh: &Mesh,
    scheme: CollocationScheme,
    params: PenaltyBarrierParams,
) -> Result<(CollocationTranscription, TranscribedNlp)> {
    let tr = CollocationTranscription::new(problem, mesh.clone(), scheme)?;
    let layout = Arc::new(tr.layout(problem)?);
    Ok((tr, TranscribedNlp::new(problem.clone(), layout, params)))
}

/// Sign changes of the second difference of uniformly spaced samples,
/// divided by the number of samples. Second differences below
/// `1e-9 · max(1, max|s|)` count as zero and are skipped.
pub fn detect_ringing(samples: &[f64]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::Input(format!("ringing detection needs at least 5 samples, got {}", samples.len())));
    }
    let scale = samples.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut last = 0.0f64;
    let mut changes = 0usize;
    for w in samples.windows(3) {
        let d = w[2] - 2.0 * w[1] + w[0];
        if d.abs() <= tol {
            continue;
        }
        if last != 0.0 && d.signum() != last {
            changes += 1;
        }
        last = d.signum();
    }
    Ok(changes as f64 / samples.len() as f64)
}

/// [`detect_ringing`] on `n` uniform samples of `control(y, z)` over `interval`.
pub fn ringing_score(
    trajectory: &Trajectory,
    control: impl Fn(&[f64], &[f64]) -> f64,
    interval: (f64, f64),
    n: usize,
) -> Result<f64> {
    let n_y = trajectory.space().n_y;
    let (a, b) = interval;
    let samples = (0..n)
        .map(|k| {
            let t = a + (b - a) * (k as f64 + 0.5) / n as f64;
            trajectory.evaluate(t, 0).map(|v| control(&v[..n_y], &v[n_y..]))
        })
        .collect::<Result<Vec<f64>>>()?;
    detect_ringing(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DaeModel, Dims};
    use crate::scalar::Scalar;

    struct Decay;
    impl DaeModel for Decay {
        fn objective<S: Scalar>(&self, _yd: &[S], _y: &[S], _z: &[S], _t: f64) -> S {
            S::constant(0.0)
        }
        fn residual<S: Scalar>(&self, yd: &[S], y: &[S], _z: &[S], _t: f64, out: &mut [S]) {
            out[0] = yd[0] + y[0];
        }
        fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
            out[0] = yp[0] - 1.0;
        }
    }

    fn decay() -> DynamicProblem {
        DynamicProblem::new("decay", Dims { n_y: 1, n_z: 0, n_c: 1, n_b: 1 }, (0.0, 1.0), vec![0.0], Decay).unwrap()
    }

    fn endpoint_error(scheme: CollocationScheme, n: usize) -> f64 {
        let mesh = Mesh::uniform(0.0, 1.0, n).unwrap();
        let r = solve_collocation(&decay(), &mesh, scheme, &SolverConfig::default()).unwrap();
        assert!(r.report.status.is_converged(), "{:?}", r.report.status);
        (r.report.trajectory.evaluate(1.0, 0).unwrap()[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn ringing_scores() {
        assert_eq!(detect_ringing(&[2.0; 10]).unwrap(), 0.0);
        let alt: Vec<f64> = (0..100).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(detect_ringing(&alt).unwrap() > 0.95);
        let sine: Vec<f64> = (0..100).map(|k| (2.0 * std::f64::consts::PI * k as f64 / 99.0).sin()).collect();
        assert!(detect_ringing(&sine).unwrap() <= 0.05);
        assert!(detect_ringing(&[1.0; 4]).is_err());
    }

    #[test]
    fn lgr_is_exact_enough_on_decay() {
        let e = endpoint_error(CollocationScheme::radau(5).unwrap(), 4);
        assert!(e < 1e-8, "{e:e}");
    }

    #[test]
    fn classical_orders() {
        let ns = [4, 8, 16];
        let schemes = [
            (CollocationScheme::trapezoidal(), 2.0),
            (CollocationScheme::hermite_simpson(), 4.0),
            (CollocationScheme::radau(2).unwrap(), 3.0),
        ];
        for (scheme, order) in schemes {
            let pts: Vec<(f64, f64)> = ns.iter().map(|&n| (1.0 / n as f64, endpoint_error(scheme.clone(), n))).collect();
            let q = crate::analysis::estimate_order(&pts).unwrap();
            assert!((q - order).abs() <= 0.2, "{:?}: order {q}, {pts:?}", scheme.kind);
        }
    }

    #[test]
    fn embedding_reproduces_nodal_values() {
        let p = decay();
        let mesh = Mesh::uniform(0.0, 1.0, 3).unwrap();
        for scheme in [CollocationScheme::trapezoidal(), CollocationScheme::hermite_simpson(), CollocationScheme::radau(3).unwrap()] {
            let tr = CollocationTranscription::new(&p, mesh.clone(), scheme).unwrap();
            let space = FESpace::new(mesh.clone(), 2, 1, 0, true).unwrap();
            let guess = Trajectory::interpolate(space, |t| vec![t * t]);
            let x = tr.sample(&guess).unwrap();
            let e = tr.embed(&x).unwrap();
            for t in [0.0, 1.0 / 3.0, 1.0] {
                assert!((e.evaluate(t, 0).unwrap()[0] - t * t).abs() < 1e-12);
            }
        }
    }
}
