//! The dynamic optimization problem model.
//!
//! A problem minimizes `∫ f(ẏ, y, z, t) dt` over a horizon subject to the
//! point constraints `b(y(t_1), …, y(t_M)) = 0`, the path residual
//! `c(ẏ, y, z, t) = 0` and `z ≥ 0` for every component marked
//! [`AlgebraicKind::Nonnegative`].

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::fem::Trajectory;
use crate::quadrature::gauss_legendre;
use crate::scalar::{Dual16, Dual32, Dual8, Hyper16, Hyper32, Hyper8, Scalar};

/// Problem functions, written once over a generic scalar.
///
/// Implementations must be pure: the same inputs always give the same outputs.
pub trait DaeModel: Send + Sync {
    /// Integrand `f(ẏ, y, z, t)`.
    fn objective<S: Scalar>(&self, ydot: &[S], y: &[S], z: &[S], t: f64) -> S;

    /// Path residual `c(ẏ, y, z, t)`, written into `out` (length `n_c`).
    fn residual<S: Scalar>(&self, ydot: &[S], y: &[S], z: &[S], t: f64, out: &mut [S]);

    /// Point residual `b`, where `y_points` holds `y(t_1), …, y(t_M)` back to back.
    fn point_constraints<S: Scalar>(&self, y_points: &[S], out: &mut [S]);
}

macro_rules! erased_model {
    ($($s:ty => $obj:ident, $res:ident, $pts:ident;)*) => {
        /// Object-safe view of a [`DaeModel`], with one method per supported scalar.
        pub trait ErasedModel: Send + Sync {
            $(
                fn $obj(&self, ydot: &[$s], y: &[$s], z: &[$s], t: f64) -> $s;
                fn $res(&self, ydot: &[$s], y: &[$s], z: &[$s], t: f64, out: &mut [$s]);
                fn $pts(&self, y_points: &[$s], out: &mut [$s]);
            )*
        }

        impl<M: DaeModel> ErasedModel for M {
            $(
                fn $obj(&self, ydot: &[$s], y: &[$s], z: &[$s], t: f64) -> $s {
                    self.objective(ydot, y, z, t)
                }
                fn $res(&self, ydot: &[$s], y: &[$s], z: &[$s], t: f64, out: &mut [$s]) {
                    self.residual(ydot, y, z, t, out)
                }
                fn $pts(&self, y_points: &[$s], out: &mut [$s]) {
                    self.point_constraints(y_points, out)
                }
            )*
        }

        $(
            impl ModelScalar for $s {
                fn objective(m: &dyn ErasedModel, ydot: &[Self], y: &[Self], z: &[Self], t: f64) -> Self {
                    m.$obj(ydot, y, z, t)
                }
                fn residual(m: &dyn ErasedModel, ydot: &[Self], y: &[Self], z: &[Self], t: f64, out: &mut [Self]) {
                    m.$res(ydot, y, z, t, out)
                }
                fn points(m: &dyn ErasedModel, y_points: &[Self], out: &mut [Self]) {
                    m.$pts(y_points, out)
                }
            }
        )*
    };
}

/// Scalars that can be pushed through an [`ErasedModel`].
pub trait ModelScalar: Scalar {
    fn objective(m: &dyn ErasedModel, ydot: &[Self], y: &[Self], z: &[Self], t: f64) -> Self;
    fn residual(m: &dyn ErasedModel, ydot: &[Self], y: &[Self], z: &[Self], t: f64, out: &mut [Self]);
    fn points(m: &dyn ErasedModel, y_points: &[Self], out: &mut [Self]);
}

erased_model! {
    f64 => objective_f64, residual_f64, points_f64;
    Dual8 => objective_d8, residual_d8, points_d8;
    Dual16 => objective_d16, residual_d16, points_d16;
    Dual32 => objective_d32, residual_d32, points_d32;
    Hyper8 => objective_h8, residual_h8, points_h8;
    Hyper16 => objective_h16, residual_h16, points_h16;
    Hyper32 => objective_h32, residual_h32, points_h32;
}

/// Sign restriction on an algebraic component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraicKind {
    /// `z ≥ 0`, kept strictly positive by the log barrier.
    Nonnegative,
    /// No sign restriction and no barrier term.
    Free,
}

/// Boundary data used to build initial guesses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuessHints {
    pub y_start: Option<Vec<f64>>,
    pub y_end: Option<Vec<f64>>,
    pub z_value: Option<Vec<f64>>,
}

/// Problem dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n_y: usize,
    pub n_z: usize,
    pub n_c: usize,
    pub n_b: usize,
}

/// A dynamic optimization problem instance.
#[derive(Clone)]
pub struct DynamicProblem {
    pub name: String,
    pub n_y: usize,
    pub n_z: usize,
    pub n_c: usize,
    pub n_b: usize,
    pub t0: f64,
    pub t_end: f64,
    pub point_times: Vec<f64>,
    pub z_kinds: Vec<AlgebraicKind>,
    pub hints: GuessHints,
    model: Arc<dyn ErasedModel>,
}

impl fmt::Debug for DynamicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicProblem")
            .field("name", &self.name)
            .field("n_y", &self.n_y)
            .field("n_z", &self.n_z)
            .field("n_c", &self.n_c)
            .field("n_b", &self.n_b)
            .field("horizon", &(self.t0, self.t_end))
            .field("point_times", &self.point_times)
            .finish()
    }
}

impl DynamicProblem {
    /// Builds a problem; every `z` component defaults to [`AlgebraicKind::Nonnegative`].
    pub fn new<M: DaeModel + 'static>(
        name: impl Into<String>,
        dims: Dims,
        horizon: (f64, f64),
        point_times: Vec<f64>,
        model: M,
    ) -> Result<Self> {
        Self::from_arc(name, dims, horizon, point_times, Arc::new(model))
    }

    pub fn from_arc(
        name: impl Into<String>,
        dims: Dims,
        horizon: (f64, f64),
        point_times: Vec<f64>,
        model: Arc<dyn ErasedModel>,
    ) -> Result<Self> {
        let (t0, t_end) = horizon;
        if !(t0.is_finite() && t_end.is_finite() && t0 < t_end) {
            return Err(Error::Input(format!("horizon ({t0}, {t_end}) must satisfy t0 < tE")));
        }
        if let Some(t) = point_times.iter().find(|t| !(t0..=t_end).contains(*t)) {
            return Err(Error::Input(format!("point time {t} outside [{t0}, {t_end}]")));
        }
        if dims.n_b > 0 && point_times.is_empty() {
            return Err(Error::Input("point constraints need at least one point time".into()));
        }
        Ok(Self {
            name: name.into(),
            n_y: dims.n_y,
            n_z: dims.n_z,
            n_c: dims.n_c,
            n_b: dims.n_b,
            t0,
            t_end,
            point_times,
            z_kinds: vec![AlgebraicKind::Nonnegative; dims.n_z],
            hints: GuessHints::default(),
            model,
        })
    }

    pub fn with_z_kinds(mut self, kinds: Vec<AlgebraicKind>) -> Result<Self> {
        check_len("z kinds", self.n_z, kinds.len())?;
        self.z_kinds = kinds;
        Ok(self)
    }

    pub fn with_hints(mut self, hints: GuessHints) -> Result<Self> {
        if let Some(v) = &hints.y_start {
            check_len("y_start hint", self.n_y, v.len())?;
        }
        if let Some(v) = &hints.y_end {
            check_len("y_end hint", self.n_y, v.len())?;
        }
        if let Some(v) = &hints.z_value {
            check_len("z hint", self.n_z, v.len())?;
        }
        self.hints = hints;
        Ok(self)
    }

    pub fn dims(&self) -> Dims {
        Dims { n_y: self.n_y, n_z: self.n_z, n_c: self.n_c, n_b: self.n_b }
    }

    pub fn model(&self) -> &dyn ErasedModel {
        &*self.model
    }

    /// Number of inputs of a path function: `ẏ`, `y`, `z`.
    pub fn local_inputs(&self) -> usize {
        2 * self.n_y + self.n_z
    }

    /// Indices of the `z` components that carry a barrier.
    pub fn barrier_components(&self) -> Vec<usize> {
        (0..self.n_z).filter(|&j| self.z_kinds[j] == AlgebraicKind::Nonnegative).collect()
    }

    fn check_path_args(&self, ydot: &[f64], y: &[f64], z: &[f64]) -> Result<()> {
        check_len("ydot", self.n_y, ydot.len())?;
        check_len("y", self.n_y, y.len())?;
        check_len("z", self.n_z, z.len())
    }

    /// `c(ẏ, y, z, t)`.
    pub fn evaluate_dae_residual(&self, ydot: &[f64], y: &[f64], z: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_path_args(ydot, y, z)?;
        let mut out = vec![0.0; self.n_c];
        f64::residual(self.model(), ydot, y, z, t, &mut out);
        Ok(out)
    }

    /// `f(ẏ, y, z, t)`.
    pub fn evaluate_objective(&self, ydot: &[f64], y: &[f64], z: &[f64], t: f64) -> Result<f64> {
        self.check_path_args(ydot, y, z)?;
        Ok(f64::objective(self.model(), ydot, y, z, t))
    }

    /// `b(y(t_1), …, y(t_M))` with the point values given back to back.
    pub fn evaluate_point_constraints(&self, y_points: &[f64]) -> Result<Vec<f64>> {
        check_len("point values", self.n_y * self.point_times.len(), y_points.len())?;
        let mut out = vec![0.0; self.n_b];
        f64::points(self.model(), y_points, &mut out);
        Ok(out)
    }
}

/// Independent feasibility measure `∫‖c‖² dt + ‖b‖²` using a Gauss rule with
/// `n_points` nodes per mesh interval.
pub fn feasibility_residual_exact(problem: &DynamicProblem, trajectory: &Trajectory, n_points: usize) -> Result<f64> {
    let space = trajectory.space();
    check_len("trajectory n_y", problem.n_y, space.n_y)?;
    check_len("trajectory n_z", problem.n_z, space.n_z)?;
    let mesh = space.mesh();
    if (mesh.t0() - problem.t0).abs() > 1e-12 * (1.0 + problem.t0.abs())
        || (mesh.t_end() - problem.t_end).abs() > 1e-12 * (1.0 + problem.t_end.abs())
    {
        return Err(Error::Input("trajectory mesh does not cover the problem horizon".into()));
    }
    let rule = gauss_legendre(n_points.max(1));
    let mut total = 0.0;
    let mut c = vec![0.0; problem.n_c];
    let mut vals = trajectory.scratch();
    for (i, (a, b)) in mesh.intervals().enumerate() {
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = a + half * (xi + 1.0);
            trajectory.evaluate_in(i, t, &mut vals);
            f64::residual(problem.model(), &vals.ydot, &vals.y, &vals.z, t, &mut c);
            let sq: f64 = c.iter().map(|v| v * v).sum();
            if !sq.is_finite() {
                return Err(Error::Evaluation { what: "path residual".into(), t });
            }
            acc += w * half * sq;
        }
        total += acc;
    }
    if problem.n_b > 0 {
        let mut pts = Vec::with_capacity(problem.n_y * problem.point_times.len());
        for &tk in &problem.point_times {
            pts.extend_from_slice(&trajectory.evaluate(tk, 0)?[..problem.n_y]);
        }
        let b = problem.evaluate_point_constraints(&pts)?;
        total += b.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// [`feasibility_residual_exact`] with the default check rule of `2p + 4` nodes.
pub fn feasibility_residual(problem: &DynamicProblem, trajectory: &Trajectory) -> Result<f64> {
    feasibility_residual_exact(problem, trajectory, 2 * trajectory.space().p + 4)
}
