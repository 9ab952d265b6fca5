//! Conversion of Bolza problems with free end times, parameters and path
//! inequalities into the fixed-horizon form of [`DynamicProblem`].
//!
//! The converted problem lives on `t ∈ (0, 1)` with `τ = τ0 + (τE - τ0) t`.
//! Its state is `y = (χ, κ, ξ, τ0, τE)` where `κ` is a constant that equals
//! the terminal cost, so `∫₀¹ κ dt` reproduces the Mayer term. `ξ`, `τ0`
//! and `τE` are constant states. Its algebraic part is `z = (s, υ)` where
//! the slacks `s ≥ 0` turn `c_i ≤ 0` into `s + c_i = 0`, and every free
//! input is split as `υ = υ⁺ - υ⁻`.
//!
//! The split is degenerate under the log barrier: along `υ⁺ + υ⁻` the
//! barrier keeps decreasing, so unless the cost bounds both parts they drift
//! apart. [`InputKind::Unrestricted`] keeps such an input as one component
//! without sign restriction instead.

use crate::error::{Error, Result};
use crate::problem::{AlgebraicKind, DaeModel, Dims, DynamicProblem, GuessHints};
use crate::scalar::Scalar;

/// Problem functions of a Bolza problem. `χ̇` is `dχ/dτ`.
pub trait BolzaModel: Send + Sync {
    /// Running cost `f_r`.
    fn running<S: Scalar>(&self, _chi_dot: &[S], _chi: &[S], _u: &[S], _xi: &[S], _tau: S) -> S {
        S::constant(0.0)
    }

    /// Terminal cost `f_E(χ(τE), τE)`.
    fn terminal<S: Scalar>(&self, _chi_end: &[S], _tau_end: S) -> S {
        S::constant(0.0)
    }

    /// Equality path constraints `c_e = 0`.
    fn equalities<S: Scalar>(&self, chi_dot: &[S], chi: &[S], u: &[S], xi: &[S], tau: S, out: &mut [S]);

    /// Inequality path constraints `c_i ≤ 0`.
    fn inequalities<S: Scalar>(&self, _chi_dot: &[S], _chi: &[S], _u: &[S], _xi: &[S], _tau0: S, _tau_end: S, _tau: S, _out: &mut [S]) {}

    /// Boundary conditions `b_B(χ(τ0), χ(τE), τ0, τE) = 0`.
    fn boundary<S: Scalar>(&self, chi0: &[S], chi_end: &[S], tau0: S, tau_end: S, out: &mut [S]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BolzaDims {
    pub n_chi: usize,
    pub n_u: usize,
    pub n_xi: usize,
    /// Number of equality path constraints.
    pub n_e: usize,
    /// Number of inequality path constraints.
    pub n_i: usize,
    /// Number of boundary conditions.
    pub n_bb: usize,
}

/// Sign restriction of an input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    /// Split into `υ⁺ - υ⁻` with both parts nonnegative.
    Free,
    /// Already `υ ≥ 0`; kept as one nonnegative component.
    Nonnegative,
    /// One component with no sign restriction and no barrier.
    Unrestricted,
}

/// An end time of the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndTime {
    Fixed(f64),
    /// Optimized; the value seeds the initial guess.
    Free(f64),
}

impl EndTime {
    fn value(&self) -> f64 {
        match *self {
            EndTime::Fixed(v) | EndTime::Free(v) => v,
        }
    }
}

/// A Bolza problem ready for [`convert_bolza`].
#[derive(Clone, Debug)]
pub struct BolzaProblem<M> {
    pub name: String,
    pub dims: BolzaDims,
    pub model: M,
    pub tau0: EndTime,
    pub tau_end: EndTime,
    pub inputs: Vec<InputKind>,
    /// Initial guess for `χ` at `τ0` and `τE`.
    pub chi_start: Option<Vec<f64>>,
    pub chi_end: Option<Vec<f64>>,
}

impl<M: BolzaModel> BolzaProblem<M> {
    /// All inputs free, both end times fixed.
    pub fn new(name: impl Into<String>, dims: BolzaDims, model: M, horizon: (f64, f64)) -> Self {
        Self {
            name: name.into(),
            dims,
            model,
            tau0: EndTime::Fixed(horizon.0),
            tau_end: EndTime::Fixed(horizon.1),
            inputs: vec![InputKind::Free; dims.n_u],
            chi_start: None,
            chi_end: None,
        }
    }
}

/// Index layout of the converted problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvertedLayout {
    pub n_chi: usize,
    /// Index of `κ` in `y`.
    pub kappa: usize,
    /// First index of `ξ` in `y`.
    pub xi: usize,
    pub tau0: usize,
    pub tau_end: usize,
    /// First slack in `z`; inputs follow the slacks.
    pub slack: usize,
    pub input: usize,
}

struct Converted<M> {
    dims: BolzaDims,
    layout: ConvertedLayout,
    model: M,
    inputs: Vec<InputKind>,
    fixed_tau0: Option<f64>,
    fixed_tau_end: Option<f64>,
}

impl<M> Converted<M> {
    fn n_y(&self) -> usize {
        self.layout.tau_end + 1
    }

    fn inputs<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let mut u = Vec::with_capacity(self.dims.n_u);
        let mut k = self.layout.input;
        for kind in &self.inputs {
            match kind {
                InputKind::Free => {
                    u.push(z[k] - z[k + 1]);
                    k += 2;
                }
                InputKind::Nonnegative | InputKind::Unrestricted => {
                    u.push(z[k]);
                    k += 1;
                }
            }
        }
        u
    }

    fn times<S: Scalar>(&self, y: &[S], t: f64) -> (S, S, S, S) {
        let (t0, te) = (y[self.layout.tau0], y[self.layout.tau_end]);
        let len = te - t0;
        (t0, te, len, t0 + len * t)
    }
}

impl<M: BolzaModel> DaeModel for Converted<M> {
    fn objective<S: Scalar>(&self, ydot: &[S], y: &[S], z: &[S], t: f64) -> S {
        let l = &self.layout;
        let (_, _, len, tau) = self.times(y, t);
        let chi_dot: Vec<S> = ydot[..l.n_chi].iter().map(|&v| v / len).collect();
        let u = self.inputs(z);
        let xi = &y[l.xi..l.xi + self.dims.n_xi];
        len * self.model.running(&chi_dot, &y[..l.n_chi], &u, xi, tau) + y[l.kappa]
    }

    fn residual<S: Scalar>(&self, ydot: &[S], y: &[S], z: &[S], t: f64, out: &mut [S]) {
        let l = &self.layout;
        let d = &self.dims;
        let (t0, te, len, tau) = self.times(y, t);
        let chi_dot: Vec<S> = ydot[..l.n_chi].iter().map(|&v| v / len).collect();
        let chi = &y[..l.n_chi];
        let u = self.inputs(z);
        let xi = &y[l.xi..l.xi + d.n_xi];
        self.model.equalities(&chi_dot, chi, &u, xi, tau, &mut out[..d.n_e]);
        let ineq = &mut out[d.n_e..d.n_e + d.n_i];
        self.model.inequalities(&chi_dot, chi, &u, xi, t0, te, tau, ineq);
        for (k, v) in ineq.iter_mut().enumerate() {
            *v += z[l.slack + k];
        }
        // κ, ξ, τ0 and τE are constant
        for (k, j) in (l.kappa..self.n_y()).enumerate() {
            out[d.n_e + d.n_i + k] = ydot[j];
        }
    }

    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        let l = &self.layout;
        let n_y = self.n_y();
        let (start, end) = (&yp[..n_y], &yp[n_y..]);
        let nb = self.dims.n_bb;
        self.model.boundary(&start[..l.n_chi], &end[..l.n_chi], start[l.tau0], start[l.tau_end], &mut out[..nb]);
        out[nb] = end[l.kappa] - self.model.terminal(&end[..l.n_chi], end[l.tau_end]);
        let mut k = nb + 1;
        if let Some(v) = self.fixed_tau0 {
            out[k] = start[l.tau0] - v;
            k += 1;
        }
        if let Some(v) = self.fixed_tau_end {
            out[k] = start[l.tau_end] - v;
        }
    }
}

/// Converts `bolza` into a problem on `(0, 1)` with point times `[0, 1]`.
pub fn convert_bolza<M: BolzaModel + 'static>(bolza: BolzaProblem<M>) -> Result<(DynamicProblem, ConvertedLayout)> {
    let d = bolza.dims;
    if bolza.inputs.len() != d.n_u {
        return Err(Error::Dimension { what: "input kinds", expected: d.n_u, got: bolza.inputs.len() });
    }
    let (t0, te) = (bolza.tau0.value(), bolza.tau_end.value());
    if !(t0.is_finite() && te.is_finite() && t0 < te) {
        return Err(Error::Input(format!("end times ({t0}, {te}) must satisfy τ0 < τE")));
    }
    let n_chi = d.n_chi;
    let layout = ConvertedLayout {
        n_chi,
        kappa: n_chi,
        xi: n_chi + 1,
        tau0: n_chi + 1 + d.n_xi,
        tau_end: n_chi + 2 + d.n_xi,
        slack: 0,
        input: d.n_i,
    };
    let n_y = layout.tau_end + 1;
    let n_split: usize = bolza.inputs.iter().map(|k| if *k == InputKind::Free { 2 } else { 1 }).sum();
    let n_z = d.n_i + n_split;
    let fixed_tau0 = matches!(bolza.tau0, EndTime::Fixed(_)).then_some(t0);
    let fixed_tau_end = matches!(bolza.tau_end, EndTime::Fixed(_)).then_some(te);
    let n_b = d.n_bb + 1 + fixed_tau0.is_some() as usize + fixed_tau_end.is_some() as usize;
    let n_c = d.n_e + d.n_i + (n_y - n_chi);
    let dims = Dims { n_y, n_z, n_c, n_b };
    let hint = |chi: &Option<Vec<f64>>| -> Result<Vec<f64>> {
        let mut v = match chi {
            Some(c) => {
                crate::error::check_len("χ guess", n_chi, c.len())?;
                c.clone()
            }
            None => vec![0.0; n_chi],
        };
        v.push(0.0);
        v.extend(std::iter::repeat_n(0.0, d.n_xi));
        v.push(t0);
        v.push(te);
        Ok(v)
    };
    let hints = GuessHints { y_start: Some(hint(&bolza.chi_start)?), y_end: Some(hint(&bolza.chi_end)?), z_value: None };
    let model = Converted { dims: d, layout, model: bolza.model, inputs: bolza.inputs, fixed_tau0, fixed_tau_end };
    let mut kinds = vec![AlgebraicKind::Nonnegative; d.n_i];
    for kind in &model.inputs {
        match kind {
            InputKind::Free => kinds.extend([AlgebraicKind::Nonnegative; 2]),
            InputKind::Nonnegative => kinds.push(AlgebraicKind::Nonnegative),
            InputKind::Unrestricted => kinds.push(AlgebraicKind::Free),
        }
    }
    let problem = DynamicProblem::new(bolza.name, dims, (0.0, 1.0), vec![0.0, 1.0], model)?
        .with_z_kinds(kinds)?
        .with_hints(hints)?;
    Ok((problem, layout))
}
