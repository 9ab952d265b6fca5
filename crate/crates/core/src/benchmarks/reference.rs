//! Reference solutions from the optimality conditions.

use crate::error::{Error, Result};

/// Classical RK4 from `t0` to `t1` in `steps` equal steps; returns the
/// states at every grid point.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t0: f64, t1: f64, steps: usize) -> Vec<[f64; N]> {
    let h = (t1 - t0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| {
        let mut r = *y;
        for i in 0..N {
            r[i] += a * k[i];
        }
        r
    };
    for s in 0..steps {
        let t = t0 + h * s as f64;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(y);
    }
    out
}

fn steps_for(len: f64, dt: f64) -> usize {
    ((len.abs() / dt).ceil() as usize).max(1)
}

/// Dense RK4 solution on a uniform grid, interpolated by cubic Hermite pieces.
#[derive(Clone, Debug)]
pub struct DenseArc<const N: usize> {
    t0: f64,
    h: f64,
    y: Vec<[f64; N]>,
    dy: Vec<[f64; N]>,
}

impl<const N: usize> DenseArc<N> {
    pub fn integrate(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t0: f64, t1: f64, dt: f64) -> Self {
        let steps = steps_for(t1 - t0, dt);
        let y = rk4(&f, y0, t0, t1, steps);
        let h = (t1 - t0) / steps as f64;
        let dy = y.iter().enumerate().map(|(k, v)| f(t0 + h * k as f64, v)).collect();
        Self { t0, h, y, dy }
    }

    pub fn end(&self) -> [f64; N] {
        *self.y.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = ((t - self.t0) / self.h).clamp(0.0, (self.y.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.y.len() - 2);
        let x = s - k as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x),
            x * (1.0 - x) * (1.0 - x),
            x * x * (3.0 - 2.0 * x),
            x * x * (x - 1.0),
        );
        let mut r = [0.0; N];
        for i in 0..N {
            r[i] = h00 * self.y[k][i] + h10 * self.h * self.dy[k][i] + h01 * self.y[k + 1][i] + h11 * self.h * self.dy[k + 1][i];
        }
        r
    }
}

const DT: f64 = 1e-4;

fn vdp_state(y: &[f64], u: f64) -> [f64; 2] {
    [y[1], -y[0] + y[1] * (1.0 - y[0] * y[0]) + u]
}

/// State, costate and running cost for the controlled van der Pol oscillator.
fn vdp_full(y: &[f64; 5], u: f64) -> [f64; 5] {
    let [y1, y2, l1, l2, _] = *y;
    let [d1, d2] = vdp_state(&y[..2], u);
    [d1, d2, -y1 + l2 * (1.0 + 2.0 * y1 * y2), -y2 - l1 - l2 * (1.0 - y1 * y1), 0.5 * (y1 * y1 + y2 * y2)]
}

/// Optimal van der Pol control: `u = -1` on `[0, t1]`, `u = +1` on `[t1, t2]`
/// and a singular arc on `[t2, 4]` along which `y1 = C cosh(4 - t)` and
/// `y2 = -C sinh(4 - t)`.
#[derive(Clone, Debug)]
pub struct VanDerPolReference {
    pub t1: f64,
    pub t2: f64,
    pub c: f64,
    pub objective: f64,
    first: DenseArc<2>,
    second: DenseArc<5>,
}

const VDP_T: f64 = 4.0;

fn vdp_residual(t1: f64, t2: f64) -> ([f64; 2], DenseArc<2>, [f64; 2]) {
    let first = DenseArc::integrate(|_, y| vdp_state(y, -1.0), [0.0, 1.0], 0.0, t1, DT);
    let y_t1 = first.end();
    let second = rk4(|_, y: &[f64; 2]| vdp_state(y, 1.0), y_t1, t1, t2, steps_for(t2 - t1, DT));
    let y_t2 = *second.last().unwrap();
    let manifold = y_t2[1] + y_t2[0] * (VDP_T - t2).tanh();
    // costates on the singular arc: λ2 = 0 and λ̇2 = 0 give λ1 = -y2
    let back = rk4(
        |_, s: &[f64; 5]| vdp_full(s, 1.0),
        [y_t2[0], y_t2[1], -y_t2[1], 0.0, 0.0],
        t2,
        t1,
        steps_for(t2 - t1, DT),
    );
    let switching = back.last().unwrap()[3];
    ([manifold, switching], first, y_t1)
}

impl VanDerPolReference {
    pub fn compute() -> Result<Self> {
        let mut x = [1.3667, 2.4601];
        let mut converged = false;
        for _ in 0..30 {
            let (r, ..) = vdp_residual(x[0], x[1]);
            if r[0].abs().max(r[1].abs()) < 1e-13 {
                converged = true;
                break;
            }
            let e = 1e-7;
            let (ra, ..) = vdp_residual(x[0] + e, x[1]);
            let (rb, ..) = vdp_residual(x[0], x[1] + e);
            let j = [[(ra[0] - r[0]) / e, (rb[0] - r[0]) / e], [(ra[1] - r[1]) / e, (rb[1] - r[1]) / e]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 {
                break;
            }
            x[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            x[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        }
        if !converged {
            return Err(Error::Evaluation { what: "van der Pol switching-time shooting did not converge".into(), t: x[1] });
        }
        let [t1, t2] = x;
        let (_, first, y_t1) = vdp_residual(t1, t2);
        let cost1 = rk4(
            |_, s: &[f64; 3]| {
                let [a, b] = vdp_state(&s[..2], -1.0);
                [a, b, 0.5 * (s[0] * s[0] + s[1] * s[1])]
            },
            [0.0, 1.0, 0.0],
            0.0,
            t1,
            steps_for(t1, DT),
        );
        let second = DenseArc::integrate(|_, s: &[f64; 5]| vdp_full(s, 1.0), [y_t1[0], y_t1[1], 0.0, 0.0, 0.0], t1, t2, DT);
        let y_t2 = second.end();
        let c = y_t2[0] / (VDP_T - t2).cosh();
        let singular_cost = 0.25 * c * c * (2.0 * (VDP_T - t2)).sinh();
        let objective = cost1.last().unwrap()[2] + y_t2[4] + singular_cost;
        Ok(Self { t1, t2, c, objective, first, second })
    }

    pub fn state(&self, t: f64) -> [f64; 2] {
        if t <= self.t1 {
            self.first.eval(t)
        } else if t <= self.t2 {
            let s = self.second.eval(t);
            [s[0], s[1]]
        } else {
            [self.c * (VDP_T - t).cosh(), -self.c * (VDP_T - t).sinh()]
        }
    }

    pub fn control(&self, t: f64) -> f64 {
        if t < self.t1 {
            -1.0
        } else if t < self.t2 {
            1.0
        } else {
            let [y1, y2] = self.state(t);
            2.0 * y1 - y2 * (1.0 - y1 * y1)
        }
    }

    /// Switching function `λ2` on the bang arcs (zero on the singular arc).
    pub fn switching_function(&self, t: f64) -> f64 {
        if t <= self.t1 {
            // integrate the costates backward from t1 to t
            let y = self.first.eval(self.t1);
            let back = rk4(|_, s: &[f64; 5]| vdp_full(s, -1.0), self.costate_at_t1(y), self.t1, t, steps_for(self.t1 - t, DT));
            back.last().unwrap()[3]
        } else if t <= self.t2 {
            let y = self.second.eval(self.t2);
            let back = rk4(|_, s: &[f64; 5]| vdp_full(s, 1.0), [y[0], y[1], -y[1], 0.0, 0.0], self.t2, t, steps_for(self.t2 - t, DT));
            back.last().unwrap()[3]
        } else {
            0.0
        }
    }

    fn costate_at_t1(&self, y_t1: [f64; 2]) -> [f64; 5] {
        let y = self.second.eval(self.t2);
        let back = rk4(|_, s: &[f64; 5]| vdp_full(s, 1.0), [y[0], y[1], -y[1], 0.0, 0.0], self.t2, self.t1, steps_for(self.t2 - self.t1, DT));
        let s = back.last().unwrap();
        [y_t1[0], y_t1[1], s[2], s[3], 0.0]
    }
}

/// Optimal regulator control: `u = -1` on `[0, t_s]`, then the singular arc
/// `u = C cosh(5 - t)`.
#[derive(Clone, Copy, Debug)]
pub struct RegulatorReference {
    pub ts: f64,
    pub c: f64,
    pub objective: f64,
}

const REG_T: f64 = 5.0;

impl RegulatorReference {
    pub fn compute() -> Self {
        // junction with the singular manifold y2 + y1 tanh(5 - t) = 0
        let g = |t: f64| 1.0 - t + (t - 0.5 * t * t) * (REG_T - t).tanh();
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let ts = 0.5 * (lo + hi);
        let c = (ts - 0.5 * ts * ts) / (REG_T - ts).cosh();
        let rule = crate::quadrature::gauss_legendre(4);
        let bang = rule.integrate(0.0, ts, |t| 0.5 * ((t - 0.5 * t * t).powi(2) + (1.0 - t).powi(2)));
        let objective = bang + 0.25 * c * c * (2.0 * (REG_T - ts)).sinh();
        Self { ts, c, objective }
    }

    pub fn state(&self, t: f64) -> [f64; 2] {
        if t <= self.ts {
            [t - 0.5 * t * t, 1.0 - t]
        } else {
            [self.c * (REG_T - t).cosh(), -self.c * (REG_T - t).sinh()]
        }
    }

    pub fn control(&self, t: f64) -> f64 {
        if t < self.ts {
            -1.0
        } else {
            self.c * (REG_T - t).cosh()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order() {
        let err = |n| (rk4(|_, y: &[f64; 1]| [-y[0]], [1.0], 0.0, 1.0, n)[n][0] - (-1.0f64).exp()).abs();
        let r = err(10) / err(20);
        assert!((r.log2() - 4.0).abs() < 0.1, "{r}");
    }

    #[test]
    fn vdp_switching_times() {
        let r = VanDerPolReference::compute().unwrap();
        assert!((r.t1 - 1.3667).abs() < 1e-4, "t1 = {}", r.t1);
        // the optimality conditions put the singular junction at 2.46087,
        // slightly later than the commonly quoted 2.4601
        assert!((r.t2 - 2.46087).abs() < 1e-5, "t2 = {}", r.t2);
        assert!((r.t2 - 2.4601).abs() < 1e-3);
        // the switching function has the sign of -u on each bang arc
        for t in [0.3, 1.0, 1.3] {
            assert!(r.switching_function(t) > 0.0);
        }
        for t in [1.5, 2.0, 2.4] {
            assert!(r.switching_function(t) < 0.0);
        }
        // the singular control stays admissible
        for k in 0..=100 {
            let t = r.t2 + (VDP_T - r.t2) * k as f64 / 100.0;
            assert!(r.control(t).abs() <= 1.0);
        }
    }

    #[test]
    fn vdp_state_is_continuous_and_solves_the_ode() {
        let r = VanDerPolReference::compute().unwrap();
        for &t in &[r.t1, r.t2] {
            let a = r.state(t - 1e-9);
            let b = r.state(t + 1e-9);
            assert!((a[0] - b[0]).abs() < 1e-7 && (a[1] - b[1]).abs() < 1e-7, "{a:?} {b:?}");
        }
        for t in [0.5, 1.9, 3.2] {
            let e = 1e-5;
            let (p, m) = (r.state(t + e), r.state(t - e));
            let d = vdp_state(&r.state(t), r.control(t));
            for i in 0..2 {
                assert!(((p[i] - m[i]) / (2.0 * e) - d[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn regulator_junction() {
        let r = RegulatorReference::compute();
        assert!((r.ts - 1.4137).abs() < 1e-3, "{}", r.ts);
        let a = r.state(r.ts - 1e-12);
        let b = r.state(r.ts + 1e-12);
        assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        assert!(r.control(r.ts + 1e-9).abs() < 1.0);
    }
}
