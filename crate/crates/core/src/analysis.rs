//! Error norms, convergence orders and the interpolation-order experiments.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{best_approximation_with, FESpace, ProjectionQuadrature, Trajectory};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// `max(F_h - F_ref, 0)`.
pub fn optimality_gap(objective: f64, reference: f64) -> f64 {
    (objective - reference).max(0.0)
}

/// Norm used by [`control_error`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
}

/// `‖u* - u_h‖` over `interval`, where `u_h = control(y, z)` is read from the
/// trajectory.
///
/// The interval is split at mesh nodes and at `breakpoints` (discontinuities
/// of the reference), and each piece gets `2p + 4` Gauss nodes.
pub fn control_error(
    trajectory: &Trajectory,
    control: impl Fn(&[f64], &[f64]) -> f64,
    reference: impl Fn(f64) -> f64,
    interval: (f64, f64),
    norm: Norm,
    breakpoints: &[f64],
) -> Result<f64> {
    let space = trajectory.space();
    let mesh = space.mesh();
    let (a, b) = interval;
    if !(a >= mesh.t0() && b <= mesh.t_end() && a < b) {
        return Err(Error::Input(format!("interval ({a}, {b}) not inside the horizon")));
    }
    let mut cuts: Vec<f64> = mesh.nodes().iter().chain(breakpoints).copied().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let rule = gauss_legendre(2 * space.p + 4);
    let mut vals = trajectory.scratch();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let i = mesh.locate(0.5 * (lo + hi))?;
        total += rule.integrate(lo, hi, |t| {
            trajectory.evaluate_in(i, t, &mut vals);
            let e = (control(&vals.y, &vals.z) - reference(t)).abs();
            match norm {
                Norm::L1 => e,
                Norm::L2 => e * e,
            }
        });
    }
    Ok(match norm {
        Norm::L1 => total,
        Norm::L2 => total.sqrt(),
    })
}

/// Least-squares slope of `log e` against `log h`.
pub fn estimate_order(errors: &[(f64, f64)]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::Input("need at least two (h, e) pairs".into()));
    }
    for &(h, e) in errors {
        if !(h > 0.0) || !(e > 0.0) {
            return Err(Error::Input(format!("order estimate needs positive h and e, got ({h}, {e})")));
        }
    }
    let n = errors.len() as f64;
    let xs: Vec<f64> = errors.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("order estimate needs distinct h".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Number of terms so that `a^n < 1e-16`.
pub fn weierstrass_terms(a: f64) -> usize {
    ((1e-16f64).ln() / a.ln()).floor() as usize + 1
}

/// `½ Σ_{k<n} a^k cos(7^k π t)`.
pub fn weierstrass(t: f64, a: f64, n_terms: usize) -> f64 {
    let mut s = 0.0;
    let mut amp = 1.0;
    let mut freq = std::f64::consts::PI;
    for _ in 0..n_terms {
        s += amp * (freq * t).cos();
        amp *= a;
        freq *= 7.0;
    }
    0.5 * s
}

/// Nested step function: `g_0 = -1` and `g_{k+1}(t) = -g_k(t)` for `t > 1 - 2^{-k}`.
pub fn nested_step(t: f64, k: u32) -> f64 {
    let mut g = -1.0;
    for j in 0..k {
        if t > 1.0 - 0.5f64.powi(j as i32) {
            g = -g;
        }
    }
    g
}

/// Limit of [`nested_step`] for `k → ∞` (exact for `t < 1 - 2^{-60}`).
pub fn nested_step_limit(t: f64) -> f64 {
    nested_step(t, 60)
}

/// L¹ error of the `p = 0` L² projection of `target` on a uniform mesh of
/// `(-1, 1)` with `h = 2^{-k}`, for each `k` in `ks`.
pub fn projection_errors(target: impl Fn(f64) -> f64, ks: &[u32], p: usize, subdivisions: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let h = 0.5f64.powi(k as i32);
        let n = (2.0 / h).round() as usize;
        let space = FESpace::new(Mesh::uniform(-1.0, 1.0, n)?, p, 0, 1, false)?;
        let quad = ProjectionQuadrature { rule: gauss_legendre(p + 8), subdivisions };
        let proj = best_approximation_with(&space, |t| vec![target(t)], &quad)?;
        let mut err = 0.0;
        for (i, (a, b)) in space.mesh().intervals().enumerate() {
            let len = (b - a) / subdivisions as f64;
            for s in 0..subdivisions {
                let lo = a + len * s as f64;
                err += quad.rule.integrate(lo, lo + len, |t| (target(t) - proj.component_in(i, t, 0)).abs());
            }
        }
        out.push((h, err));
    }
    Ok(out)
}

/// One row of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub h: f64,
    pub n_elements: usize,
    pub p: usize,
    pub omega: f64,
    pub tau: f64,
    #[serde(rename = "F_h")]
    pub f_h: f64,
    pub r_feas: f64,
    pub g_opt: Option<f64>,
    pub err_l2: Option<f64>,
    pub iters: usize,
    pub wall_time_s: f64,
}

/// Fixed CSV header of a study.
pub const STUDY_HEADER: [&str; 11] = ["h", "n_elements", "p", "omega", "tau", "F_h", "r_feas", "g_opt", "err_l2", "iters", "wall_time_s"];

/// Rows of a mesh refinement study, ordered by decreasing `h`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<StudyRow>,
}

impl ConvergenceStudy {
    pub fn new(mut rows: Vec<StudyRow>) -> Self {
        rows.sort_by(|a, b| b.h.partial_cmp(&a.h).unwrap());
        Self { rows }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        if self.rows.is_empty() {
            wr.write_record(STUDY_HEADER)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != STUDY_HEADER {
            return Err(Error::Input(format!("unexpected study header {header:?}")));
        }
        let rows = rd.deserialize().collect::<std::result::Result<Vec<StudyRow>, _>>()?;
        Ok(Self { rows })
    }

    /// `(h, value)` pairs of a column.
    pub fn series(&self, column: impl Fn(&StudyRow) -> Option<f64>) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| column(r).map(|v| (r.h, v))).collect()
    }

    /// True when each value is at most `1 + noise` times its predecessor.
    pub fn is_monotone_decreasing(&self, column: impl Fn(&StudyRow) -> Option<f64>, noise: f64) -> bool {
        let s = self.series(column);
        s.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + noise))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FESpace;

    #[test]
    fn gap_is_clamped() {
        assert_eq!(optimality_gap(1.0, 1.0), 0.0);
        assert_eq!(optimality_gap(0.5, 1.0), 0.0);
        assert_eq!(optimality_gap(1.25, 1.0), 0.25);
    }

    #[test]
    fn order_of_exact_powers() {
        let e: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&h: &f64| (h, h * h)).collect();
        assert!((estimate_order(&e).unwrap() - 2.0).abs() < 1e-12);
        assert!(estimate_order(&[(1.0, 1.0)]).is_err());
        assert!(estimate_order(&[(1.0, 1.0), (0.5, 0.0)]).is_err());
    }

    #[test]
    fn weierstrass_values() {
        let n = weierstrass_terms(0.5);
        assert!(0.5f64.powi(n as i32) < 1e-16);
        assert!((weierstrass(0.0, 0.5, n) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nested_step_values() {
        assert_eq!(nested_step(0.3, 0), -1.0);
        assert_eq!(nested_step(-0.7, 0), -1.0);
        // 0.9 lies right of 0, 1/2, 3/4 and 7/8
        assert_eq!(nested_step(0.9, 3), 1.0);
        assert_eq!(nested_step(0.9, 4), -1.0);
        assert_eq!(nested_step(0.9, 9), -1.0);
        assert_eq!(nested_step(0.95, 5), 1.0);
        for k in 0..8 {
            let t = 1.0 - 0.5f64.powi(k) - 1e-9;
            assert_eq!(nested_step(t, k as u32), nested_step_limit(t));
        }
    }

    #[test]
    fn control_error_of_identical_functions() {
        let space = FESpace::new(Mesh::uniform(0.0, 2.0, 4).unwrap(), 3, 1, 1, false).unwrap();
        let tr = Trajectory::interpolate(space, |t| vec![t, t * t]);
        let e = control_error(&tr, |_, z| z[0], |t| t * t, (0.0, 2.0), Norm::L2, &[0.3]).unwrap();
        assert!(e < 1e-12);
        let e1 = control_error(&tr, |_, z| z[0], |t| t * t + 1.0, (0.5, 1.5), Norm::L1, &[]).unwrap();
        assert!((e1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn study_csv_round_trip() {
        let row = |n: usize| StudyRow {
            h: 1.0 / n as f64,
            n_elements: n,
            p: 5,
            omega: 1e-10,
            tau: 1e-10,
            f_h: 1.5,
            r_feas: 1e-8 / n as f64,
            g_opt: if n > 10 { Some(1e-3) } else { None },
            err_l2: None,
            iters: 12,
            wall_time_s: 0.25,
        };
        let s = ConvergenceStudy::new(vec![row(20), row(10)]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("h,n_elements,p,omega,tau,F_h,r_feas,g_opt,err_l2,iters,wall_time_s\n"));
        let back = ConvergenceStudy::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(s.is_monotone_decreasing(|r| Some(r.r_feas), 0.0));
    }
}
