//! Piecewise polynomial finite element spaces with a nodal Lagrange basis.
//!
//! `y` is always continuous: interval endpoint nodes are shared between
//! neighbouring intervals. `z` is discontinuous by default and can be
//! switched to the continuous variant.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{check_len, Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, gauss_lobatto, legendre_with_derivative, QuadratureRule};

/// Legendre polynomial of degree `j` at `t`.
pub fn legendre_eval(j: usize, t: f64) -> f64 {
    legendre_with_derivative(j, t).0
}

/// Reference nodes for degree `p`: Gauss-Lobatto points, or the midpoint for `p = 0`.
pub fn reference_nodes(p: usize) -> Vec<f64> {
    if p == 0 {
        vec![0.0]
    } else {
        gauss_lobatto(p + 1).nodes
    }
}

/// Lagrange basis on a fixed node set.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    denom: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let denom = (0..nodes.len())
            .map(|j| {
                let mut d = 1.0;
                for (k, &xk) in nodes.iter().enumerate() {
                    if k != j {
                        d *= nodes[j] - xk;
                    }
                }
                d
            })
            .collect();
        Self { nodes, denom }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Basis values at `x`.
    pub fn values(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for j in 0..n {
            let mut v = 1.0;
            for k in 0..n {
                if k != j {
                    v *= x - self.nodes[k];
                }
            }
            out[j] = v / self.denom[j];
        }
    }

    /// Basis derivatives at `x`.
    pub fn derivatives(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for j in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                if m == j {
                    continue;
                }
                let mut v = 1.0;
                for k in 0..n {
                    if k != j && k != m {
                        v *= x - self.nodes[k];
                    }
                }
                s += v;
            }
            out[j] = s / self.denom[j];
        }
    }
}

/// Serializable description of an [`FESpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDescriptor {
    pub mesh_nodes: Vec<f64>,
    pub p: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub z_continuous: bool,
}

/// The finite element space for `(y, z)` over a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub struct FESpace {
    mesh: Mesh,
    pub p: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub z_continuous: bool,
    basis: LagrangeBasis,
    y_index: Vec<usize>,
    z_index: Vec<usize>,
    dim: usize,
}

impl TryFrom<SpaceDescriptor> for FESpace {
    type Error = Error;
    fn try_from(d: SpaceDescriptor) -> Result<Self> {
        FESpace::new(Mesh::new(d.mesh_nodes)?, d.p, d.n_y, d.n_z, d.z_continuous)
    }
}

impl From<FESpace> for SpaceDescriptor {
    fn from(s: FESpace) -> Self {
        s.descriptor()
    }
}

impl FESpace {
    pub fn new(mesh: Mesh, p: usize, n_y: usize, n_z: usize, z_continuous: bool) -> Result<Self> {
        if p > 30 {
            return Err(Error::Input(format!("polynomial degree {p} is too large")));
        }
        let n = mesh.n_intervals();
        let y_nodes = n * p + 1;
        let z_nodes = if z_continuous { n * p + 1 } else { n * (p + 1) };
        let mut y_index = vec![usize::MAX; y_nodes * n_y];
        let mut z_index = vec![usize::MAX; z_nodes * n_z];
        let mut next = 0;
        let mut take = |index: &mut Vec<usize>, node: usize, width: usize| {
            for c in 0..width {
                index[node * width + c] = next;
                next += 1;
            }
        };
        for i in 0..n {
            for l in 0..p {
                take(&mut y_index, i * p + l, n_y);
            }
            if z_continuous {
                for l in 0..p {
                    take(&mut z_index, i * p + l, n_z);
                }
            } else {
                for l in 0..=p {
                    take(&mut z_index, i * (p + 1) + l, n_z);
                }
            }
        }
        take(&mut y_index, n * p, n_y);
        if z_continuous {
            take(&mut z_index, n * p, n_z);
        }
        Ok(Self {
            mesh,
            p,
            n_y,
            n_z,
            z_continuous,
            basis: LagrangeBasis::new(reference_nodes(p)),
            y_index,
            z_index,
            dim: next,
        })
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            mesh_nodes: self.mesh.nodes().to_vec(),
            p: self.p,
            n_y: self.n_y,
            n_z: self.n_z,
            z_continuous: self.z_continuous,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    /// Number of global coefficients.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes per interval.
    pub fn local_nodes(&self) -> usize {
        self.p + 1
    }

    /// Global coefficient of `y[c]` at local node `l` of interval `i`.
    pub fn y_dof(&self, i: usize, l: usize, c: usize) -> usize {
        self.y_index[(i * self.p + l) * self.n_y + c]
    }

    /// Global coefficient of `z[c]` at local node `l` of interval `i`.
    pub fn z_dof(&self, i: usize, l: usize, c: usize) -> usize {
        let node = if self.z_continuous { i * self.p + l } else { i * (self.p + 1) + l };
        self.z_index[node * self.n_z + c]
    }

    /// Coefficients touched by interval `i`: `y` node-major, then `z` node-major.
    pub fn interval_dofs(&self, i: usize) -> Vec<usize> {
        let k = self.local_nodes();
        let mut d = Vec::with_capacity(k * (self.n_y + self.n_z));
        for l in 0..k {
            for c in 0..self.n_y {
                d.push(self.y_dof(i, l, c));
            }
        }
        for l in 0..k {
            for c in 0..self.n_z {
                d.push(self.z_dof(i, l, c));
            }
        }
        d
    }

    /// All global coefficients that belong to `z[c]`.
    pub fn z_component_dofs(&self, c: usize) -> Vec<usize> {
        self.z_index.iter().skip(c).step_by(self.n_z.max(1)).copied().collect()
    }

    fn reference_point(&self, i: usize, t: f64) -> (f64, f64) {
        let (a, b) = self.mesh.interval(i);
        (2.0 * (t - a) / (b - a) - 1.0, 2.0 / (b - a))
    }
}

/// Values of `ẏ`, `y`, `z` at one time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointValues {
    pub ydot: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

/// A function in an [`FESpace`], stored by its global coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryFile", into = "TrajectoryFile")]
pub struct Trajectory {
    space: FESpace,
    pub coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    space: SpaceDescriptor,
    coeffs: Vec<f64>,
}

impl TryFrom<TrajectoryFile> for Trajectory {
    type Error = Error;
    fn try_from(f: TrajectoryFile) -> Result<Self> {
        Trajectory::new(FESpace::try_from(f.space)?, f.coeffs)
    }
}

impl From<Trajectory> for TrajectoryFile {
    fn from(t: Trajectory) -> Self {
        TrajectoryFile { space: t.space.descriptor(), coeffs: t.coeffs }
    }
}

impl Trajectory {
    pub fn new(space: FESpace, coeffs: Vec<f64>) -> Result<Self> {
        check_len("coefficients", space.dim(), coeffs.len())?;
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: FESpace) -> Self {
        let coeffs = vec![0.0; space.dim()];
        Self { space, coeffs }
    }

    /// Nodal interpolant of `g(t) = (y, z)` (length `n_y + n_z`).
    pub fn interpolate(space: FESpace, g: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut coeffs = vec![0.0; space.dim()];
        let nodes = space.basis.nodes().to_vec();
        for (i, (a, b)) in space.mesh.intervals().enumerate() {
            for (l, &xi) in nodes.iter().enumerate() {
                let t = a + 0.5 * (b - a) * (xi + 1.0);
                let v = g(t);
                for c in 0..space.n_y {
                    coeffs[space.y_dof(i, l, c)] = v[c];
                }
                for c in 0..space.n_z {
                    coeffs[space.z_dof(i, l, c)] = v[space.n_y + c];
                }
            }
        }
        Self { space, coeffs }
    }

    pub fn space(&self) -> &FESpace {
        &self.space
    }

    pub fn into_parts(self) -> (FESpace, Vec<f64>) {
        (self.space, self.coeffs)
    }

    /// Scratch buffers for [`Trajectory::evaluate_in`].
    pub fn scratch(&self) -> PointValues {
        let k = self.space.local_nodes();
        PointValues {
            ydot: vec![0.0; self.space.n_y],
            y: vec![0.0; self.space.n_y],
            z: vec![0.0; self.space.n_z],
            phi: vec![0.0; k],
            dphi: vec![0.0; k],
        }
    }

    /// Evaluates on interval `i` (no range check on `t`).
    pub fn evaluate_in(&self, i: usize, t: f64, out: &mut PointValues) {
        let s = &self.space;
        let (xi, scale) = s.reference_point(i, t);
        s.basis.values(xi, &mut out.phi);
        s.basis.derivatives(xi, &mut out.dphi);
        for c in 0..s.n_y {
            let (mut v, mut d) = (0.0, 0.0);
            for l in 0..s.local_nodes() {
                let x = self.coeffs[s.y_dof(i, l, c)];
                v += out.phi[l] * x;
                d += out.dphi[l] * x;
            }
            out.y[c] = v;
            out.ydot[c] = d * scale;
        }
        for c in 0..s.n_z {
            let mut v = 0.0;
            for l in 0..s.local_nodes() {
                v += out.phi[l] * self.coeffs[s.z_dof(i, l, c)];
            }
            out.z[c] = v;
        }
    }

    /// `(y, z)` for `derivative_order = 0`, `(ẏ, ż)` for `1`.
    ///
    /// At interior mesh nodes the interval on the left is used.
    pub fn evaluate(&self, t: f64, derivative_order: usize) -> Result<Vec<f64>> {
        if derivative_order > 1 {
            return Err(Error::Input(format!("derivative order {derivative_order} not supported")));
        }
        let s = &self.space;
        let i = s.mesh.locate(t)?;
        let (xi, scale) = s.reference_point(i, t);
        let k = s.local_nodes();
        let mut w = vec![0.0; k];
        if derivative_order == 0 {
            s.basis.values(xi, &mut w);
        } else {
            s.basis.derivatives(xi, &mut w);
            w.iter_mut().for_each(|v| *v *= scale);
        }
        let mut out = vec![0.0; s.n_y + s.n_z];
        for l in 0..k {
            for c in 0..s.n_y {
                out[c] += w[l] * self.coeffs[s.y_dof(i, l, c)];
            }
            for c in 0..s.n_z {
                out[s.n_y + c] += w[l] * self.coeffs[s.z_dof(i, l, c)];
            }
        }
        Ok(out)
    }

    /// Component `comp` of `(y, z)` at `t`, evaluated on interval `i`.
    pub fn component_in(&self, i: usize, t: f64, comp: usize) -> f64 {
        let s = &self.space;
        let (xi, _) = s.reference_point(i, t);
        let mut w = vec![0.0; s.local_nodes()];
        s.basis.values(xi, &mut w);
        (0..s.local_nodes())
            .map(|l| {
                let dof = if comp < s.n_y { s.y_dof(i, l, comp) } else { s.z_dof(i, l, comp - s.n_y) };
                w[l] * self.coeffs[dof]
            })
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Composite Gauss rule used by projections: `subdivisions` equal pieces
/// per interval with `rule` on each.
#[derive(Clone, Debug)]
pub struct ProjectionQuadrature {
    pub rule: QuadratureRule,
    pub subdivisions: usize,
}

impl ProjectionQuadrature {
    pub fn for_degree(p: usize) -> Self {
        Self { rule: gauss_legendre(2 * p + 4), subdivisions: 1 }
    }

    fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let k = self.subdivisions.max(1);
        let len = (b - a) / k as f64;
        let mut out = Vec::with_capacity(k * self.rule.len());
        for s in 0..k {
            let lo = a + len * s as f64;
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                out.push((lo + 0.5 * len * (x + 1.0), 0.5 * len * w));
            }
        }
        out
    }
}

/// L² projection of `target(t) = (y, z)` onto the space, per component.
pub fn best_approximation(space: &FESpace, target: impl Fn(f64) -> Vec<f64>) -> Result<Trajectory> {
    best_approximation_with(space, target, &ProjectionQuadrature::for_degree(space.p))
}

/// [`best_approximation`] with an explicit quadrature.
pub fn best_approximation_with(
    space: &FESpace,
    target: impl Fn(f64) -> Vec<f64>,
    quad: &ProjectionQuadrature,
) -> Result<Trajectory> {
    let n_comp = space.n_y + space.n_z;
    let k = space.local_nodes();
    let n_el = space.mesh.n_intervals();
    let mut coeffs = vec![0.0; space.dim()];
    // cache target samples and basis values per interval
    let mut samples = Vec::with_capacity(n_el);
    for (a, b) in space.mesh.intervals() {
        let pts = quad.points(a, b);
        let mut rows = Vec::with_capacity(pts.len());
        for (t, w) in pts {
            let v = target(t);
            check_len("projection target", n_comp, v.len())?;
            let mut phi = vec![0.0; k];
            space.basis.values(2.0 * (t - a) / (b - a) - 1.0, &mut phi);
            rows.push((w, phi, v));
        }
        samples.push(rows);
    }
    for comp in 0..n_comp {
        let continuous = comp < space.n_y || space.z_continuous;
        let node_of = |i: usize, l: usize| if continuous { i * space.p + l } else { i * k + l };
        let n_nodes = if continuous { n_el * space.p + 1 } else { n_el * k };
        let mut gram = BandMatrix::zeros(n_nodes, k - 1, k - 1);
        let mut rhs = vec![0.0; n_nodes];
        for (i, rows) in samples.iter().enumerate() {
            for (w, phi, v) in rows {
                for l in 0..k {
                    rhs[node_of(i, l)] += w * phi[l] * v[comp];
                    for m in 0..k {
                        gram.add(node_of(i, l), node_of(i, m), w * phi[l] * phi[m]);
                    }
                }
            }
        }
        let lu = gram.factor().map_err(|e| Error::Singular(format!("projection Gram matrix: {e}")))?;
        lu.solve(&mut rhs);
        for i in 0..n_el {
            for l in 0..k {
                let dof = if comp < space.n_y { space.y_dof(i, l, comp) } else { space.z_dof(i, l, comp - space.n_y) };
                coeffs[dof] = rhs[node_of(i, l)];
            }
        }
    }
    Trajectory::new(space.clone(), coeffs)
}

/// Result of [`norm_equivalence_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormCheck {
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// `(p + 1) / sqrt(|T|) * l2_norm`.
    pub bound: f64,
    pub bound_satisfied: bool,
}

fn legendre_series(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut v, mut d, mut d2) = (0.0, 0.0, 0.0);
    for (j, &a) in coeffs.iter().enumerate() {
        let (pj, dj) = legendre_with_derivative(j, x);
        v += a * pj;
        d += a * dj;
        if (1.0 - x * x).abs() > 1e-14 {
            d2 += a * (2.0 * x * dj - (j * (j + 1)) as f64 * pj) / (1.0 - x * x);
        }
    }
    (v, d, d2)
}

/// Sup and L² norms of `u = Σ a_j P_j` mapped onto `interval`, and whether
/// `‖u‖_∞ ≤ (p+1)/sqrt(|T|) ‖u‖_2` holds.
///
/// The sup norm comes from 50(p+1) samples refined by Newton steps on `u'`;
/// the comparison allows a relative slack of 1e-12 for rounding because the
/// bound is attained.
pub fn norm_equivalence_bound_check(legendre_coeffs: &[f64], interval: (f64, f64), p: usize) -> Result<NormCheck> {
    if legendre_coeffs.len() > p + 1 {
        return Err(Error::Input(format!(
            "{} coefficients do not fit degree {p}",
            legendre_coeffs.len()
        )));
    }
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::Input("interval must have positive length".into()));
    }
    let len = b - a;
    let n = 50 * (p + 1);
    let mut sup: f64 = 0.0;
    let grid: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| legendre_series(legendre_coeffs, x).0).collect();
    for i in 0..=n {
        sup = sup.max(vals[i].abs());
        let interior_peak = i > 0 && i < n && vals[i].abs() >= vals[i - 1].abs() && vals[i].abs() >= vals[i + 1].abs();
        if interior_peak {
            let mut x = grid[i];
            for _ in 0..3 {
                let (_, d, d2) = legendre_series(legendre_coeffs, x);
                if d2 == 0.0 {
                    break;
                }
                x = (x - d / d2).clamp(grid[i - 1], grid[i + 1]);
            }
            sup = sup.max(legendre_series(legendre_coeffs, x).0.abs());
        }
    }
    let rule = gauss_legendre(p + 1);
    let l2 = (0.5 * len * rule.nodes.iter().zip(&rule.weights).map(|(&x, w)| w * legendre_series(legendre_coeffs, x).0.powi(2)).sum::<f64>()).sqrt();
    let bound = (p + 1) as f64 / len.sqrt() * l2;
    Ok(NormCheck { sup_norm: sup, l2_norm: l2, bound, bound_satisfied: sup <= bound * (1.0 + 1e-12) })
}

/// Legendre coefficients of the degree-`p` polynomial with `u(1) = 1` and the
/// smallest L² norm on `(-1, 1)`: `a_j = (2j + 1)/(p + 1)²`.
pub fn extremal_polynomial(p: usize) -> Vec<f64> {
    let s = ((p + 1) * (p + 1)) as f64;
    (0..=p).map(|j| (2 * j + 1) as f64 / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_values() {
        for j in 0..15 {
            assert!((legendre_eval(j, 1.0) - 1.0).abs() < 1e-14);
        }
        assert_eq!(legendre_eval(0, 0.3), 1.0);
        let g = gauss_legendre(4);
        let v: f64 = g.nodes.iter().zip(&g.weights).map(|(&x, w)| w * legendre_eval(1, x).powi(2)).sum();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dof_counts_and_sharing() {
        let mesh = Mesh::uniform(0.0, 1.0, 4).unwrap();
        let s = FESpace::new(mesh.clone(), 3, 2, 1, false).unwrap();
        assert_eq!(s.dim(), 2 * (4 * 3 + 1) + 4 * 4);
        assert_eq!(s.y_dof(0, 3, 1), s.y_dof(1, 0, 1));
        assert_ne!(s.z_dof(0, 3, 0), s.z_dof(1, 0, 0));
        let c = FESpace::new(mesh, 3, 2, 1, true).unwrap();
        assert_eq!(c.dim(), 3 * 13);
        assert_eq!(c.z_dof(0, 3, 0), c.z_dof(1, 0, 0));
    }

    #[test]
    fn linear_trajectory_values_and_derivatives() {
        let s = FESpace::new(Mesh::uniform(0.0, 1.0, 2).unwrap(), 1, 1, 0, false).unwrap();
        let tr = Trajectory::interpolate(s, |t| vec![2.0 * t]);
        assert!((tr.evaluate(0.5, 0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((tr.evaluate(0.5, 1).unwrap()[0] - 2.0).abs() < 1e-14);
        assert!(tr.evaluate(1.5, 0).is_err());
    }

    #[test]
    fn reproduces_degree_p() {
        let s = FESpace::new(Mesh::uniform(0.0, 2.0, 3).unwrap(), 5, 1, 1, false).unwrap();
        let tr = Trajectory::interpolate(s, |t| vec![t.powi(5), 1.0 - t.powi(5)]);
        for k in 0..=40 {
            let t = 2.0 * k as f64 / 40.0;
            let v = tr.evaluate(t, 0).unwrap();
            assert!((v[0] - t.powi(5)).abs() < 1e-12);
            assert!((v[1] - (1.0 - t.powi(5))).abs() < 1e-12);
            let d = tr.evaluate(t, 1).unwrap();
            assert!((d[0] - 5.0 * t.powi(4)).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let s = FESpace::new(Mesh::uniform(-1.0, 1.0, 5).unwrap(), 3, 1, 1, false).unwrap();
        let tr = Trajectory::interpolate(s.clone(), |t| vec![t.powi(3) - t, (3.0 * t).sin()]);
        let proj = best_approximation(&s, |t| tr.evaluate(t, 0).unwrap()).unwrap();
        for (a, b) in proj.coeffs.iter().zip(&tr.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = FESpace::new(Mesh::uniform(0.0, 3.0, 3).unwrap(), 2, 2, 1, false).unwrap();
        let tr = Trajectory::interpolate(s, |t| vec![t.sin(), (0.1 * t).exp(), 1.0 / 3.0 + t]);
        let back = Trajectory::from_json(&tr.to_json().unwrap()).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn extremal_polynomial_is_tight() {
        for p in 0..=8 {
            let c = extremal_polynomial(p);
            let chk = norm_equivalence_bound_check(&c, (-1.0, 1.0), p).unwrap();
            assert!((chk.sup_norm - 1.0).abs() < 1e-12);
            let half_sq = 0.5 * chk.l2_norm * chk.l2_norm;
            let expect = 1.0 / ((p + 1) * (p + 1)) as f64;
            assert!((half_sq - expect).abs() <= 1e-10 * expect);
            assert!(chk.bound_satisfied);
        }
        let one = norm_equivalence_bound_check(&[1.0], (0.0, 1.0), 3).unwrap();
        assert!((one.sup_norm - 1.0).abs() < 1e-15 && (one.l2_norm - 1.0).abs() < 1e-15);
    }
}
