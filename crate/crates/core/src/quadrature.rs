//! Gauss-type quadrature rules on the reference interval `[-1, 1]`.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Nodes and weights on `[-1, 1]`; `order` is the exactness degree.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `g` over `(a, b)` with the affinely mapped rule.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * g(a + half * (x + 1.0));
        }
        half * s
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // (1 - x²) P_n' = n (P_{n-1} - x P_n); at x = ±1 use the closed form.
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 { 1.0 } else if n % 2 == 0 { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

fn newton_polish(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..100 {
        let (v, d) = f(x);
        let dx = v / d;
        x -= dx;
        if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Weights `∫_{-1}^{1} ℓ_j` of the Lagrange basis on `nodes`.
pub fn interpolatory_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let gl = gauss_legendre(n.max(1));
    (0..n)
        .map(|j| {
            gl.nodes
                .iter()
                .zip(&gl.weights)
                .map(|(&x, &w)| {
                    let mut l = 1.0;
                    for (k, &xk) in nodes.iter().enumerate() {
                        if k != j {
                            l *= (x - xk) / (nodes[j] - xk);
                        }
                    }
                    w * l
                })
                .sum()
        })
        .collect()
}

/// `n`-point Gauss-Legendre rule, exact through degree `2n - 1`.
///
/// Panics if `n == 0`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let guess = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let x = newton_polish(guess, |x| legendre_with_derivative(n, x));
        let (_, d) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    QuadratureRule { nodes, weights, order: 2 * n - 1 }
}

/// `n`-point Gauss-Lobatto rule (`n ≥ 2`), endpoints included, exact through degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> QuadratureRule {
    assert!(n >= 2, "a Lobatto rule needs at least two nodes");
    let m = n - 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    // interior nodes are the roots of P_m'
    for i in 1..m {
        let guess = -(std::f64::consts::PI * i as f64 / m as f64).cos();
        let x = newton_polish(guess, |x| {
            let (p, d) = legendre_with_derivative(m, x);
            // P_m'' from the Legendre equation
            let d2 = (2.0 * x * d - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            (d, d2)
        });
        nodes[i] = x;
    }
    for i in (1..m).filter(|&i| 2 * i < m) {
        let x = 0.5 * (nodes[i] - nodes[m - i]);
        nodes[i] = x;
        nodes[m - i] = -x;
    }
    if n % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre_with_derivative(m, x);
            2.0 / ((m * n) as f64 * p * p)
        })
        .collect();
    QuadratureRule { nodes, weights, order: 2 * n - 3 }
}

/// `s`-point right Radau rule (Radau IIA abscissae), right endpoint included,
/// exact through degree `2s - 2`.
pub fn gauss_radau_right(s: usize) -> QuadratureRule {
    assert!(s >= 1, "a Radau rule needs at least one node");
    // roots of P_s - P_{s-1}; x = 1 is one of them
    let q = |x: f64| {
        let (a, da) = legendre_with_derivative(s, x);
        let (b, db) = legendre_with_derivative(s - 1, x);
        (a - b, da - db)
    };
    let mut nodes = Vec::with_capacity(s);
    for i in 0..s.saturating_sub(1) {
        let guess = -(2.0 * std::f64::consts::PI * (i as f64 + 0.5) / (2.0 * s as f64 - 1.0)).cos();
        let guess = guess.clamp(-0.999_999, 0.999_999);
        // deflate the known root at 1 and previously found roots
        let found = nodes.clone();
        let x = newton_polish(guess, |x| {
            let (v, d) = q(x);
            let mut g = x - 1.0;
            let mut dg = 1.0;
            for &r in &found {
                dg = dg * (x - r) + g;
                g *= x - r;
            }
            (v / g, (d * g - v * dg) / (g * g))
        });
        nodes.push(x);
    }
    nodes.push(1.0);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let weights = interpolatory_weights(&nodes);
    QuadratureRule { nodes, weights, order: 2 * s - 2 }
}

/// Sum over mesh intervals of the mapped rule applied to `integrand`.
pub fn integrate_on_mesh(mesh: &Mesh, rule: &QuadratureRule, mut integrand: impl FnMut(f64) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in mesh.intervals() {
        let half = 0.5 * (b - a);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = a + half * (x + 1.0);
            let v = integrand(t);
            if !v.is_finite() {
                return Err(Error::Evaluation { what: "integrand".into(), t });
            }
            total += w * half * v;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_and_two_point_rules() {
        let r = gauss_legendre(1);
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
        let r = gauss_legendre(2);
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_points_integrate_quartic() {
        let r = gauss_legendre(3);
        let v = r.integrate(-1.0, 1.0, |t| t.powi(4));
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn large_rules_are_symmetric_and_positive() {
        for n in 1..=32 {
            let r = gauss_legendre(n);
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n = {n}");
            for i in 0..n {
                assert!(r.weights[i] > 0.0);
                assert!(r.nodes[i].abs() < 1.0);
                assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-15);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
            }
        }
    }

    #[test]
    fn lobatto_rules() {
        let r = gauss_lobatto(3);
        assert_eq!(r.nodes, vec![-1.0, 0.0, 1.0]);
        assert!((r.weights[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.weights[1] - 4.0 / 3.0).abs() < 1e-15);
        for n in 2..12 {
            let r = gauss_lobatto(n);
            let deg = 2 * n - 3;
            let v = r.integrate(-1.0, 1.0, |t| t.powi(deg as i32 - 1) + t.powi(deg as i32));
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((v - exact).abs() < 1e-13, "n = {n}: {v} vs {exact}");
        }
    }

    #[test]
    fn radau_rules() {
        let r = gauss_radau_right(2);
        assert!((r.nodes[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((r.weights[0] - 1.5).abs() < 1e-14 && (r.weights[1] - 0.5).abs() < 1e-14);
        for s in 1..10 {
            let r = gauss_radau_right(s);
            assert_eq!(*r.nodes.last().unwrap(), 1.0);
            let deg = 2 * s - 2;
            let v = r.integrate(-1.0, 1.0, |t| t.powi(deg as i32));
            assert!((v - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "s = {s}");
        }
    }

    #[test]
    fn mesh_integration_reports_bad_nodes() {
        let mesh = Mesh::uniform(0.0, 4.0, 4).unwrap();
        let v = integrate_on_mesh(&mesh, &gauss_legendre(2), |_| 1.0).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        let err = integrate_on_mesh(&mesh, &gauss_legendre(2), |t| if t > 3.0 { f64::NAN } else { 0.0 });
        assert!(matches!(err, Err(Error::Evaluation { t, .. }) if t > 3.0));
    }
}
