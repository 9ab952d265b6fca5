//! Partitions of the time horizon into intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, non-overlapping intervals covering `[t0, tE]`, stored by their nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Mesh {
    type Error = Error;
    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Mesh::new(nodes)
    }
}

impl From<Mesh> for Vec<f64> {
    fn from(m: Mesh) -> Self {
        m.nodes
    }
}

impl Mesh {
    /// Mesh with the given strictly increasing nodes.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Input("a mesh needs at least two nodes".into()));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::Input("mesh nodes must be finite".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "mesh nodes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    /// `n` equal intervals on `(t0, tE)`.
    pub fn uniform(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("number of intervals must be at least 1".into()));
        }
        if !(t0 < t_end) {
            return Err(Error::Input(format!("need t0 < tE, got ({t0}, {t_end})")));
        }
        let h = (t_end - t0) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| t0 + h * i as f64).collect();
        nodes[n] = t_end;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn intervals(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    /// Largest interval length.
    pub fn h(&self) -> f64 {
        self.intervals().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Quasi-uniformity ratio: shortest over longest interval.
    pub fn sigma(&self) -> f64 {
        let min = self.intervals().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        min / self.h()
    }

    /// Interval containing `t`; a shared node belongs to the interval on its left.
    pub fn locate(&self, t: f64) -> Result<usize> {
        let (t0, te) = (self.t0(), self.t_end());
        if !(t >= t0 && t <= te) {
            return Err(Error::Input(format!("t = {t} outside the mesh [{t0}, {te}]")));
        }
        let n = self.n_intervals();
        // first interval whose right node is >= t
        let i = self.nodes[1..].partition_point(|&b| b < t);
        Ok(i.min(n - 1))
    }

    /// Each interval split into `k` equal parts.
    pub fn refine(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("refinement factor must be positive".into()));
        }
        let mut nodes = Vec::with_capacity(self.n_intervals() * k + 1);
        for (a, b) in self.intervals() {
            for j in 0..k {
                nodes.push(a + (b - a) * j as f64 / k as f64);
            }
        }
        nodes.push(self.t_end());
        Self::new(nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_meshes() {
        let m = Mesh::uniform(0.0, 4.0, 4).unwrap();
        assert_eq!(m.intervals().collect::<Vec<_>>(), vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]);
        assert_eq!(m.h(), 1.0);
        assert_eq!(m.sigma(), 1.0);
        assert!((Mesh::uniform(0.0, 1.0, 100).unwrap().h() - 0.01).abs() < 1e-15);
        assert_eq!(Mesh::uniform(0.0, 4.0, 100).unwrap().n_intervals(), 100);
        assert!(Mesh::uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn rejects_invalid_nodes() {
        assert!(Mesh::new(vec![0.0]).is_err());
        assert!(Mesh::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Mesh::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn locate_uses_left_interval() {
        let m = Mesh::uniform(0.0, 4.0, 4).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), 0);
        assert_eq!(m.locate(1.0).unwrap(), 0);
        assert_eq!(m.locate(1.5).unwrap(), 1);
        assert_eq!(m.locate(4.0).unwrap(), 3);
        assert!(m.locate(4.5).is_err());
    }

    #[test]
    fn sigma_of_graded_mesh() {
        let m = Mesh::new(vec![0.0, 0.5, 2.0]).unwrap();
        assert!((m.sigma() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.refine(2).unwrap().n_intervals(), 4);
    }
}
