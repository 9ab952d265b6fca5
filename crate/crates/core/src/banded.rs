//! Banded matrices and LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square band matrix in LAPACK general-band layout (column major, with
/// `kl` extra rows reserved for fill-in).
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, ld, data: vec![0.0; ld * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    /// Adds `v` to entry `(i, j)`; panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.data[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let v = self.data[self.idx(j + r, j)].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(format!("zero or non-finite pivot in column {j}")));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.data.swap(a, b);
                }
            }
            if km > 0 {
                let d = 1.0 / self.data[self.idx(j, j)];
                let col = self.idx(j + 1, j);
                for v in &mut self.data[col..col + km] {
                    *v *= d;
                }
                for c in j + 1..=ju {
                    let ujc = self.data[self.idx(j, c)];
                    if ujc != 0.0 {
                        let dst = self.idx(j + 1, c);
                        for r in 0..km {
                            self.data[dst + r] -= self.data[col + r] * ujc;
                        }
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factored band matrix.
#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.m;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 && km > 0 {
                let col = m.idx(j + 1, j);
                for r in 0..km {
                    b[j + 1 + r] -= m.data[col + r] * bj;
                }
            }
        }
        let kv = kl + ku;
        for j in (0..n).rev() {
            b[j] /= m.data[m.idx(j, j)];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= m.data[m.idx(i, j)] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 5), (60, 7, 2), (30, 29, 29)] {
            let mut a = BandMatrix::zeros(n, kl, ku);
            for j in 0..n {
                for i in 0..n {
                    if a.in_band(i, j) {
                        // weak diagonal so pivoting matters
                        let v = if i == j { rng.gen_range(-0.1..0.1) } else { rng.gen_range(-1.0..1.0) };
                        a.add(i, j, v);
                    }
                }
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = a.mul_vec(&x);
            let lu = a.clone().factor().unwrap();
            lu.solve(&mut b);
            let err = x.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} kl={kl} ku={ku}: {err}");
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(2, 2, 1.0);
        assert!(a.factor().is_err());
    }
}
