//! Symmetric skyline (variable-band) storage with in-place LDLᵀ factorization.

use crate::error::{Result, ShellError};

/// Upper triangle stored by columns: column j holds rows first[j]..=j contiguously.
#[derive(Debug, Clone)]
pub struct SkylineMatrix {
    n: usize,
    first: Vec<usize>,
    /// Start of column j in `data`; column j ends at `start[j + 1]` with the diagonal last.
    start: Vec<usize>,
    data: Vec<f64>,
    factored: bool,
}

impl SkylineMatrix {
    /// Profile from element connectivity lists of equation numbers.
    pub fn from_connectivity<'a>(n: usize, elements: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for eqs in elements {
            if let Some(&lo) = eqs.iter().min() {
                for &j in eqs {
                    first[j] = first[j].min(lo);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        start.push(0);
        for j in 0..n {
            acc += j - first[j] + 1;
            start.push(acc);
        }
        SkylineMatrix { n, first, start, data: vec![0.0; acc], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn stored(&self) -> usize {
        self.data.len()
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
        self.factored = false;
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        (i >= self.first[j]).then(|| self.start[j] + (i - self.first[j]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pos(i, j).map_or(0.0, |p| self.data[p])
    }

    /// Adds to the (i, j) entry; entries outside the profile are a programming error.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pos(i, j).expect("entry outside skyline profile");
        self.data[p] += v;
    }

    /// Scatter a dense symmetric element matrix; `eqs[k] = None` drops the row/column.
    pub fn scatter(&mut self, eqs: &[Option<usize>], ke: &[f64]) {
        let m = eqs.len();
        for a in 0..m {
            let Some(i) = eqs[a] else { continue };
            for b in 0..m {
                let Some(j) = eqs[b] else { continue };
                if i <= j {
                    // ties map several local rows to one equation: count (a,b) and (b,a) once each
                    let p = self.start[j] + (i - self.first[j]);
                    self.data[p] += ke[a * m + b];
                }
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let col = &self.data[self.start[j]..self.start[j + 1]];
            let f = self.first[j];
            for (k, &v) in col.iter().enumerate() {
                let i = f + k;
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// In-place LDLᵀ. Returns the number of negative pivots (inertia).
    pub fn factor(&mut self) -> Result<usize> {
        let n = self.n;
        let scale = (0..n).map(|j| self.data[self.start[j + 1] - 1].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut negative = 0;
        for j in 0..n {
            let fj = self.first[j];
            let sj = self.start[j];
            // reduce off-diagonal entries of column j: u_ij -= Σ_k l_ki u_kj over the common profile
            for i in fj..j {
                let fi = self.first[i];
                let si = self.start[i];
                let lo = fi.max(fj);
                let mut s = 0.0;
                for k in lo..i {
                    s += self.data[si + (k - fi)] * self.data[sj + (k - fj)];
                }
                self.data[sj + (i - fj)] -= s;
            }
            // divide by pivots and update the diagonal
            let mut d = self.data[self.start[j + 1] - 1];
            for i in fj..j {
                let di = self.data[self.start[i + 1] - 1];
                let u = self.data[sj + (i - fj)];
                let l = u / di;
                d -= l * u;
                self.data[sj + (i - fj)] = l;
            }
            if !(d.abs() > 1e-14 * scale) || !d.is_finite() {
                return Err(ShellError::Singular { equation: j });
            }
            if d < 0.0 {
                negative += 1;
            }
            self.data[self.start[j + 1] - 1] = d;
        }
        self.factored = true;
        Ok(negative)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve before factor");
        let n = self.n;
        let mut x = b.to_vec();
        // L y = b
        for j in 0..n {
            let fj = self.first[j];
            let sj = self.start[j];
            let mut s = 0.0;
            for i in fj..j {
                s += self.data[sj + (i - fj)] * x[i];
            }
            x[j] -= s;
        }
        for j in 0..n {
            x[j] /= self.data[self.start[j + 1] - 1];
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let fj = self.first[j];
            let sj = self.start[j];
            let xj = x[j];
            for i in fj..j {
                x[i] -= self.data[sj + (i - fj)] * xj;
            }
        }
        x
    }
}
