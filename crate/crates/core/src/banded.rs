//! Banded LU without pivoting for M-matrices.
//!
//! For `M = σI − A` with `A` Metzler and `σ` above the Perron root, Gaussian
//! elimination without pivoting keeps every off-diagonal entry of `L` and `U`
//! nonpositive (each Schur update subtracts a nonnegative product from a
//! nonpositive entry). Solves therefore only ever add nonnegative terms, and a
//! nonnegative right-hand side gives a nonnegative solution in floating point.
//! A nonpositive pivot means `σ` is not above the Perron root.

#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedLu {
    /// Zero matrix of size `n` with the given bandwidths (clamped to `n − 1`).
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        BandedLu {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    /// Whether `(i, j)` lies inside the band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Sets an in-band entry. Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    /// In-place factorization. Returns the index of the first nonpositive
    /// pivot on failure.
    pub fn factor(&mut self) -> Result<(), usize> {
        let n = self.n;
        let width = self.lower + self.upper + 1;
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if !(pivot > 0.0) {
                return Err(k);
            }
            let row_end = (k + self.upper).min(n - 1);
            let krow = k * width;
            for i in (k + 1)..=(k + self.lower).min(n - 1) {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                let irow = i * width;
                for j in (k + 1)..=row_end {
                    let kj = krow + (j + self.lower - k);
                    let ij = irow + (j + self.lower - i);
                    self.data[ij] -= l * self.data[kj];
                }
            }
        }
        Ok(())
    }

    /// Solves `L U x = b` in place after [`BandedLu::factor`].
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(self.lower)..i {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..=(i + self.upper).min(n - 1) {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = acc / self.data[self.idx(i, i)];
        }
    }
}
