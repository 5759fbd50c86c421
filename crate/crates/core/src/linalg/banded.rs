use super::LinalgError;

/// Upper bound on stored band entries (about 1.6 GB of `f64`).
const MAX_ENTRIES: usize = 200_000_000;

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl`
/// super-diagonals hold fill-in from row interchanges during factorization.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Result<Self, LinalgError> {
        let width = 2 * kl + ku + 1;
        let entries = n.saturating_mul(width);
        if entries > MAX_ENTRIES {
            return Err(LinalgError::TooLarge {
                entries,
                limit: MAX_ENTRIES,
            });
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; entries],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Adds `value` to entry `(i, j)`; panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let p = self.pos(i, j);
        self.data[p] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.pos(i, j)]
        }
    }

    pub fn add_to_diagonal(&mut self, shift: &[f64]) {
        for (i, s) in shift.iter().enumerate() {
            let p = self.pos(i, i);
            self.data[p] += s;
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[self.pos(i, j)] * xj;
            }
            *yi = acc;
        }
    }

    /// Gaussian elimination with partial pivoting restricted to the band.
    pub fn factor(mut self) -> Result<BandLu, LinalgError> {
        let n = self.n;
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let mut piv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.pos(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.pos(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular { column: k });
            }
            min_pivot = min_pivot.min(best);
            piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.pos(k, j), self.pos(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.pos(k, k)];
            let span = last_col - k;
            let krow = self.pos(k, k);
            for i in k + 1..=last_row {
                let ik = self.pos(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                // Rows k and i are disjoint slices of the storage.
                let (head, tail) = self.data.split_at_mut(i * w);
                let src = &head[krow + 1..krow + 1 + span];
                let dst_start = ik + 1 - i * w;
                let dst = &mut tail[dst_start..dst_start + span];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            width: w,
            data: self.data,
            piv,
            min_pivot,
        })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + (j + self.kl - i)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot magnitude encountered.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            let last = (i + self.kl + self.ku).min(n - 1);
            let row = i * self.width + self.kl - i;
            for (j, bj) in b.iter().enumerate().take(last + 1).skip(i + 1) {
                s -= self.data[row + j] * bj;
            }
            b[i] = s / self.at(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 5;
        let mut m = BandMatrix::zeros(n, 1, 1).unwrap();
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        let x_true = [1.0, -2.0, 3.0, 0.5, 4.0];
        let mut b = vec![0.0; n];
        m.matvec(&x_true, &mut b);
        let x = m.factor().unwrap().solve(&b);
        for (a, e) in x.iter().zip(x_true) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn pivots_on_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap.
        let mut m = BandMatrix::zeros(2, 1, 1).unwrap();
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        let x = m.factor().unwrap().solve(&[3.0, 7.0]);
        assert_eq!(x, vec![7.0, 3.0]);
    }

    #[test]
    fn singular_is_detected() {
        let mut m = BandMatrix::zeros(2, 1, 1).unwrap();
        m.add(0, 0, 1.0);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        assert_eq!(m.factor().unwrap_err(), LinalgError::Singular { column: 1 });
    }

    #[test]
    #[should_panic]
    fn add_outside_band_panics() {
        let mut m = BandMatrix::zeros(4, 1, 1).unwrap();
        m.add(0, 3, 1.0);
    }
}
