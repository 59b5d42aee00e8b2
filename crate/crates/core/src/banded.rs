//! Complex tridiagonal systems.
//!
//! The harmonic recurrence couples each optical harmonic only to its two
//! neighbouring ground-coherence harmonics, so with the unknowns interleaved
//! as `A_{-N}, B_{-N}, A_{-N+1}, …, A_N, B_N` the matrix is tridiagonal.
//! Elimination uses partial pivoting (the LAPACK `gtsv` scheme) because the
//! coupling entries dwarf the diagonal whenever Ω_c ≫ γ_cb.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// Sub-diagonal, length n − 1. `sub[i]` sits at row i + 1, column i.
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    /// Super-diagonal, length n − 1. `sup[i]` sits at row i, column i + 1.
    pub sup: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self {
            sub: vec![Complex64::new(0.0, 0.0); off],
            diag: vec![Complex64::new(0.0, 0.0); n],
            sup: vec![Complex64::new(0.0, 0.0); off],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix–vector product.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        assert_eq!(x.len(), n, "dimension mismatch");
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Solves `self · x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        self.clone().solve_into(rhs.to_vec())
    }

    /// [`solve`](Self::solve) reusing the storage of the matrix and of `rhs`.
    pub fn solve_into(self, rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::invalid(format!("rhs has length {}, matrix has {n}", rhs.len())));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let Tridiagonal { sub: mut dl, diag: mut d, sup: mut du } = self;
        let mut b = rhs;
        let zero = Complex64::new(0.0, 0.0);

        for k in 0..n - 1 {
            if dl[k] == zero {
                if d[k] == zero {
                    return Err(singular(k));
                }
            } else if cabs1(d[k]) >= cabs1(dl[k]) {
                let mult = dl[k] * recip(d[k]);
                d[k + 1] -= mult * du[k];
                b[k + 1] = b[k + 1] - mult * b[k];
                if k + 2 < n {
                    dl[k] = zero;
                }
            } else {
                // interchange rows k and k + 1; dl[k] then holds the fill-in
                // on the second super-diagonal
                let mult = d[k] * recip(dl[k]);
                d[k] = dl[k];
                let temp = d[k + 1];
                d[k + 1] = du[k] - mult * temp;
                if k + 2 < n {
                    dl[k] = du[k + 1];
                    du[k + 1] = -mult * dl[k];
                }
                du[k] = temp;
                let bk = b[k];
                b[k] = b[k + 1];
                b[k + 1] = bk - mult * b[k + 1];
            }
        }
        if d[n - 1] == zero {
            return Err(singular(n - 1));
        }

        for v in d.iter_mut() {
            *v = recip(*v);
        }
        b[n - 1] *= d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) * d[n - 2];
        }
        for k in (0..n.saturating_sub(2)).rev() {
            b[k] = (b[k] - du[k] * b[k + 1] - dl[k] * b[k + 2]) * d[k];
        }
        if b.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::numerical("tridiagonal solve produced non-finite values"));
        }
        Ok(b)
    }

    /// ‖self · x − rhs‖₂ / ‖rhs‖₂ (or the absolute norm when rhs vanishes).
    pub fn relative_residual(&self, x: &[Complex64], rhs: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        let num: f64 = ax.iter().zip(rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    /// Solves by first eliminating the odd-indexed unknowns, which leaves a
    /// tridiagonal system of half the size in the even ones. Requires an odd
    /// dimension and non-zero odd diagonal entries.
    pub fn solve_reduced(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::invalid(format!("rhs has length {}, matrix has {n}", rhs.len())));
        }
        if n % 2 == 0 {
            return Err(Error::invalid("odd-even reduction needs an odd dimension"));
        }
        let half = n / 2;
        let zero = Complex64::new(0.0, 0.0);
        let mut inv_odd = Vec::with_capacity(half);
        for i in 0..half {
            let g = self.diag[2 * i + 1];
            if g == zero {
                return Err(singular(2 * i + 1));
            }
            inv_odd.push(recip(g));
        }
        let mut reduced = Tridiagonal::zeros(half + 1);
        let mut r = vec![zero; half + 1];
        for i in 0..=half {
            let row = 2 * i;
            let mut d = self.diag[row];
            let mut b = rhs[row];
            if i < half {
                // odd unknown to the right
                let c = self.sup[row] * inv_odd[i];
                d -= c * self.sub[row];
                b -= c * rhs[row + 1];
                reduced.sup[i] = -c * self.sup[row + 1];
            }
            if i > 0 {
                let c = self.sub[row - 1] * inv_odd[i - 1];
                d -= c * self.sup[row - 1];
                b -= c * rhs[row - 1];
                reduced.sub[i - 1] = -c * self.sub[row - 2];
            }
            reduced.diag[i] = d;
            r[i] = b;
        }
        let even = reduced.solve(&r)?;
        let mut x = vec![zero; n];
        for i in 0..=half {
            x[2 * i] = even[i];
        }
        for i in 0..half {
            let j = 2 * i + 1;
            x[j] = (rhs[j] - self.sub[j - 1] * even[i] - self.sup[j] * even[i + 1]) * inv_odd[i];
        }
        if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::numerical("tridiagonal solve produced non-finite values"));
        }
        Ok(x)
    }

    /// Solve followed by one step of iterative refinement.
    pub fn solve_refined(&self, rhs: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        self.refine_with(rhs, Self::solve)
    }

    /// As [`Tridiagonal::solve_refined`] using [`Tridiagonal::solve_reduced`].
    pub fn solve_reduced_refined(&self, rhs: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        self.refine_with(rhs, Self::solve_reduced)
    }

    fn refine_with(
        &self,
        rhs: &[Complex64],
        solver: fn(&Self, &[Complex64]) -> Result<Vec<Complex64>>,
    ) -> Result<(Vec<Complex64>, f64)> {
        let mut x = solver(self, rhs)?;
        let mut residual = self.relative_residual(&x, rhs);
        if residual > 1e-14 {
            let ax = self.apply(&x);
            let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = solver(self, &r)?;
            let refined: Vec<Complex64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let refined_residual = self.relative_residual(&refined, rhs);
            if refined_residual < residual {
                x = refined;
                residual = refined_residual;
            }
        }
        Ok((x, residual))
    }
}

fn recip(z: Complex64) -> Complex64 {
    let s = 1.0 / z.norm_sqr();
    Complex64::new(z.re * s, -z.im * s)
}

fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

fn singular(k: usize) -> Error {
    Error::numerical(format!("singular tridiagonal system (zero pivot at row {k})"))
}
