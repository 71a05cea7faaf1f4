//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Reusable scratch for repeated solves of the same size.
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    c_prime: Vec<f64>,
}

impl Tridiagonal {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
    /// (`rhs` becomes `x`). `lower[0]` and `upper[n-1]` are ignored.
    ///
    /// No pivoting: callers pass diagonally dominant matrices.
    pub fn solve(
        &mut self,
        lower: &[f64],
        diag: &[f64],
        upper: &[f64],
        rhs: &mut [f64],
    ) -> Result<()> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n || rhs.len() != n {
            return Err(Error::Shape(format!(
                "tridiagonal bands {}/{}/{} and rhs {} differ",
                lower.len(),
                n,
                upper.len(),
                rhs.len()
            )));
        }
        if n == 0 {
            return Ok(());
        }
        self.c_prime.resize(n, 0.0);
        let cp = &mut self.c_prime;
        cp[0] = upper[0] / diag[0];
        rhs[0] /= diag[0];
        for i in 1..n {
            let m = diag[i] - lower[i] * cp[i - 1];
            cp[i] = upper[i] / m;
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= cp[i] * rhs[i + 1];
        }
        Ok(())
    }
}
