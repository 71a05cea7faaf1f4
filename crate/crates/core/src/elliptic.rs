//! Elliptic constraints on the half-line and half-plane.
//!
//! Two independent routes are provided for `(m^2 - d_xx) g = f` on `x > 0`:
//! image-charge kernels evaluated by Simpson quadrature split at `y = x`, and
//! second-order finite differences with a tridiagonal solve. The half-plane
//! problem is reduced to the scalar `s = div p` and solved mode by mode after
//! a discrete Fourier transform in the periodic `y` direction.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{HalfLineGrid, HalfPlaneGrid};
use crate::tridiag::Tridiagonal;

/// Boundary condition at `x = 0` selecting the image sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `g(0) = 0`, kernel `(e^{-m|x-y|} - e^{-m(x+y)}) / 2m`.
    Dirichlet,
    /// `g'(0) = 0`, kernel `(e^{-m|x-y|} + e^{-m(x+y)}) / 2m`.
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolve {
    pub values: Vec<f64>,
    /// Largest contribution the operand could still make from beyond `x = L`
    /// if it kept its last sampled deviation from `far_field`.
    pub truncation_estimate: f64,
}

/// `int_0^H s^k e^{-m s} ds` for `k = 0, 1, 2`.
fn exp_moments(mass: f64, len: f64) -> [f64; 3] {
    let z = mass * len;
    if z < 1.0 {
        // Series avoids the cancellation of the closed form for small `z`.
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut sum = 0.0;
            for j in 0..40 {
                sum += term / (k + j + 1) as f64;
                term *= -z / (j + 1) as f64;
            }
            *o = sum * len.powi(k as i32 + 1);
        }
        out
    } else {
        let e = (-z).exp();
        [
            (1.0 - e) / mass,
            (1.0 - e * (1.0 + z)) / (mass * mass),
            (2.0 - e * (2.0 + 2.0 * z + z * z)) / mass.powi(3),
        ]
    }
}

/// Product-integration weights against `e^{-m s}` for quadratic interpolants,
/// exact whenever the operand is a quadratic.
struct QuadraticWeights {
    /// Over `[0, 2h]` for values at `s = 0, h, 2h`.
    pair: [f64; 3],
    /// Over `[0, h]` for values at `s = 0, h, -h`.
    first: [f64; 3],
}

impl QuadraticWeights {
    fn new(mass: f64, h: f64) -> Self {
        let [m0, m1, m2] = exp_moments(mass, 2.0 * h);
        let hh = h * h;
        let pair = [
            (m2 - 3.0 * h * m1 + 2.0 * hh * m0) / (2.0 * hh),
            -(m2 - 2.0 * h * m1) / hh,
            (m2 - h * m1) / (2.0 * hh),
        ];
        let [p0, p1, p2] = exp_moments(mass, h);
        let first = [(hh * p0 - p2) / hh, (p2 + h * p1) / (2.0 * hh), (p2 - h * p1) / (2.0 * hh)];
        Self { pair, first }
    }
}

/// Image-kernel solution of `(m^2 - d_xx) g = f` on the half-line.
///
/// `f` is sampled on `grid`; beyond `L` it is taken to equal `far_field`
/// (the tail is integrated exactly). Runs in `O(n)` through exponential
/// recursions of the left and right partial integrals.
pub fn image_convolution(
    f: &[f64],
    grid: &HalfLineGrid,
    mass: f64,
    boundary: Boundary,
    far_field: f64,
) -> Result<KernelSolve> {
    grid.check_len("kernel operand", f.len())?;
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("kernel mass must be positive, got {mass}")));
    }
    let n = f.len();
    let h = grid.h;
    let e1 = (-mass * h).exp();
    let e2 = e1 * e1;

    let w = QuadraticWeights::new(mass, h);
    // left[i] = int_0^{x_i} e^{-m (x_i - y)} f(y) dy
    let mut left = vec![0.0; n];
    left[1] = w.first[0] * f[1] + w.first[1] * f[0] + w.first[2] * f[2];
    for i in 2..n {
        left[i] = e2 * left[i - 2] + w.pair[0] * f[i] + w.pair[1] * f[i - 1] + w.pair[2] * f[i - 2];
    }
    // right[i] = int_{x_i}^{L} e^{-m (y - x_i)} f(y) dy
    let mut right = vec![0.0; n];
    right[n - 2] = w.first[0] * f[n - 2] + w.first[1] * f[n - 1] + w.first[2] * f[n - 3];
    for i in (0..n - 2).rev() {
        right[i] = e2 * right[i + 2] + w.pair[0] * f[i] + w.pair[1] * f[i + 1] + w.pair[2] * f[i + 2];
    }

    let length = grid.length();
    let tail = |x: f64| far_field * (-mass * (length - x)).exp() / mass;
    let image_sign = match boundary {
        Boundary::Dirichlet => -1.0,
        Boundary::Neumann => 1.0,
    };
    let image_total = right[0] + tail(0.0);
    let mut values = (0..n)
        .map(|i| {
            let x = grid.x(i);
            let direct = left[i] + right[i] + tail(x);
            let image = (-mass * x).exp() * image_total;
            (direct + image_sign * image) / (2.0 * mass)
        })
        .collect::<Vec<_>>();
    if boundary == Boundary::Dirichlet {
        values[0] = 0.0;
    }
    let truncation_estimate = (f[n - 1] - far_field).abs() / (mass * mass);
    Ok(KernelSolve {
        values,
        truncation_estimate,
    })
}

/// The operator `K f = 1/2 int_0^inf (e^{-|x-y|} - e^{-(x+y)}) f(y) dy`.
pub fn k_dirichlet(f: &[f64], grid: &HalfLineGrid) -> Result<KernelSolve> {
    image_convolution(f, grid, 1.0, Boundary::Dirichlet, 0.0)
}

/// Neumann inverse of `1 - d_xx`: `1/2 int_0^inf (e^{-|x-y|} + e^{-(x+y)}) f(y) dy`.
pub fn k_neumann(f: &[f64], grid: &HalfLineGrid) -> Result<KernelSolve> {
    image_convolution(f, grid, 1.0, Boundary::Neumann, 0.0)
}

/// Direct `O(n^2)` Simpson quadrature of the image kernels, split at `y = x`.
/// Slow reference used to check [`image_convolution`].
pub fn image_convolution_direct(
    f: &[f64],
    grid: &HalfLineGrid,
    mass: f64,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    grid.check_len("kernel operand", f.len())?;
    let n = f.len();
    let h = grid.h;
    let sign = match boundary {
        Boundary::Dirichlet => -1.0,
        Boundary::Neumann => 1.0,
    };
    let integrate = |lo: usize, hi: usize, w: &dyn Fn(usize) -> f64| -> f64 {
        let m = hi - lo;
        if m == 0 {
            return 0.0;
        }
        let pts = |a: usize, b: usize| -> f64 {
            // Simpson over an even number of intervals [a, b]
            if a == b {
                return 0.0;
            }
            let mut s = w(a) * f[a] + w(b) * f[b];
            for j in a + 1..b {
                let c = if (j - a) % 2 == 1 { 4.0 } else { 2.0 };
                s += c * w(j) * f[j];
            }
            s * h / 3.0
        };
        if m % 2 == 0 {
            pts(lo, hi)
        } else if m == 1 {
            // four-point rule for a single interval, leaning into the grid
            let wf = |j: usize| w(j) * f[j];
            if lo + 3 < n {
                h / 24.0 * (9.0 * wf(lo) + 19.0 * wf(hi) - 5.0 * wf(lo + 2) + wf(lo + 3))
            } else {
                h / 24.0 * (9.0 * wf(hi) + 19.0 * wf(lo) - 5.0 * wf(lo - 1) + wf(lo - 2))
            }
        } else {
            // 3/8 rule on the first three intervals, Simpson on the rest
            let w38 = [1.0, 3.0, 3.0, 1.0];
            let s38: f64 = (0..4).map(|k| w38[k] * w(lo + k) * f[lo + k]).sum::<f64>() * 3.0 * h
                / 8.0;
            s38 + pts(lo + 3, hi)
        }
    };
    let out = (0..n)
        .map(|i| {
            let x = grid.x(i);
            let a = integrate(0, i, &|j| (-mass * (x - grid.x(j))).exp());
            let b = integrate(i, n - 1, &|j| (-mass * (grid.x(j) - x)).exp());
            let c = integrate(0, n - 1, &|j| (-mass * (x + grid.x(j))).exp());
            (a + b + sign * c) / (2.0 * mass)
        })
        .collect();
    Ok(out)
}

/// Centered first difference; second-order one-sided stencils at both ends.
pub fn centered_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// `Q_x` for a field obeying the ghost-point Neumann condition: centered in
/// the interior, exactly zero at `x = 0` (mirror ghost), one-sided at `x = L`.
pub fn neumann_derivative(q: &[f64], h: f64) -> Vec<f64> {
    let mut d = centered_derivative(q, h);
    d[0] = 0.0;
    d
}

/// Finite-difference solve of `-Q'' + Q = -U_x`, `Q'(0) = 0`, `Q(L) = 0`.
///
/// Row 0 is the half-cell balance `2(Q_0 - Q_1)/h^2 + Q_0 = -(U_1 - U_0)/h`;
/// interior rows use `D_2 Q` and the centered `D_1 U`. The matrix is an
/// M-matrix, so a nondecreasing `U` yields `Q <= 0`.
pub fn solve_q_1d(u: &[f64], grid: &HalfLineGrid) -> Result<Vec<f64>> {
    grid.check_len("U", u.len())?;
    let mut solver = Tridiagonal::new();
    let mut q = vec![0.0; u.len()];
    solve_q_1d_into(u, grid.h, &mut solver, &mut q)?;
    Ok(q)
}

pub(crate) fn solve_q_1d_into(
    u: &[f64],
    h: f64,
    solver: &mut Tridiagonal,
    q: &mut [f64],
) -> Result<()> {
    let n = u.len();
    let ih2 = 1.0 / (h * h);
    let mut lower = vec![-ih2; n];
    let mut diag = vec![2.0 * ih2 + 1.0; n];
    let mut upper = vec![-ih2; n];
    upper[0] = -2.0 * ih2;
    q[0] = -(u[1] - u[0]) / h;
    for i in 1..n - 1 {
        q[i] = -(u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    lower[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    q[n - 1] = 0.0;
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    solver.solve(&lower, &diag, &upper, q)
}

/// Interior residual `max |-D_2 Q + Q + D_1 U|` of the tridiagonal route.
pub fn q_discrete_residual(u: &[f64], q: &[f64], grid: &HalfLineGrid) -> Result<f64> {
    grid.check_len("U", u.len())?;
    grid.check_len("Q", q.len())?;
    let h = grid.h;
    let mut worst: f64 = 0.0;
    for i in 1..u.len() - 1 {
        let r = -(q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h)
            + q[i]
            + (u[i + 1] - u[i - 1]) / (2.0 * h);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Solution of the half-plane constraint `-grad div p + p + grad v = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivpSolution {
    /// `s = div p`, zero on `x = 0` and `x = Lx`.
    pub s: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

/// Spectral-in-`y`, finite-difference-in-`x` solver for the half-plane constraint.
///
/// Holds FFT plans; one instance per worker. Mode 0 is solved in the `Q`-form of
/// [`solve_q_1d`] so a `y`-independent field reproduces the 1D solve exactly.
/// Modes `k != 0` solve `(1 + kappa^2 - D_2) s = -(D_2 - kappa^2) v` with `s = 0`
/// at both ends and set `p = grad s - grad v`.
pub struct DivpSolver {
    grid: HalfPlaneGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DivpSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DivpSolver").field("grid", &self.grid).finish()
    }
}

impl DivpSolver {
    pub fn new(grid: HalfPlaneGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.ny),
            inverse: planner.plan_fft_inverse(grid.ny),
        }
    }

    pub fn grid(&self) -> &HalfPlaneGrid {
        &self.grid
    }

    /// Angular wavenumber of FFT bin `k`; zero for the Nyquist bin when
    /// `for_derivative` (its first derivative is not representable).
    pub fn wavenumber(&self, k: usize, for_derivative: bool) -> f64 {
        let ny = self.grid.ny;
        let base = 2.0 * std::f64::consts::PI / self.grid.ly();
        if k == ny / 2 && for_derivative {
            0.0
        } else if k <= ny / 2 {
            base * k as f64
        } else {
            -base * (ny - k) as f64
        }
    }

    /// Row-wise transform in `y`; returns mode-major spectra (`k * nx + i`).
    fn to_modes(&self, field: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny);
        let mut rows: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        rows.par_chunks_mut(ny).for_each(|row| self.forward.process(row));
        let mut modes = vec![Complex64::new(0.0, 0.0); nx * ny];
        for i in 0..nx {
            for k in 0..ny {
                modes[k * nx + i] = rows[i * ny + k];
            }
        }
        modes
    }

    fn from_modes(&self, modes: &[Complex64]) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny);
        let mut rows = vec![Complex64::new(0.0, 0.0); nx * ny];
        for k in 0..ny {
            for i in 0..nx {
                rows[i * ny + k] = modes[k * nx + i];
            }
        }
        rows.par_chunks_mut(ny).for_each(|row| self.inverse.process(row));
        let scale = 1.0 / ny as f64;
        rows.iter().map(|c| c.re * scale).collect()
    }

    /// Spectral `d/dy` of a real field.
    pub fn dy(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len("field", field.len())?;
        let nx = self.grid.nx();
        let mut modes = self.to_modes(field);
        modes.par_chunks_mut(nx).enumerate().for_each(|(k, col)| {
            let kappa = self.wavenumber(k, true);
            for c in col.iter_mut() {
                *c *= Complex64::new(0.0, kappa);
            }
        });
        Ok(self.from_modes(&modes))
    }

    pub fn solve(&self, v: &[f64]) -> Result<DivpSolution> {
        self.grid.check_len("v", v.len())?;
        let (nx, ny) = (self.grid.nx(), self.grid.ny);
        let hx = self.grid.hx();
        let v_hat = self.to_modes(v);
        let mut s_hat = vec![Complex64::new(0.0, 0.0); nx * ny];
        let mut p1_hat = vec![Complex64::new(0.0, 0.0); nx * ny];
        let mut p2_hat = vec![Complex64::new(0.0, 0.0); nx * ny];

        s_hat
            .par_chunks_mut(nx)
            .zip(p1_hat.par_chunks_mut(nx))
            .zip(p2_hat.par_chunks_mut(nx))
            .enumerate()
            .try_for_each_init(Tridiagonal::new, |solver, (k, ((s, p1), p2))| {
                let vk = &v_hat[k * nx..(k + 1) * nx];
                if k == 0 {
                    // mean mode: Q-form, exact planar reduction
                    let vr: Vec<f64> = vk.iter().map(|c| c.re).collect();
                    let mut q = vec![0.0; nx];
                    solve_q_1d_into(&vr, hx, solver, &mut q)?;
                    let qx = neumann_derivative(&q, hx);
                    for i in 0..nx {
                        s[i] = Complex64::new(qx[i], 0.0);
                        p1[i] = Complex64::new(q[i], 0.0);
                    }
                    return Ok(());
                }
                let kappa = self.wavenumber(k, false);
                let k2 = kappa * kappa;
                solve_mode(vk, hx, k2, solver, s)?;
                let dkappa = self.wavenumber(k, true);
                let ds = centered_derivative_c(s, hx);
                let dv = centered_derivative_c(vk, hx);
                for i in 0..nx {
                    p1[i] = ds[i] - dv[i];
                    p2[i] = Complex64::new(0.0, dkappa) * (s[i] - vk[i]);
                }
                Ok::<(), Error>(())
            })?;

        let mut s = self.from_modes(&s_hat);
        for j in 0..ny {
            s[self.grid.idx(0, j)] = 0.0;
        }
        Ok(DivpSolution {
            s,
            p1: self.from_modes(&p1_hat),
            p2: self.from_modes(&p2_hat),
        })
    }

    /// `max |d_y p1 - D_x p2|` with the solver's own `x` stencil and either
    /// the spectral or the centered periodic `y` derivative.
    pub fn curl_residual(&self, p1: &[f64], p2: &[f64], spectral_y: bool) -> Result<f64> {
        self.grid.check_len("p1", p1.len())?;
        self.grid.check_len("p2", p2.len())?;
        let (nx, ny) = (self.grid.nx(), self.grid.ny);
        let hy = self.grid.hy;
        let dy_p1 = if spectral_y {
            self.dy(p1)?
        } else {
            let mut d = vec![0.0; nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    let jp = (j + 1) % ny;
                    let jm = (j + ny - 1) % ny;
                    d[i * ny + j] = (p1[i * ny + jp] - p1[i * ny + jm]) / (2.0 * hy);
                }
            }
            d
        };
        let dx_p2 = x_derivative(p2, &self.grid);
        Ok(dy_p1
            .iter()
            .zip(&dx_p2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Column-wise [`centered_derivative`] of a row-major half-plane field.
pub fn x_derivative(field: &[f64], grid: &HalfPlaneGrid) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny);
    let mut out = vec![0.0; nx * ny];
    let mut col = vec![0.0; nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = field[i * ny + j];
        }
        let d = centered_derivative(&col, grid.hx());
        for i in 0..nx {
            out[i * ny + j] = d[i];
        }
    }
    out
}

fn centered_derivative_c(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// `(1 + kappa^2 - D_2) s = -(D_2 - kappa^2) v`, `s_0 = s_{n-1} = 0`, real and
/// imaginary parts solved separately (the operator is real).
fn solve_mode(
    v: &[Complex64],
    h: f64,
    k2: f64,
    solver: &mut Tridiagonal,
    s: &mut [Complex64],
) -> Result<()> {
    let n = v.len();
    let ih2 = 1.0 / (h * h);
    let mut lower = vec![-ih2; n];
    let mut diag = vec![2.0 * ih2 + 1.0 + k2; n];
    let mut upper = vec![-ih2; n];
    lower[0] = 0.0;
    upper[0] = 0.0;
    diag[0] = 1.0;
    lower[n - 1] = 0.0;
    upper[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for i in 1..n - 1 {
        let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * ih2 - v[i] * k2;
        re[i] = -lap.re;
        im[i] = -lap.im;
    }
    solver.solve(&lower, &diag, &upper, &mut re)?;
    solver.solve(&lower, &diag, &upper, &mut im)?;
    for i in 0..n {
        s[i] = Complex64::new(re[i], im[i]);
    }
    Ok(())
}

/// Convenience wrapper: one-shot solve of the half-plane constraint.
pub fn solve_divp_2d(v: &[f64], grid: &HalfPlaneGrid) -> Result<DivpSolution> {
    DivpSolver::new(*grid).solve(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, length: f64) -> HalfLineGrid {
        HalfLineGrid::new(n, length).unwrap()
    }

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter()
            .enumerate()
            .map(|(i, v)| (v - b(i)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dirichlet_vanishes_at_origin() {
        let g = grid(201, 20.0);
        let f: Vec<f64> = g.nodes().iter().map(|x| (x * 0.7).sin() + 2.0).collect();
        assert_eq!(k_dirichlet(&f, &g).unwrap().values[0], 0.0);
    }

    #[test]
    fn constants_with_far_field() {
        let g = grid(4001, 40.0);
        let one = vec![1.0; g.n];
        let d = image_convolution(&one, &g, 1.0, Boundary::Dirichlet, 1.0).unwrap();
        assert!(max_err(&d.values, |i| 1.0 - (-g.x(i)).exp()) < 1e-10);
        let nm = image_convolution(&one, &g, 1.0, Boundary::Neumann, 1.0).unwrap();
        assert!(max_err(&nm.values, |_| 1.0) < 1e-10);
        assert_eq!(d.truncation_estimate, 0.0);
    }

    #[test]
    fn exponential_closed_forms() {
        let g = grid(6001, 60.0);
        let f: Vec<f64> = g.nodes().iter().map(|x| (-x).exp()).collect();
        let d = k_dirichlet(&f, &g).unwrap();
        assert!(max_err(&d.values, |i| 0.5 * g.x(i) * (-g.x(i)).exp()) < 1e-9);
        let nm = k_neumann(&f, &g).unwrap();
        assert!(max_err(&nm.values, |i| 0.5 * (g.x(i) + 1.0) * (-g.x(i)).exp()) < 1e-9);
    }

    #[test]
    fn recursion_matches_direct_quadrature() {
        for n in [256, 257] {
            let g = grid(n, 12.0);
            let f: Vec<f64> = g.nodes().iter().map(|x| x * x * (-0.5 * x).exp()).collect();
            for b in [Boundary::Dirichlet, Boundary::Neumann] {
                for mass in [1.0, 1.7] {
                    let fast = image_convolution(&f, &g, mass, b, 0.0).unwrap().values;
                    let slow = image_convolution_direct(&f, &g, mass, b).unwrap();
                    let scale = slow.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let e = max_err(&fast, |i| slow[i]);
                    assert!(e < 1e-6 * scale, "n={n} {b:?} m={mass}: {e}");
                }
            }
        }
    }

    #[test]
    fn q_of_exponential_gradient() {
        // U = 1 - e^{-x}, U_x = e^{-x}, Q = -((x+1)/2) e^{-x}
        let mut last = f64::NAN;
        for n in [801, 1601, 3201] {
            let g = grid(n, 40.0);
            let u: Vec<f64> = g.nodes().iter().map(|x| 1.0 - (-x).exp()).collect();
            let q = solve_q_1d(&u, &g).unwrap();
            let err = max_err(&q, |i| -0.5 * (g.x(i) + 1.0) * (-g.x(i)).exp());
            if last.is_finite() {
                let order = (last / err).log2();
                assert!((order - 2.0).abs() < 0.3, "order {order}");
            }
            last = err;
        }
    }

    #[test]
    fn q_residual_and_sign() {
        let g = grid(513, 30.0);
        let u: Vec<f64> = g.nodes().iter().map(|x| 0.2 + 0.5 * (x - 10.0).tanh()).collect();
        let q = solve_q_1d(&u, &g).unwrap();
        assert!(q_discrete_residual(&u, &q, &g).unwrap() < 1e-10);
        assert!(q.iter().all(|&v| v <= 1e-10));
        assert_eq!(neumann_derivative(&q, g.h)[0], 0.0);
        let flat = vec![0.4; g.n];
        assert!(solve_q_1d(&flat, &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn q_shape_error() {
        let g = grid(64, 10.0);
        assert!(matches!(solve_q_1d(&[0.0; 10], &g), Err(Error::Shape(_))));
    }

    #[test]
    fn planar_field_reduces_to_q_solve() {
        let pg = HalfPlaneGrid::new(257, 30.0, 8, 5.0).unwrap();
        let col: Vec<f64> = pg.x.nodes().iter().map(|x| 0.1 + 0.2 * (x - 5.0).tanh()).collect();
        let mut v = vec![0.0; pg.len()];
        for i in 0..pg.nx() {
            for j in 0..pg.ny {
                v[pg.idx(i, j)] = col[i];
            }
        }
        let sol = solve_divp_2d(&v, &pg).unwrap();
        let q = solve_q_1d(&col, &pg.x).unwrap();
        for i in 0..pg.nx() {
            for j in 0..pg.ny {
                assert!((sol.p1[pg.idx(i, j)] - q[i]).abs() < 1e-14);
                assert!(sol.p2[pg.idx(i, j)].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_mode_matches_kernel_route() {
        // v = (1 - e^{-x}) sin(ky): s = a(x) sin(ky) with
        // (m^2 - d_xx) a = e^{-x} + k^2 (1 - e^{-x}), a(0) = 0
        let (lx, ly) = (40.0, 20.0);
        let pg = HalfPlaneGrid::new(4097, lx, 8, ly).unwrap();
        let kappa = 2.0 * std::f64::consts::PI / ly;
        let k2 = kappa * kappa;
        let mass = (1.0 + k2).sqrt();
        let mut v = vec![0.0; pg.len()];
        for i in 0..pg.nx() {
            for j in 0..pg.ny {
                v[pg.idx(i, j)] = (1.0 - (-pg.x.x(i)).exp()) * (kappa * pg.y(j)).sin();
            }
        }
        let sol = solve_divp_2d(&v, &pg).unwrap();
        let rhs: Vec<f64> = pg
            .x
            .nodes()
            .iter()
            .map(|x| (-x).exp() + k2 * (1.0 - (-x).exp()))
            .collect();
        let kernel = image_convolution(&rhs, &pg.x, mass, Boundary::Dirichlet, k2).unwrap();
        let exact = |x: f64| {
            k2 / (mass * mass) + (1.0 - k2) / k2 * (-x).exp()
                - (k2 / (mass * mass) + (1.0 - k2) / k2) * (-mass * x).exp()
        };
        let j = 2; // sin(k y_2) = sin(pi/2) = 1
        for i in 0..pg.nx() {
            let x = pg.x.x(i);
            assert!((kernel.values[i] - exact(x)).abs() < 1e-9, "kernel at x={x}");
            if x < lx - 20.0 {
                let s = sol.s[pg.idx(i, j)];
                assert!((s - kernel.values[i]).abs() < 1e-6, "x={x}: {s} vs {}", kernel.values[i]);
            }
        }
        assert!(sol.s.iter().take(pg.ny).all(|&v| v == 0.0));
    }

    #[test]
    fn curl_free_to_round_off_and_fd_curl_is_second_order() {
        let field = |pg: &HalfPlaneGrid| {
            let mut v = vec![0.0; pg.len()];
            for i in 0..pg.nx() {
                for j in 0..pg.ny {
                    let (x, y) = (pg.x.x(i), pg.y(j));
                    let ky = 2.0 * std::f64::consts::PI * y / pg.ly();
                    v[pg.idx(i, j)] = 0.3 * (x - 4.0).tanh()
                        + 0.05 * x * (-x).exp() * (ky.sin() + 0.5 * (2.0 * ky).cos());
                }
            }
            v
        };
        let mut last = f64::NAN;
        for (nx, ny) in [(257, 16), (513, 32), (1025, 64)] {
            let pg = HalfPlaneGrid::new(nx, 30.0, ny, 10.0).unwrap();
            let solver = DivpSolver::new(pg);
            let sol = solver.solve(&field(&pg)).unwrap();
            assert!(solver.curl_residual(&sol.p1, &sol.p2, true).unwrap() < 1e-10);
            let fd = solver.curl_residual(&sol.p1, &sol.p2, false).unwrap();
            if last.is_finite() {
                let order = (last / fd).log2();
                assert!(order > 1.7, "order {order}");
            }
            last = fd;
        }
    }
}
