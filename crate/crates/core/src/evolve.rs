//! Time integration of the half-line system `U_t + f(U)_x + Q_x = 0`, its
//! nonlocal form `U_t + f(U)_x + U - KU = 0`, and the half-plane system
//! `u_t + f(u)_x + g(u)_y + div q = 0`.
//!
//! Space: node-centred finite volumes, minmod-limited MUSCL reconstruction and
//! the local Lax-Friedrichs flux; inflow value `u-` held at `x = 0`,
//! zero-gradient extrapolation at `x = L`, periodic in `y`. Time: SSP-RK2 with
//! the elliptic solve redone at every stage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{image_convolution, neumann_derivative, solve_q_1d, Boundary, DivpSolver};
use crate::error::{Error, Result};
use crate::flux::{FluxPair, Polynomial};
use crate::grid::{HalfLineGrid, HalfPlaneGrid};

pub const DEFAULT_CFL: f64 = 0.4;

/// Rows handled per rayon task in the flux sweeps.
const MIN_ROWS_PER_TASK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `Q` from the tridiagonal solve, nonlocal term `Q_x`.
    Coupled,
    /// Nonlocal term `(U - u-) - K(U - u-)` by image-kernel quadrature.
    Convolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State1D {
    pub t: f64,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub steps: usize,
    /// Largest Courant number `dt max|f'(U)| / h` taken so far.
    pub max_courant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State2D {
    pub t: f64,
    pub u: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// `div q`.
    pub s: Vec<f64>,
    pub steps: usize,
    pub max_courant: f64,
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a > 0.0 {
        a.min(b)
    } else {
        a.max(b)
    }
}

/// `-(F_{i+1/2} - F_{i-1/2}) / h` along `x` for `n` rows of `width` values
/// each (row `i` holds every `y` sample at `x_i`). Row 0 is left untouched:
/// the inflow value is imposed there. Left ghost `left`, right ghosts copy row `n-1`.
fn x_flux_divergence(
    u: &[f64],
    width: usize,
    h: f64,
    left: f64,
    poly: &Polynomial,
    out: &mut [f64],
) {
    let n = u.len() / width;
    let at = |i: isize, j: usize| -> f64 {
        if i < 0 {
            left
        } else if i as usize >= n {
            u[(n - 1) * width + j]
        } else {
            u[i as usize * width + j]
        }
    };
    let slope = |i: isize, j: usize| minmod(at(i, j) - at(i - 1, j), at(i + 1, j) - at(i, j));
    // interface i + 1/2 for i = 0..n-1
    let mut fluxes = vec![0.0; n * width];
    fluxes
        .par_chunks_mut(width)
        .with_min_len(MIN_ROWS_PER_TASK)
        .enumerate()
        .for_each(|(i, row)| {
            let i = i as isize;
            for (j, fl) in row.iter_mut().enumerate() {
                let ul = at(i, j) + 0.5 * slope(i, j);
                let ur = at(i + 1, j) - 0.5 * slope(i + 1, j);
                *fl = llf(poly, ul, ur);
            }
        });
    out[..width].iter_mut().for_each(|v| *v = 0.0);
    out[width..]
        .par_chunks_mut(width)
        .with_min_len(MIN_ROWS_PER_TASK)
        .enumerate()
        .for_each(|(k, row)| {
            let i = k + 1;
            for (j, o) in row.iter_mut().enumerate() {
                *o = -(fluxes[i * width + j] - fluxes[(i - 1) * width + j]) / h;
            }
        });
}

#[inline]
fn llf(poly: &Polynomial, ul: f64, ur: f64) -> f64 {
    let a = poly.deriv(1, ul).abs().max(poly.deriv(1, ur).abs());
    0.5 * (poly.eval(ul) + poly.eval(ur)) - 0.5 * a * (ur - ul)
}

/// Periodic `y` sweep: adds `-(G_{j+1/2} - G_{j-1/2}) / hy` to `out`, rows `1..`.
fn y_flux_divergence(u: &[f64], ny: usize, hy: f64, poly: &Polynomial, out: &mut [f64]) {
    out.par_chunks_mut(ny)
        .zip(u.par_chunks(ny))
        .skip(1)
        .for_each(|(o, row)| {
            let at = |j: isize| row[j.rem_euclid(ny as isize) as usize];
            let slope = |j: isize| minmod(at(j) - at(j - 1), at(j + 1) - at(j));
            let flux = |j: isize| {
                let ul = at(j) + 0.5 * slope(j);
                let ur = at(j + 1) - 0.5 * slope(j + 1);
                llf(poly, ul, ur)
            };
            let g: Vec<f64> = (0..ny as isize).map(flux).collect();
            for j in 0..ny {
                let jm = (j + ny - 1) % ny;
                o[j] -= (g[j] - g[jm]) / hy;
            }
        });
}

fn max_speed(poly: &Polynomial, u: &[f64]) -> f64 {
    u.iter().map(|&v| poly.deriv(1, v).abs()).fold(0.0, f64::max)
}

fn check_finite(values: &[f64], t: f64, step: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t, step })
    }
}

/// Half-line integrator.
#[derive(Debug, Clone)]
pub struct Solver1D {
    pub flux: FluxPair,
    pub grid: HalfLineGrid,
    pub u_minus: f64,
    pub formulation: Formulation,
    pub cfl: f64,
}

impl Solver1D {
    pub fn new(flux: &FluxPair, grid: HalfLineGrid, u_minus: f64, formulation: Formulation) -> Self {
        Self {
            flux: flux.clone(),
            grid,
            u_minus,
            formulation,
            cfl: DEFAULT_CFL,
        }
    }

    /// State at `t` with `U(0) = u-` imposed and `Q` solved.
    pub fn initial_state(&self, t: f64, mut u: Vec<f64>) -> Result<State1D> {
        self.grid.check_len("U0", u.len())?;
        u[0] = self.u_minus;
        check_finite(&u, t, 0)?;
        let q = solve_q_1d(&u, &self.grid)?;
        Ok(State1D {
            t,
            u,
            q,
            steps: 0,
            max_courant: 0.0,
        })
    }

    /// Nonlocal term `Q_x` (or `U - KU`) for the current stage.
    pub fn nonlocal(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self.formulation {
            Formulation::Coupled => {
                let q = solve_q_1d(u, &self.grid)?;
                Ok(neumann_derivative(&q, self.grid.h))
            }
            Formulation::Convolution => {
                let lifted: Vec<f64> = u.iter().map(|v| v - self.u_minus).collect();
                let far = lifted[lifted.len() - 1];
                let k = image_convolution(&lifted, &self.grid, 1.0, Boundary::Dirichlet, far)?;
                Ok(lifted.iter().zip(&k.values).map(|(a, b)| a - b).collect())
            }
        }
    }

    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        x_flux_divergence(u, 1, self.grid.h, self.u_minus, &self.flux.f, &mut out);
        let nl = self.nonlocal(u)?;
        for i in 1..u.len() {
            out[i] -= nl[i];
        }
        Ok(out)
    }

    /// Largest stable step for the current state.
    pub fn max_dt(&self, u: &[f64]) -> f64 {
        let s = max_speed(&self.flux.f, u);
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.cfl * self.grid.h / s
        }
    }

    /// One SSP-RK2 step. On error the state is left as it was.
    pub fn step(&self, state: &mut State1D, dt: f64) -> Result<()> {
        let max_dt = self.max_dt(&state.u);
        if !(dt > 0.0) || dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }
        let k1 = self.rhs(&state.u)?;
        let mut stage: Vec<f64> = state.u.iter().zip(&k1).map(|(u, k)| u + dt * k).collect();
        stage[0] = self.u_minus;
        check_finite(&stage, state.t + dt, state.steps + 1)?;
        let k2 = self.rhs(&stage)?;
        let mut next: Vec<f64> = state
            .u
            .iter()
            .zip(stage.iter().zip(&k2))
            .map(|(u, (s, k))| 0.5 * u + 0.5 * (s + dt * k))
            .collect();
        next[0] = self.u_minus;
        check_finite(&next, state.t + dt, state.steps + 1)?;
        let q = solve_q_1d(&next, &self.grid)?;
        let speed = max_speed(&self.flux.f, &state.u);
        state.max_courant = state.max_courant.max(dt * speed / self.grid.h);
        state.u = next;
        state.q = q;
        state.t += dt;
        state.steps += 1;
        Ok(())
    }
}

/// Half-plane integrator. Owns the transform plans of its elliptic solver.
#[derive(Debug)]
pub struct Solver2D {
    pub flux: FluxPair,
    pub grid: HalfPlaneGrid,
    pub u_minus: f64,
    pub cfl: f64,
    elliptic: DivpSolver,
}

impl Solver2D {
    pub fn new(flux: &FluxPair, grid: HalfPlaneGrid, u_minus: f64) -> Self {
        Self {
            flux: flux.clone(),
            grid,
            u_minus,
            cfl: DEFAULT_CFL,
            elliptic: DivpSolver::new(grid),
        }
    }

    pub fn elliptic(&self) -> &DivpSolver {
        &self.elliptic
    }

    fn impose_inflow(&self, u: &mut [f64]) {
        u[..self.grid.ny].iter_mut().for_each(|v| *v = self.u_minus);
    }

    pub fn initial_state(&self, t: f64, mut u: Vec<f64>) -> Result<State2D> {
        self.grid.check_len("u0", u.len())?;
        self.impose_inflow(&mut u);
        check_finite(&u, t, 0)?;
        let sol = self.elliptic.solve(&u)?;
        Ok(State2D {
            t,
            u,
            q1: sol.p1,
            q2: sol.p2,
            s: sol.s,
            steps: 0,
            max_courant: 0.0,
        })
    }

    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        x_flux_divergence(u, self.grid.ny, self.grid.hx(), self.u_minus, &self.flux.f, &mut out);
        y_flux_divergence(u, self.grid.ny, self.grid.hy, &self.flux.g, &mut out);
        let sol = self.elliptic.solve(u)?;
        out.par_iter_mut()
            .zip(sol.s.par_iter())
            .skip(self.grid.ny)
            .for_each(|(o, s)| *o -= s);
        Ok(out)
    }

    pub fn max_dt(&self, u: &[f64]) -> f64 {
        let sx = max_speed(&self.flux.f, u);
        let sy = max_speed(&self.flux.g, u);
        let dx = if sx > 0.0 { self.grid.hx() / sx } else { f64::INFINITY };
        let dy = if sy > 0.0 { self.grid.hy / sy } else { f64::INFINITY };
        self.cfl * dx.min(dy)
    }

    pub fn step(&self, state: &mut State2D, dt: f64) -> Result<()> {
        let max_dt = self.max_dt(&state.u);
        if !(dt > 0.0) || dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }
        let k1 = self.rhs(&state.u)?;
        let mut stage: Vec<f64> = state.u.par_iter().zip(&k1).map(|(u, k)| u + dt * k).collect();
        self.impose_inflow(&mut stage);
        check_finite(&stage, state.t + dt, state.steps + 1)?;
        let k2 = self.rhs(&stage)?;
        let mut next: Vec<f64> = state
            .u
            .par_iter()
            .zip(stage.par_iter().zip(&k2))
            .map(|(u, (s, k))| 0.5 * u + 0.5 * (s + dt * k))
            .collect();
        self.impose_inflow(&mut next);
        check_finite(&next, state.t + dt, state.steps + 1)?;
        let sol = self.elliptic.solve(&next)?;
        state.max_courant = state.max_courant.max(self.cfl * dt / self.max_dt(&state.u));
        state.u = next;
        state.q1 = sol.p1;
        state.q2 = sol.p2;
        state.s = sol.s;
        state.t += dt;
        state.steps += 1;
        Ok(())
    }
}

/// Number of equal steps covering `interval` for a nominal `dt`.
pub fn steps_for(interval: f64, dt: f64, exact_multiple: bool) -> usize {
    let ratio = interval / dt;
    let n = if exact_multiple { ratio.round() } else { (ratio * (1.0 - 1e-12)).ceil() };
    (n as usize).max(1)
}

/// Integrates to each time in `outputs` (increasing, `>= state.t`), calling
/// `observe` after reaching each one. The last output time is hit exactly.
pub fn integrate<S>(
    state: &mut S,
    outputs: &[f64],
    nominal_dt: f64,
    exact_multiple: bool,
    mut step: impl FnMut(&mut S, f64) -> Result<()>,
    time: impl Fn(&S) -> f64,
    set_time: impl Fn(&mut S, f64),
    mut observe: impl FnMut(&S) -> Result<()>,
) -> Result<()> {
    for &target in outputs {
        let t0 = time(state);
        let interval = target - t0;
        if interval < 0.0 {
            return Err(Error::Config(format!("output time {target} precedes t = {t0}")));
        }
        if interval > 0.0 {
            let n = steps_for(interval, nominal_dt, exact_multiple);
            let dt = interval / n as f64;
            for _ in 0..n {
                step(state, dt)?;
            }
            set_time(state, target);
        }
        observe(state)?;
    }
    Ok(())
}

/// Built-in initial data. Every family satisfies `U0(0) = u-` and tends to
/// `u+` as `x` grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialFamily {
    /// `u_tilde(., t0)` plus a `sin^2` bump on `[bump_start, bump_start + bump_width]`
    /// scaled to the given H1 norm (negative values flip the sign).
    Profile {
        perturbation_h1: f64,
        bump_start: f64,
        bump_width: f64,
    },
    /// `u- + delta (tanh((x-c)/w) - tanh(-c/w)) / (1 - tanh(-c/w))`.
    Tanh { center: f64, width: f64 },
    /// Step at `center` smoothed by a cubic ramp `mollify_cells` cells wide.
    Step { center: f64, mollify_cells: f64 },
    /// Sum of `knots` normalized tanh ramps with random centres in
    /// `[5, spread]`, widths in `[1, 10]` and Dirichlet-like weights.
    RandomMonotone { knots: usize, spread: f64, seed: u64 },
}

fn normalized_tanh(x: f64, center: f64, width: f64) -> f64 {
    let base = (-center / width).tanh();
    (((x - center) / width).tanh() - base) / (1.0 - base)
}

impl InitialFamily {
    pub fn is_monotone(&self) -> bool {
        match self {
            InitialFamily::Profile { perturbation_h1, .. } => *perturbation_h1 == 0.0,
            _ => true,
        }
    }

    /// Samples `U0` at time `t0` on `grid`.
    pub fn sample(
        &self,
        flux: &FluxPair,
        u_minus: f64,
        u_plus: f64,
        grid: &HalfLineGrid,
        t0: f64,
    ) -> Result<Vec<f64>> {
        let (um, delta) = (u_minus, u_plus - u_minus);
        let xs = grid.nodes();
        let mut u: Vec<f64> = match self {
            InitialFamily::Profile {
                perturbation_h1,
                bump_start,
                bump_width,
            } => {
                let data = crate::flux::RiemannData::new(flux, u_minus, u_plus)?;
                let bundle = crate::profiles::modified_profile(flux, &data, grid, t0)?;
                let mut u = bundle.u_tilde;
                if *perturbation_h1 != 0.0 {
                    let bump: Vec<f64> = xs
                        .iter()
                        .map(|&x| {
                            let s = (x - bump_start) / bump_width;
                            if s > 0.0 && s < 1.0 {
                                (std::f64::consts::PI * s).sin().powi(2)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let norm = crate::diagnostics::field_norms("b", &bump, grid, 1)["b_H1"];
                    if !(norm > 0.0) {
                        return Err(Error::Config(format!(
                            "bump [{bump_start}, {}] misses every grid node",
                            bump_start + bump_width
                        )));
                    }
                    let scale = perturbation_h1 / norm;
                    u.iter_mut().zip(&bump).for_each(|(a, b)| *a += scale * b);
                }
                u
            }
            InitialFamily::Tanh { center, width } => xs
                .iter()
                .map(|&x| um + delta * normalized_tanh(x, *center, *width))
                .collect(),
            InitialFamily::Step { center, mollify_cells } => {
                let w = mollify_cells * grid.h;
                xs.iter()
                    .map(|&x| {
                        let s = ((x - center) / w + 0.5).clamp(0.0, 1.0);
                        um + delta * s * s * (3.0 - 2.0 * s)
                    })
                    .collect()
            }
            InitialFamily::RandomMonotone { knots, spread, seed } => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let ramps: Vec<(f64, f64, f64)> = (0..*knots)
                    .map(|_| {
                        (
                            rng.random_range(5.0..*spread),
                            rng.random_range(1.0..10.0),
                            rng.random_range(0.05..1.0),
                        )
                    })
                    .collect();
                let total: f64 = ramps.iter().map(|r| r.2).sum();
                xs.iter()
                    .map(|&x| {
                        um + delta
                            * ramps
                                .iter()
                                .map(|&(c, w, a)| a / total * normalized_tanh(x, c, w))
                                .sum::<f64>()
                    })
                    .collect()
            }
        };
        u[0] = um;
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_data(grid: &HalfLineGrid, lo: f64, hi: f64) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|x| lo + (hi - lo) * 0.5 * (1.0 + ((x - 20.0) / 3.0).tanh()))
            .collect()
    }

    #[test]
    fn constant_state_is_stationary() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(201, 50.0).unwrap();
        for form in [Formulation::Coupled, Formulation::Convolution] {
            let solver = Solver1D::new(&f, g, 0.5, form);
            let mut s = solver.initial_state(0.0, vec![0.5; g.n]).unwrap();
            let dt = solver.max_dt(&s.u);
            for _ in 0..50 {
                solver.step(&mut s, dt).unwrap();
            }
            assert!(s.u.iter().all(|&v| v == 0.5), "{form:?}");
            assert!(s.q.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cfl_violation_is_refused() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(101, 10.0).unwrap();
        let solver = Solver1D::new(&f, g, 0.1, Formulation::Coupled);
        let mut s = solver.initial_state(0.0, tanh_data(&g, 0.1, 0.9)).unwrap();
        let before = s.clone();
        let err = solver.step(&mut s, 1.0).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
        assert_eq!(s, before);
    }

    #[test]
    fn monotone_data_stays_monotone_with_nonpositive_q() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(401, 100.0).unwrap();
        let solver = Solver1D::new(&f, g, 0.1, Formulation::Coupled);
        let mut s = solver.initial_state(0.0, tanh_data(&g, 0.1, 0.9)).unwrap();
        let dt = 0.9 * solver.max_dt(&s.u);
        while s.t < 30.0 {
            solver.step(&mut s, dt).unwrap();
            assert_eq!(s.u[0], 0.1);
            let min_ux = s.u.windows(2).map(|w| (w[1] - w[0]) / g.h).fold(f64::INFINITY, f64::min);
            assert!(min_ux >= -10.0 * g.h);
            assert!(s.q.iter().all(|&q| q <= 1e-8));
            assert!(s.u.iter().all(|&u| u >= 0.1 - 1e-8 && u <= 0.9 + 1e-3));
        }
    }

    #[test]
    fn formulations_agree() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(801, 100.0).unwrap();
        let u0 = tanh_data(&g, 0.1, 0.9);
        let run = |form| {
            let solver = Solver1D::new(&f, g, 0.1, form);
            let mut s = solver.initial_state(0.0, u0.clone()).unwrap();
            for _ in 0..200 {
                solver.step(&mut s, 0.05).unwrap();
            }
            s.u
        };
        let a = run(Formulation::Coupled);
        let b = run(Formulation::Convolution);
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-3, "gap {gap}");
    }

    #[test]
    fn planar_data_matches_1d_run() {
        let f = FluxPair::burgers();
        let pg = HalfPlaneGrid::new(201, 50.0, 8, 4.0).unwrap();
        let col = tanh_data(&pg.x, 0.1, 0.3);
        let mut u0 = vec![0.0; pg.len()];
        for i in 0..pg.nx() {
            for j in 0..pg.ny {
                u0[pg.idx(i, j)] = col[i];
            }
        }
        let s2 = Solver2D::new(&f, pg, 0.1);
        let s1 = Solver1D::new(&f, pg.x, 0.1, Formulation::Coupled);
        let mut a = s2.initial_state(0.0, u0).unwrap();
        let mut b = s1.initial_state(0.0, col).unwrap();
        for _ in 0..40 {
            s2.step(&mut a, 0.1).unwrap();
            s1.step(&mut b, 0.1).unwrap();
            for i in 0..pg.nx() {
                for j in 0..pg.ny {
                    assert!((a.u[pg.idx(i, j)] - b.u[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn integrate_hits_output_times() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(101, 20.0).unwrap();
        let solver = Solver1D::new(&f, g, 0.2, Formulation::Coupled);
        let mut s = solver.initial_state(0.0, tanh_data(&g, 0.2, 0.4)).unwrap();
        let mut seen = Vec::new();
        integrate(
            &mut s,
            &[0.0, 1.0, 2.5],
            0.07,
            false,
            |st, dt| solver.step(st, dt),
            |st| st.t,
            |st, t| st.t = t,
            |st| {
                seen.push((st.t, st.steps));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen[0], (0.0, 0));
        assert_eq!(seen[1].0, 1.0);
        assert_eq!(seen[2].0, 2.5);
        assert_eq!(seen[2].1, steps_for(1.0, 0.07, false) + steps_for(1.5, 0.07, false));
    }

    #[test]
    fn families_start_at_inflow_value_and_reach_far_state() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(2001, 400.0).unwrap();
        let families = [
            InitialFamily::Profile { perturbation_h1: 0.05, bump_start: 10.0, bump_width: 20.0 },
            InitialFamily::Tanh { center: 20.0, width: 3.0 },
            InitialFamily::Step { center: 10.0, mollify_cells: 4.0 },
            InitialFamily::RandomMonotone { knots: 8, spread: 100.0, seed: 3 },
        ];
        for fam in families {
            let u = fam.sample(&f, 0.1, 0.3, &g, 1.0).unwrap();
            assert_eq!(u[0], 0.1, "{fam:?}");
            assert!((u[g.n - 1] - 0.3).abs() < 1e-8, "{fam:?}");
            if fam.is_monotone() {
                assert!(u.windows(2).all(|w| w[1] >= w[0]), "{fam:?}");
            }
        }
    }

    #[test]
    fn profile_bump_has_requested_h1_norm() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(2001, 400.0).unwrap();
        let base = InitialFamily::Profile { perturbation_h1: 0.0, bump_start: 10.0, bump_width: 20.0 };
        let bumped = InitialFamily::Profile { perturbation_h1: 0.05, bump_start: 10.0, bump_width: 20.0 };
        let a = base.sample(&f, 0.1, 0.3, &g, 1.0).unwrap();
        let b = bumped.sample(&f, 0.1, 0.3, &g, 1.0).unwrap();
        let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        let n = crate::diagnostics::field_norms("d", &diff, &g, 1)["d_H1"];
        assert!((n - 0.05).abs() < 1e-12);
    }

    #[test]
    fn non_finite_state_aborts() {
        let f = FluxPair::burgers();
        let g = HalfLineGrid::new(64, 10.0).unwrap();
        let solver = Solver1D::new(&f, g, 0.1, Formulation::Coupled);
        let mut u = vec![0.2; g.n];
        u[10] = f64::NAN;
        assert!(matches!(solver.initial_state(0.0, u), Err(Error::NonFinite { .. })));
    }
}
