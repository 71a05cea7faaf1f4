//! Randomized invariants of norms, fits, the elliptic solve and the scheme.

use proptest::prelude::*;
use radgas::diagnostics::{fit_power_law, lp_norm};
use radgas::elliptic::solve_q_1d;
use radgas::evolve::{Formulation, InitialFamily, Solver1D};
use radgas::flux::FluxPair;
use radgas::grid::HalfLineGrid;

fn flux(quartic: bool) -> FluxPair {
    if quartic {
        FluxPair::quartic()
    } else {
        FluxPair::burgers()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_nonnegative_and_homogeneous(
        values in prop::collection::vec(-5.0f64..5.0, 2..64),
        scale in -3.0f64..3.0,
        p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]),
    ) {
        let n = lp_norm(&values, 0.1, p);
        prop_assert!(n >= 0.0);
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let m = lp_norm(&scaled, 0.1, p);
        prop_assert!((m - scale.abs() * n).abs() <= 1e-12 * (1.0 + m));
    }

    #[test]
    fn exact_power_law_is_recovered(exponent in -2.0f64..0.5, log_c in -3.0f64..3.0) {
        let times: Vec<f64> = (0..30).map(|k| 2.0 * 1.2f64.powi(k)).collect();
        let values: Vec<f64> = times.iter().map(|t| (log_c + exponent * (1.0 + t).ln()).exp()).collect();
        let (b, a, r2, n) = fit_power_law(&times, &values, [1.0, 1e6], 3).unwrap();
        prop_assert_eq!(n, 30);
        prop_assert!((b - exponent).abs() < 1e-10);
        prop_assert!((a - log_c).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-12);
    }

    #[test]
    fn increasing_data_gives_nonpositive_q(
        u_minus in 0.0f64..0.5,
        jump in 0.05f64..1.0,
        center in 2.0f64..30.0,
        width in 0.5f64..8.0,
    ) {
        let grid = HalfLineGrid::new(301, 60.0).unwrap();
        let u: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| u_minus + jump * 0.5 * (1.0 + ((x - center) / width).tanh()))
            .collect();
        let q = solve_q_1d(&u, &grid).unwrap();
        prop_assert!(q.iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn scheme_keeps_monotone_data_monotone_and_bounded(
        quartic in any::<bool>(),
        u_minus in 0.0f64..0.4,
        jump in 0.1f64..0.6,
        center in 3.0f64..20.0,
        width in 0.2f64..5.0,
        coupled in any::<bool>(),
    ) {
        let flux = flux(quartic);
        let u_plus = u_minus + jump;
        let grid = HalfLineGrid::new(201, 50.0).unwrap();
        let family = InitialFamily::Tanh { center, width };
        let u0 = family.sample(&flux, u_minus, u_plus, &grid, 1.0).unwrap();
        let form = if coupled { Formulation::Coupled } else { Formulation::Convolution };
        let solver = Solver1D::new(&flux, grid, u_minus, form);
        let mut state = solver.initial_state(1.0, u0).unwrap();
        for _ in 0..40 {
            let dt = solver.max_dt(&state.u);
            solver.step(&mut state, dt).unwrap();
        }
        let min_jump = state.u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        prop_assert!(min_jump >= -10.0 * grid.h * grid.h, "min increment {}", min_jump);
        prop_assert!(state.u.iter().all(|&v| v >= u_minus - 1e-12 && v <= u_plus + 1e-12));
        prop_assert!(state.max_courant <= solver.cfl + 1e-12);
    }
}
