use deadcore::analysis::{extract_free_boundary, fit_growth_exponent, porosity_constant, positive_density};
use deadcore::model::{theta_liouville, validate_params, MatrixCoef, VectorCoef};
use deadcore::operators::{degenerate_apply, directional_second_difference, pucci_apply, PucciSign, StencilFrame};
use deadcore::radial::{radial_identity_defect, theta_radial_exact, ExponentialSolution};
use deadcore::solver::{check_comparison, solve_dirichlet};
use deadcore::*;
use proptest::prelude::*;

fn valid_pair() -> impl Strategy<Value = (f64, f64)> {
    (-0.9f64..3.0).prop_flat_map(|g| (Just(g), 0.0..(g + 1.0) * 0.95))
}

fn interior_2d(g: &Grid, reach: usize) -> impl Iterator<Item = usize> + '_ {
    let n = g.n();
    (0..g.len()).filter(move |&i| {
        let (a, b) = g.ij(i);
        a >= reach && b >= reach && a + reach < n && b + reach < n
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_identities((gamma, mu) in valid_pair()) {
        let k = kappa(gamma, mu).unwrap();
        let rhs = (1.0 + mu) / (gamma + 1.0 - mu);
        prop_assert!((k - 1.0 - rhs).abs() <= 1e-12 * rhs.max(1.0));
        let base = 1.0 + 1.0 / (gamma + 1.0);
        if mu > 0.0 {
            prop_assert!(k > base);
        } else {
            prop_assert!((k - base).abs() <= 1e-12 * base);
        }
    }

    #[test]
    fn liouville_amplitude_monotone(
        (gamma, mu) in valid_pair(),
        lambda0 in 0.1f64..10.0,
        big_lambda in 1.0f64..5.0,
        bump in 1.01f64..2.0,
    ) {
        let t = theta_liouville(1, big_lambda, lambda0, gamma, mu).unwrap();
        prop_assert!(theta_liouville(1, big_lambda, lambda0 * bump, gamma, mu).unwrap() > t);
        prop_assert!(theta_liouville(1, big_lambda * bump, lambda0, gamma, mu).unwrap() < t);
        prop_assert!(theta_liouville(2, big_lambda, lambda0, gamma, mu).unwrap() < t);
    }

    #[test]
    fn radial_identity_holds((gamma, mu) in valid_pair(), lambda0 in 0.1f64..10.0, n in 1u32..3) {
        let k = kappa(gamma, mu).unwrap();
        prop_assume!(k + n as f64 - 2.0 > 0.05);
        let theta = theta_radial_exact(n, lambda0, gamma, mu).unwrap();
        let defect = radial_identity_defect(n, lambda0, gamma, mu, theta).unwrap();
        prop_assert!(defect.abs() <= 1e-12 * lambda0.max(1.0), "{}", defect);
    }

    #[test]
    fn pucci_frames_order(coefs in prop::array::uniform6(-2.0f64..2.0), noise in prop::collection::vec(-0.01f64..0.01, 33 * 33)) {
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 33).unwrap();
        let mut vals = ScalarField::from_fn(g, |x| {
            coefs[0] * x[0] * x[0] + coefs[1] * x[0] * x[1] + coefs[2] * x[1] * x[1] + coefs[3] * x[0] + coefs[4] * x[1] + coefs[5]
        }).into_values();
        for (v, e) in vals.iter_mut().zip(&noise) {
            *v += e;
        }
        let u = ScalarField::new(g, vals).unwrap();
        let narrow = StencilFrame::for_dim(2, false);
        let wide = StencilFrame::for_dim(2, true);
        for sign in [PucciSign::Minus, PucciSign::Plus] {
            let a = pucci_apply(&u, 0.5, 2.0, &narrow, sign);
            let b = pucci_apply(&u, 0.5, 2.0, &wide, sign);
            for i in interior_2d(&g, 2) {
                match sign {
                    PucciSign::Minus => prop_assert!(b.get(i) <= a.get(i) + 1e-9),
                    PucciSign::Plus => prop_assert!(b.get(i) >= a.get(i) - 1e-9),
                }
            }
        }
    }

    #[test]
    fn second_differences_exact_on_quadratics(m in prop::array::uniform3(-3.0f64..3.0), lin in prop::array::uniform2(-1.0f64..1.0)) {
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 17).unwrap();
        let u = ScalarField::from_fn(g, |x| {
            0.5 * (m[0] * x[0] * x[0] + 2.0 * m[1] * x[0] * x[1] + m[2] * x[1] * x[1]) + lin[0] * x[0] + lin[1] * x[1]
        });
        for frame in StencilFrame::for_dim(2, true).frames() {
            for d in frame {
                let l = d.len2().sqrt();
                let e = [d.dx as f64 / l, d.dy as f64 / l];
                let want = m[0] * e[0] * e[0] + 2.0 * m[1] * e[0] * e[1] + m[2] * e[1] * e[1];
                let dd = directional_second_difference(&u, e).unwrap();
                for i in 0..g.len() {
                    if dd.valid[i] {
                        prop_assert!((dd.values.get(i) - want).abs() <= 1e-9, "{} vs {}", dd.values.get(i), want);
                    }
                }
            }
        }
    }

    #[test]
    fn ellipticity_bounds_on_psd_increments(
        base in prop::array::uniform3(-2.0f64..2.0),
        a in -1.5f64..1.5, b in -1.5f64..1.5, c in 0.0f64..1.0,
    ) {
        // P = L Lᵀ with L = [[a, 0], [b, c]] is positive semidefinite
        let p = [[a * a, a * b], [a * b, b * b + c * c]];
        let tr = p[0][0] + p[1][1];
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 17).unwrap();
        let u = ScalarField::from_fn(g, |x| base[0] * x[0] * x[0] + base[1] * x[0] * x[1] + base[2] * x[1] * x[1]);
        let w = ScalarField::from_fn(g, |x| {
            u_at(&base, x) + 0.5 * (p[0][0] * x[0] * x[0] + 2.0 * p[0][1] * x[0] * x[1] + p[1][1] * x[1] * x[1])
        });
        let (lo, hi) = (0.5, 2.0);
        for sign in [PucciSign::Minus, PucciSign::Plus] {
            let frames = StencilFrame::for_dim(2, false);
            let du = pucci_apply(&u, lo, hi, &frames, sign);
            let dw = pucci_apply(&w, lo, hi, &frames, sign);
            for i in interior_2d(&g, 1) {
                let change = dw.get(i) - du.get(i);
                prop_assert!(change >= lo * tr - 1e-9 && change <= hi * tr + 1e-9, "{change} not in [{}, {}]", lo * tr, hi * tr);
            }
        }
    }

    #[test]
    fn scheme_monotone_for_ordered_fields(
        gamma in 0.0f64..2.0,
        drift in prop::array::uniform2(-2.0f64..2.0),
        base in prop::collection::vec(0.0f64..1.0, 17 * 17),
        bump in prop::collection::vec(0.0f64..0.5, 17 * 17),
        node in 0usize..(15 * 15),
    ) {
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 17).unwrap();
        let idx = g.index(1 + node % 15, 1 + node / 15);
        let mut upper = base.clone();
        for (k, (v, b)) in upper.iter_mut().zip(&bump).enumerate() {
            if k != idx {
                *v += b;
            }
        }
        let u = ScalarField::new(g, base).unwrap();
        let v = ScalarField::new(g, upper).unwrap();
        let p = ProblemParams::laplacian(2, gamma, 0.0, 1.0).with_drift(VectorCoef::Constant(drift));
        let vp = validate_params(&p, &g).unwrap();
        let gu = degenerate_apply(&vp, &u, g.h()).unwrap().value.get(idx);
        let gv = degenerate_apply(&vp, &v, g.h()).unwrap().value.get(idx);
        if gamma == 0.0 {
            prop_assert!(gv >= gu - 1e-9);
        }
        // The positive degeneracy factor preserves the sign ordering.
        if gu >= 0.0 {
            prop_assert!(gv >= 0.0);
        }
        let p0 = ProblemParams::laplacian(2, 0.0, 0.0, 1.0).with_drift(VectorCoef::Constant(drift));
        let vp0 = validate_params(&p0, &g).unwrap();
        let fu = degenerate_apply(&vp0, &u, g.h()).unwrap().value.get(idx);
        let fv = degenerate_apply(&vp0, &v, g.h()).unwrap().value.get(idx);
        prop_assert!(fv >= fu - 1e-9);
    }

    #[test]
    fn operators_deterministic(seed in prop::collection::vec(0.0f64..1.0, 9 * 9)) {
        let g = Grid::centered(2, [0.0, 0.0], 1.0, 9).unwrap();
        let u = ScalarField::new(g, seed).unwrap();
        let a = extract_free_boundary(&u, 0.3);
        let b = extract_free_boundary(&u, 0.3);
        prop_assert_eq!(a, b);
    }
}

fn u_at(c: &[f64; 3], x: Point) -> f64 {
    c[0] * x[0] * x[0] + c[1] * x[0] * x[1] + c[2] * x[1] * x[1]
}

fn problem(grid: Grid, gamma: f64, mu: f64, lambda0: f64, domain: Domain, g: BoundaryData) -> DirichletProblem {
    let vp = validate_params(&ProblemParams::laplacian(grid.dim(), gamma, mu, lambda0), &grid).unwrap();
    DirichletProblem::new(vp, domain, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn comparison_on_random_data(
        (gamma, mu) in (0.0f64..1.5).prop_flat_map(|g| (Just(g), 0.0..(g + 1.0) * 0.9)),
        lambda0 in 1.0f64..30.0,
        lo in 0.0f64..1.0, slope in -0.3f64..0.3, lift in 0.0f64..0.5,
    ) {
        let grid = Grid::new(1, [-1.0, 0.0], 2.0, 33).unwrap();
        let g1 = move |x: Point| (lo + slope * x[0]).max(0.0);
        let g2 = move |x: Point| g1(x) + lift;
        let cfg = SolverConfig::default();
        let a = solve_dirichlet(&problem(grid, gamma, mu, lambda0, Domain::Box, BoundaryData::from_fn(g1)), &cfg).unwrap();
        let b = solve_dirichlet(&problem(grid, gamma, mu, lambda0, Domain::Box, BoundaryData::from_fn(g2)), &cfg).unwrap();
        prop_assert!(a.converged && b.converged);
        let rep = check_comparison(&a.u, &b.u, 10.0 * cfg.tol).unwrap();
        prop_assert!(rep.is_empty(), "{:?}", rep);
        for r in [&a, &b] {
            prop_assert_eq!(r.bracket.violations, 0);
        }
    }

    #[test]
    fn bracket_sandwich_2d(
        (gamma, mu) in (0.0f64..1.0).prop_flat_map(|g| (Just(g), 0.0..(g + 1.0) * 0.9)),
        lambda0 in 0.5f64..20.0,
        amp in 0.05f64..1.0,
    ) {
        let grid = Grid::centered(2, [0.0, 0.0], 1.0, 17).unwrap();
        let data = BoundaryData::from_fn(move |x| amp * (1.0 + 0.5 * x[0]));
        let cfg = SolverConfig::default();
        let r = solve_dirichlet(&problem(grid, gamma, mu, lambda0, Domain::Ball { center: [0.0, 0.0], radius: 1.0 }, data), &cfg).unwrap();
        prop_assert!(r.converged);
        let slack = 10.0 * cfg.tol;
        for i in 0..grid.len() {
            prop_assert!(r.u.get(i) >= r.u_flat.get(i) - slack);
            prop_assert!(r.u.get(i) <= r.u_sharp.get(i) + slack);
        }
    }
}

#[test]
fn dead_core_grows_with_thiele_modulus() {
    let grid = Grid::centered(2, [0.0, 0.0], 1.0, 33).unwrap();
    let mut last = -1.0;
    for lambda0 in [1.0, 4.0, 16.0, 64.0] {
        let pr = problem(grid, 0.0, 0.0, lambda0, Domain::Ball { center: [0.0, 0.0], radius: 1.0 }, BoundaryData::constant(0.2));
        let r = solve_dirichlet(&pr, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.dead_core_volume_fraction >= last - 1e-12, "{} < {last}", r.dead_core_volume_fraction);
        last = r.dead_core_volume_fraction;
    }
    assert!(last > 0.0);
}

fn exponential_error(n: usize, dim: usize, gamma: f64, lambda0: f64) -> f64 {
    let grid = Grid::centered(dim, [0.0, 0.0], 1.0, n).unwrap();
    let sol = ExponentialSolution::borderline(lambda0, gamma, 0);
    let pr = problem(grid, gamma, gamma + 1.0, lambda0, Domain::Box, BoundaryData::from_fn(move |x| sol.eval(x)));
    let cfg = SolverConfig { tol: 1e-10, ..Default::default() };
    let r = solve_dirichlet(&pr, &cfg).unwrap();
    assert!(r.converged);
    (0..grid.len()).map(|i| (r.u.get(i) - sol.eval(grid.coord(i))).abs()).fold(0.0, f64::max)
}

#[test]
fn scheme_consistency_under_refinement() {
    for (dim, gamma, n) in [(1, 0.0, 33), (1, 1.0, 33), (2, 0.0, 17), (2, 1.0, 17)] {
        let coarse = exponential_error(n, dim, gamma, 2.0);
        let fine = exponential_error(2 * n - 1, dim, gamma, 2.0);
        assert!(coarse / fine >= 3.0, "dim {dim} gamma {gamma}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn trace_a_solve_is_bracketed() {
    let grid = Grid::centered(2, [0.0, 0.0], 1.0, 25).unwrap();
    let p = ProblemParams::laplacian(2, 0.0, 0.5, 4.0)
        .with_operator(OperatorKind::TraceA(MatrixCoef::Constant([[1.5, 0.4], [0.4, 1.0]])), 0.5, 2.0);
    let vp = validate_params(&p, &grid).unwrap();
    let pr = DirichletProblem::new(vp, Domain::Box, BoundaryData::constant(0.3));
    let r = solve_dirichlet(&pr, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.bracket.violations, 0);
}

#[test]
fn synthetic_profile_fit_and_geometry() {
    let grid = Grid::centered(2, [0.0, 0.0], 1.0, 257).unwrap();
    let (theta, k, r0) = (0.5, 2.0, 0.4);
    let u = ScalarField::from_fn(grid, |x| theta * ((x[0] * x[0] + x[1] * x[1]).sqrt() - r0).max(0.0).powf(k));
    let fit = fit_growth_exponent(&u, [r0, 0.0], 0.25, 6).unwrap();
    assert!((fit.exponent_hat - k).abs() <= 0.10, "{}", fit.exponent_hat);
    let fb = extract_free_boundary(&u, grid.h().powf(k));
    let rhos = [0.05, 0.1, 0.2];
    let dens = positive_density(&u, [r0, 0.0], &rhos, fb.epsilon_fb).unwrap();
    assert!(dens.iter().all(|&d| d >= 0.05));
    let por = porosity_constant(&fb, &u, &[0.05, 0.1], 16).unwrap();
    assert!(por.epsilon >= 0.05);
}
