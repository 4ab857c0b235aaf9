use hscs::coupling::grid::{build_grid, QuadratureGrid};
use hscs::coupling::matrices::{r_prefactor, theta_kernel};
use hscs::coupling::potential::RegularizedPotential;
use hscs::coupling::{
    compute_coupling_set, couplings_at, solve_basis, BasisSpec, CouplingOptions, CouplingSet, CouplingTable,
    CouplingsAtRho,
};
use hscs::csf::{solve_state, CsfState, StateIndex};
use hscs::kinematics::{build_system, build_system_relaxed, ParticleSystem};
use hscs::numerics::quadrature::{composite_gauss_legendre, gauss_legendre};
use hscs::parallel::Parallelism;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model() -> ParticleSystem {
    build_system(1.0, 3.0, 1.0, 1.0, 1.0).unwrap()
}

fn idx(v: &[(u32, u32, u32)]) -> Vec<StateIndex> {
    v.iter().map(|&(m, x, e)| StateIndex::new(m, x, e)).collect()
}

fn j0_basis() -> BasisSpec {
    BasisSpec::new(0, 1, idx(&[(0, 0, 0), (0, 0, 1), (0, 1, 0)])).unwrap()
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn structural_zeros_at_j0() {
    let c = couplings_at(&model(), &j0_basis(), 5.0, &CouplingOptions::default()).unwrap();
    assert!(c.t.is_empty());
    let b = c.block(0).unwrap();
    for i in 0..3 {
        assert_eq!(b.q[(i, i)], 0.0);
        for j in 0..3 {
            assert_eq!(b.q[(i, j)], -b.q[(j, i)]);
            assert_eq!(b.r[(i, j)], 0.0);
            for m in [&b.p, &b.u, &b.w] {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
    assert!(c.diagnostics.gram_deviation < 1e-10);
    assert!(c.diagnostics.q_asymmetry < 1e-6, "{}", c.diagnostics.q_asymmetry);
    assert!(b.q.abs().max() > 1e-3);
}

#[test]
fn rotational_families() {
    let system = model();
    let opts = CouplingOptions::default();
    let basis = BasisSpec::new(2, 1, idx(&[(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 1, 0), (2, 0, 0)])).unwrap();
    let c = couplings_at(&system, &basis, 4.0, &opts).unwrap();
    for blk in &c.blocks {
        let pref = r_prefactor(2, blk.m);
        for i in 0..blk.r.nrows() {
            assert!(blk.r[(i, i)] / pref >= 1.0);
        }
    }
    assert_eq!(c.t.iter().map(|t| t.m).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(c.t[0].matrix.shape(), (2, 2));
    assert!(c.t[0].matrix.abs().max() > 1e-3);

    // J(J+1) = 2 m^2 and no m = 0 partner
    let basis = BasisSpec::new(1, 1, idx(&[(1, 0, 0), (1, 0, 1)])).unwrap();
    let c = couplings_at(&system, &basis, 4.0, &opts).unwrap();
    assert!(c.blocks[0].r.iter().all(|&v| v == 0.0));
    assert!(c.t.is_empty());
    assert!(BasisSpec::new(1, 1, idx(&[(0, 0, 0)])).is_err());
}

#[test]
fn refinement_self_convergence() {
    let system = model();
    let basis = j0_basis();
    let base = couplings_at(&system, &basis, 6.0, &CouplingOptions::default()).unwrap();
    let fine = couplings_at(&system, &basis, 6.0, &CouplingOptions { refine: 1, ..Default::default() }).unwrap();
    let (a, b) = (base.block(0).unwrap(), fine.block(0).unwrap());
    for (name, x, y, tol) in [
        ("P", &a.p, &b.p, 1e-8),
        ("Q", &a.q, &b.q, 1e-8),
        ("U", &a.u, &b.u, 1e-8),
        ("W", &a.w, &b.w, 1e-7),
    ] {
        let d = max_diff(x, y);
        assert!(d < tol * x.abs().max().max(1.0), "{name}: {d:e}");
    }
    let basis2 = BasisSpec::new(2, 1, idx(&[(0, 0, 0), (0, 0, 1)])).unwrap();
    let r0 = couplings_at(&system, &basis2, 6.0, &CouplingOptions::default()).unwrap();
    let r1 = couplings_at(&system, &basis2, 6.0, &CouplingOptions { refine: 1, ..Default::default() }).unwrap();
    assert!(max_diff(&r0.blocks[0].r, &r1.blocks[0].r) < 1e-8 * r0.blocks[0].r.abs().max());
}

fn grid_for(system: &ParticleSystem, rho: f64) -> (Vec<CsfState>, QuadratureGrid) {
    let states = solve_basis(system, &j0_basis(), rho, &CouplingOptions::default()).unwrap();
    let grid = build_grid(&states, 1e-10).unwrap();
    (states, grid)
}

#[test]
fn grid_integrates_polynomial() {
    let (_, grid) = grid_for(&model(), 3.0);
    let x = grid.xi_max;
    let exact = (x.powi(5) - 1.0) / 5.0 * (2.0 / 3.0) - (x.powi(3) - 1.0) / 3.0 * (2.0 / 5.0);
    let got = grid.integrate(|n, e| n.xi * n.xi * e.eta * e.eta) / (grid.d.powi(3) / 8.0);
    assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
}

#[test]
fn grid_gram_self_convergence() {
    let (states, grid) = grid_for(&model(), 3.0);
    let shape = hscs::coupling::grid::GridShape::for_states(&states).unwrap();
    let finer = QuadratureGrid::new(grid.d, shape, grid.level + 1);
    for g in [&grid, &finer] {
        for a in &states {
            for b in &states {
                let v = g.integrate(|x, e| a.x(x.xm1).0 * a.y(e.eta, e.o).0 * b.x(x.xm1).0 * b.y(e.eta, e.o).0);
                let want = if a.index == b.index { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10);
            }
        }
    }
}

/// `rho^2 U_ij` from `h phi_j = eps_j phi_j` and the commutator of `h` with
/// `F = 1 + t^2`: `eps_j <F^2> - 6 <F> - 4 <F phi_i, t . grad phi_j>`.
fn u_oracle(system: &ParticleSystem, a: &CsfState, b: &CsfState) -> f64 {
    let g = &system.geometry;
    let half = 0.5 * g.d;
    let z0 = 0.5 * (g.t2 - g.t1);
    let xi_max = 1.0 + 80.0 / a.p.min(b.p);
    let breaks: Vec<f64> = (0..=200).map(|k| (xi_max - 1.0) * (k as f64 / 200.0).powi(2)).collect();
    let xi_rule = composite_gauss_legendre(&breaks, 12);
    let eta_rule = gauss_legendre(64);
    let mut sum = 0.0;
    for (&xm1, &wx) in xi_rule.nodes.iter().zip(&xi_rule.weights) {
        let xi = 1.0 + xm1;
        for (&eta, &we) in eta_rule.nodes.iter().zip(&eta_rule.weights) {
            let z = z0 + half * xi * eta;
            let perp2 = half * half * (xi * xi - 1.0) * (1.0 - eta * eta);
            let t2 = z * z + perp2;
            let f = 1.0 + t2;
            let (ra, rb) = (half * (xi + eta), half * (xi - eta));
            let (ua, ub) = ((t2 + z * g.t1) / ra, (t2 - z * g.t2) / rb);
            let (dxi, deta) = ((ua + ub) / g.d, (ua - ub) / g.d);
            let (pa, _, _) = a.value_and_gradient(xi, eta).unwrap();
            let (pb, pb_xi, pb_eta) = b.value_and_gradient(xi, eta).unwrap();
            let dil = pb_xi * dxi + pb_eta * deta;
            let integrand = b.eps * f * f * pa * pb - 6.0 * f * pa * pb - 4.0 * f * pa * dil;
            sum += wx * we * (xi * xi - eta * eta) * integrand;
        }
    }
    sum * half.powi(3)
}

#[test]
fn u_matches_commutator_oracle() {
    let one_centre = build_system_relaxed(1.0, 3.0, 1.0, 1.0, 0.0).unwrap();
    for (system, rho) in [(model(), 2.0), (model(), 9.0), (one_centre, 4.0)] {
        let c = couplings_at(&system, &j0_basis(), rho, &CouplingOptions::default()).unwrap();
        let states = solve_basis(&system, &j0_basis(), rho, &CouplingOptions::default()).unwrap();
        let u = &c.block(0).unwrap().u;
        let scale = u.abs().max();
        for i in 0..3 {
            for j in 0..3 {
                let oracle = u_oracle(&system, &states[i], &states[j]) / (rho * rho);
                assert!((u[(i, j)] - oracle).abs() < 1e-6 * scale, "rho={rho} ({i},{j}): {} vs {oracle}", u[(i, j)]);
            }
        }
    }
}

#[test]
fn theta_kernel_closed_form() {
    let g = model().geometry;
    let half = 0.5 * g.d;
    let z0 = 0.5 * (g.t2 - g.t1);
    // f = z * perp, for which (-d/dtheta + cot theta) f = perp^2 and -d/dtheta f = perp^2 - z^2
    for &(xi, eta) in &[(1.3, 0.2), (2.5, -0.6), (7.0, 0.95), (1.01, -0.99)] {
        let (s, o) = (xi * xi - 1.0, 1.0 - eta * eta);
        let z = z0 + half * xi * eta;
        let perp = half * (s * o).sqrt();
        let (z_xi, z_eta) = (half * eta, half * xi);
        let (p_xi, p_eta) = (half * xi * o / (s * o).sqrt(), -half * eta * s / (s * o).sqrt());
        let f = z * perp;
        let (f_xi, f_eta) = (z_xi * perp + z * p_xi, z_eta * perp + z * p_eta);
        let one = theta_kernel(&g, xi, eta, f, f_xi, f_eta, 1);
        let zero = theta_kernel(&g, xi, eta, f, f_xi, f_eta, 0);
        let scale = perp * perp + z * z;
        assert!((one - perp * perp).abs() < 1e-8 * scale, "{one} vs {}", perp * perp);
        assert!((zero - (perp * perp - z * z)).abs() < 1e-8 * scale);
    }
}

#[test]
fn potential_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let m: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.1..200.0));
        let system = build_system(m[0], m[1], m[2], 1.0, 2.0).unwrap();
        let r = &system.reduced;
        let g = &system.geometry;
        assert!((r.mu / (1.0 + g.t1 * g.t1) - r.mu1).abs() < 1e-12 * r.mu1);
        assert!((r.mu / (1.0 + g.t2 * g.t2) - r.mu2).abs() < 1e-12 * r.mu2);

        // approach centre 2 along the axis away from the origin
        let w = RegularizedPotential::new(&system);
        let limit = w.coalescence_limit(2);
        for (k, &d) in [1e-3, 1e-5, 1e-7, 1e-9].iter().enumerate() {
            let t = g.t2 + d;
            let v = w.w_alpha(2, t * t, d, g.t2 * d);
            let tol = if k == 0 { 1e-2 } else { 1e-4 };
            assert!((v - limit).abs() < tol * limit, "{d}: {v} vs {limit}");
        }
        // continuous across the Taylor radius
        let inside = w.total(g.t2 + 0.999e-6, 0.0);
        let outside = w.total(g.t2 + 1.001e-6, 0.0);
        assert!((inside - outside).abs() < 1e-8 * inside.abs());
    }
    let neutral = RegularizedPotential::new(&build_system_relaxed(1.0, 3.0, 1.0, 0.0, 0.0).unwrap());
    for &(t, th) in &[(0.1, 0.3), (1.0, 2.0), (0.5773502691896258, 0.0)] {
        assert_eq!(neutral.total(t, th), 0.0);
    }
}

#[test]
fn w_scales_as_inverse_rho() {
    // the states and potential are fixed; only the 1/rho prefactor varies
    let system = model();
    let w = RegularizedPotential::new(&system);
    let s = solve_state(&system, 3.0, 0, 0, 0, None).unwrap();
    let grid = build_grid(std::slice::from_ref(&s), 1e-10).unwrap();
    let inner = grid.integrate(|x, e| w.at_node(x, e) * (s.x(x.xm1).0 * s.y(e.eta, e.o).0).powi(2));
    let c = couplings_at(&system, &BasisSpec::new(0, 1, idx(&[(0, 0, 0)])).unwrap(), 3.0, &CouplingOptions::default())
        .unwrap();
    assert!((c.blocks[0].w[(0, 0)] * 3.0 - inner).abs() < 1e-9 * inner.abs());
}

fn assert_points_equal(a: &CouplingsAtRho, b: &CouplingsAtRho) {
    assert_eq!(a.rho, b.rho);
    for (x, y) in a.blocks.iter().zip(&b.blocks) {
        assert_eq!((&x.p, &x.q, &x.r, &x.u, &x.w), (&y.p, &y.q, &y.r, &y.u, &y.w));
    }
    for (x, y) in a.t.iter().zip(&b.t) {
        assert_eq!(x.matrix, y.matrix);
    }
}

#[test]
fn table_round_trip_and_restrict() {
    let system = model();
    let basis = BasisSpec::new(2, 1, idx(&[(0, 0, 0), (0, 0, 1), (1, 0, 0), (2, 0, 0)])).unwrap();
    let set = compute_coupling_set(&system, &basis, &[3.0, 1.5, 6.0], &CouplingOptions::default(), Parallelism::Sequential)
        .unwrap();
    assert_eq!(set.rho(), vec![1.5, 3.0, 6.0]);
    let json = serde_json::to_string(&set.to_table()).unwrap();
    let back = CouplingSet::from_table(&serde_json::from_str::<CouplingTable>(&json).unwrap()).unwrap();
    for (a, b) in set.points.iter().zip(&back.points) {
        assert_points_equal(a, b);
        assert_eq!(a.energies, b.energies);
    }

    let sub = set.restrict(&idx(&[(1, 0, 0), (0, 0, 1)])).unwrap();
    assert_eq!(sub.basis.states, idx(&[(0, 0, 1), (1, 0, 0)]));
    for (full, part) in set.points.iter().zip(&sub.points) {
        let (f, p) = (full.full(&set.basis), part.full(&sub.basis));
        let keep = [1usize, 2];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                assert_eq!(p.u[(a, b)], f.u[(i, j)]);
                assert_eq!(p.q[(a, b)], f.q[(i, j)]);
                assert_eq!(p.t[(a, b)], f.t[(i, j)]);
            }
        }
    }
    assert!(set.restrict(&idx(&[(0, 3, 0)])).is_err());

    let par = compute_coupling_set(&system, &basis, &[1.5, 3.0, 6.0], &CouplingOptions::default(), Parallelism::Auto)
        .unwrap();
    for (a, b) in set.points.iter().zip(&par.points) {
        assert_points_equal(a, b);
    }
}
