use std::sync::OnceLock;

use proptest::prelude::*;
use spacetime_lab::grid_calculus::{assemble_p, weighted_norm, GridFunction, SpacetimeGrid};
use spacetime_lab::hamilton_flow::integrate_flow;
use spacetime_lab::lab::{Experiment, ExperimentConfig, GridSpec, EXPERIMENT_NAMES};
use spacetime_lab::metric_symbols::{
    build_cutoff_family, eval_symbol, jap, make_perturbed_minkowski, weight_lambda, CutoffFamily, CutoffParams, InverseMetricField, MetricSpec, PhasePoint,
    RegionSpec, WeightSpec,
};
use spacetime_lab::resolvent_lab::CapSpec;
use spacetime_lab::scattering::{CauchyDatum, Evolution, EvolutionKind, FreePropagator, LineGrid};
use spacetime_lab::Complex64;

fn field(a: f64, w: f64, mu: f64, product: bool) -> InverseMetricField {
    make_perturbed_minkowski(MetricSpec { product_form: product, ..MetricSpec::bump(a, w, mu) }).unwrap()
}

fn coord() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_metric_is_symmetric_and_lorentzian(a in -0.9..0.9f64, w in 0.5..5.0f64, mu in 0.5..3.0f64, product: bool, t in coord(), y in coord()) {
        let f = field(a, w, mu, product);
        let g = f.inverse_metric([t, y]);
        prop_assert_eq!(g[0][1], g[1][0]);
        prop_assert!(g[0][0] < 0.0);
        prop_assert!(g[0][0] * g[1][1] - g[0][1] * g[1][0] < 0.0);
    }

    #[test]
    fn weight_is_positive_and_reduces_at_zero_delta(k in -2.0..2.0f64, l in -2.0..2.0f64, kappa in 0.0..2.0f64, n in 0.1..3.0f64,
                                                   t in coord(), y in coord(), tau in -20.0..20.0f64, eta in -20.0..20.0f64, delta in 0.0..1.0f64) {
        let pt = PhasePoint::new([t, y], [tau, eta]);
        let s = WeightSpec::new(k, l, kappa, n, delta);
        prop_assert!(weight_lambda(&s, &pt) > 0.0);
        let bare = jap(pt.xi).powf(k - 0.5) * jap(pt.x).powf(l + 0.5);
        prop_assert!((weight_lambda(&s.with_delta(0.0), &pt) / bare - 1.0).abs() < 1e-14);
    }

    #[test]
    fn region_membership_is_deterministic(t in coord(), y in coord(), tau in -5.0..5.0f64, eta in -5.0..5.0f64) {
        let f = field(0.1, 2.0, 1.5, false);
        let pt = PhasePoint::new([t, y], [tau, eta]);
        for reg in [RegionSpec::incoming(0.2, 0.5, 4.0), RegionSpec::outgoing(0.2, 0.5, 4.0), RegionSpec::mid(-0.5, 0.5, 0.5, 4.0)] {
            prop_assert_eq!(reg.contains(&f, &pt), reg.contains(&f, &pt));
        }
        // Incoming and outgoing bands are disjoint.
        prop_assert!(!(RegionSpec::incoming(0.2, 0.5, 4.0).contains(&f, &pt) && RegionSpec::outgoing(0.2, 0.5, 4.0).contains(&f, &pt)));
    }

    #[test]
    fn flow_starts_at_seed_and_conserves_symbol(t in -5.0..5.0f64, y in -5.0..5.0f64, theta in 0.0..std::f64::consts::TAU, r in 0.5..4.0f64) {
        let f = field(0.3, 2.0, 1.5, false);
        let seed = PhasePoint::new([t, y], [r * theta.cos(), r * theta.sin()]);
        let tol = 1e-9;
        let traj = integrate_flow(&f, seed, (-20.0, 20.0), tol).unwrap();
        prop_assert_eq!(traj.at(0.0), seed);
        let p0 = eval_symbol(&f, &seed);
        for s in [-20.0, -7.5, 3.0, 20.0] {
            let drift = (eval_symbol(&f, &traj.at(s)) - p0).abs();
            prop_assert!(drift <= 10.0 * tol * (1.0 + r * r), "drift {drift} at {s}");
        }
    }

    #[test]
    fn cutoff_symbols_are_bounded(t in -500.0..500.0f64, y in -500.0..500.0f64, tau in -50.0..50.0f64, eta in -50.0..50.0f64) {
        let pt = PhasePoint::new([t, y], [tau, eta]);
        for fam in cutoff_families() {
            // |β| ≤ 1 bounds the e^{−Mβ} factor; the profile derivatives
            // times their band widths stay below 2.
            let v = fam.eval(&pt);
            let top = fam.m.exp();
            prop_assert!(v.a >= 0.0 && v.a <= top, "{v:?}");
            prop_assert!(v.b1.abs() <= 2.0 * fam.c_b1.sqrt() * top, "{v:?}");
            prop_assert!(v.b2.abs() <= 2.0 * fam.c_b2.sqrt() * top, "{v:?}");
            prop_assert!(v.e.abs() <= 2.0 * fam.c_e.sqrt() * top, "{v:?}");
        }
    }
}

fn cutoff_families() -> &'static [CutoffFamily] {
    static FAMS: OnceLock<Vec<CutoffFamily>> = OnceLock::new();
    FAMS.get_or_init(|| {
        let f = field(0.1, 2.0, 1.5, false);
        [CutoffParams::mid(-0.5, 0.5, 0.1, 1.0, 10.0), CutoffParams::incoming(0.1, 1.0, 10.0), CutoffParams::outgoing(0.1, 1.0, 10.0)]
            .into_iter()
            .map(|p| build_cutoff_family(&f, p, 20_000, 5).unwrap())
            .collect()
    })
}

fn small_grid() -> SpacetimeGrid {
    SpacetimeGrid::square(4.0, 16).unwrap()
}

fn grid_function(coeffs: &[(f64, f64)]) -> GridFunction {
    let g = small_grid();
    let vals: Vec<Complex64> = (0..g.len()).map(|k| Complex64::new(coeffs[k % coeffs.len()].0, coeffs[(k * 7 + 3) % coeffs.len()].1)).collect();
    GridFunction::from_values(g, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weighted_norm_is_a_norm(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5..40),
                               b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5..40),
                               k in -1.0..1.0f64, l in -1.0..1.0f64, c in -3.0..3.0f64) {
        let u = grid_function(&a);
        let v = grid_function(&b);
        let nu = weighted_norm(&u, k, l);
        let nv = weighted_norm(&v, k, l);
        let scaled = weighted_norm(&u.scaled(Complex64::new(c, 0.0)), k, l);
        prop_assert!((scaled - c.abs() * nu).abs() <= 1e-12 * (1.0 + nu));
        prop_assert!(weighted_norm(&u.add(&v), k, l) <= nu + nv + 1e-12 * (1.0 + nu + nv));
    }

    #[test]
    fn assembled_operator_is_hermitian(a in -0.5..0.5f64, w in 2.0..6.0f64, mu in 0.5..3.0f64, product: bool) {
        let p = assemble_p(&field(a, w, mu, product), &SpacetimeGrid::square(4.0, 32).unwrap()).unwrap();
        prop_assert!(p.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn absorber_is_nonnegative_and_vanishes_inside(onset in 0.1..0.9f64, strength in 0.0..5.0f64, exponent in 1.0..4.0f64, t in -4.0..4.0f64, y in -4.0..4.0f64) {
        let g = small_grid();
        let cap = CapSpec { onset: onset * g.inner_radius(), strength, exponent };
        let w = cap.eval(&g, [t, y]);
        prop_assert!(w >= 0.0);
        if (t * t + y * y).sqrt() <= cap.onset {
            prop_assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn free_evolution_conserves_energy(re in prop::collection::vec(-1.0..1.0f64, 32), im in prop::collection::vec(-1.0..1.0f64, 32),
                                       m0 in 0.5..2.0f64, dt in -30.0..30.0f64) {
        let line = LineGrid::new(8.0, 32).unwrap();
        let prop_ = FreePropagator::continuous(line, m0).unwrap();
        let u: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let v: Vec<Complex64> = im.iter().zip(&re).map(|(a, b)| Complex64::new(*a, -*b)).collect();
        let d = CauchyDatum::new(line, u, v).unwrap();
        let e0 = prop_.energy(&d);
        let e1 = prop_.energy(&prop_.evolve(&d, dt));
        prop_assert!((e1 - e0).abs() <= 1e-12 * e0);
    }

    #[test]
    fn perturbed_evolution_obeys_group_law(a in -0.2..0.2f64, n1 in -12i64..12, n2 in -12i64..12, n3 in -12i64..12) {
        let line = LineGrid::new(8.0, 32).unwrap();
        let step = 0.3;
        let evo = Evolution::new(&field(a, 2.0, 1.5, true), line, 1.0, step, EvolutionKind::Perturbed, 12.0 * step).unwrap();
        let d = CauchyDatum::from_fn(line, |y| Complex64::new((-y * y).exp(), 0.0), |y| Complex64::new(0.0, y * (-y * y / 2.0).exp()));
        let (s, r, t) = (n1 as f64 * step, n2 as f64 * step, n3 as f64 * step);
        let two = evo.evolve(&evo.evolve(&d, s, r).unwrap(), r, t).unwrap();
        let one = evo.evolve(&d, s, t).unwrap();
        prop_assert!(two.sub(&one).l2_norm() <= 1e-9 * one.l2_norm().max(1.0));
    }

    #[test]
    fn configs_round_trip(which in 0..EXPERIMENT_NAMES.len(), seed in 0..=i64::MAX as u64, threads in 0usize..8, half in 2.0..40.0f64, n in 4usize..64) {
        let mut c = ExperimentConfig::new(Experiment::default_named(EXPERIMENT_NAMES[which]).unwrap());
        c.seed = seed;
        c.threads = threads;
        c.grid = Some(GridSpec { half_width: half, n: 2 * n, nt: None });
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap());
        // Grid-size limits of individual experiments may reject the config; anything accepted must round-trip.
        if let Ok(back) = back {
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn seeds_beyond_toml_integers_are_rejected(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let mut c = ExperimentConfig::new(Experiment::default_named("subelliptic").unwrap());
        c.seed = seed;
        prop_assert!(c.validate().is_err());
    }
}
