//! Randomized invariants, driven by proptest over seeds and sizes.

use charfock::colligation::{
    is_coisometric, make_defect_constrained, structure_decompose, structure_reconstruct,
    transfer_oracle, transfer_symbol, Colligation,
};
use charfock::equiv::{coincidence_solve, equivalence_solve, SolverOptions, Verdict};
use charfock::fock::{build_fock, multianalytic_matrix, multianalytic_norm, series_from_fock_operator};
use charfock::io::{
    colligation_from_json, colligation_to_json, lifting_from_json, lifting_to_json, parse,
    rowcon_from_json, rowcon_to_json, series_from_json, series_to_json, to_pretty,
    ColligationJson, LiftingJson, NCSeriesJson, RowContractionJson,
};
use charfock::lifting::{
    build_lifting, extract_gamma, lifting_char_decomposed, lifting_char_direct,
    lifting_colligation, minimality_check, resolving_check, sigma_map,
};
use charfock::mobius::{mobius_contraction, mobius_lifting, z_unitaries};
use charfock::numlin::{
    identity, isometry_residual, max_abs, pinv, polar_unitary, procrustes, psd_sqrt, range_onb,
    unitarity_residual, CMatrix, DEFAULT_CLAMP_TOL, DEFAULT_RANK_TOL,
};
use charfock::rowcon::{char_symbol, char_symbol_oracle, defects, is_cnc, popescu_colligation};
use charfock::testgen::{
    conjugate_row, random_contraction, random_matrix, random_minimal_lifting,
    random_row_contraction, random_strict_row_contraction, random_unitary, rng_from_seed,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..=6, rank in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let x = random_matrix(&mut rng, n, rank.min(n));
        let m = &x * x.adjoint();
        let r = psd_sqrt(&m, DEFAULT_CLAMP_TOL).unwrap();
        let scale = 1.0 + max_abs(&m);
        prop_assert!(max_abs(&(&r * &r - &m)) < 1e-9 * scale);
    }

    #[test]
    fn range_basis_is_isometric(seed in any::<u64>(), n in 1usize..=6, k in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let x = random_matrix(&mut rng, n, k);
        let q = range_onb(&(&x * x.adjoint()), DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(q.dim(), k.min(n));
        prop_assert!(isometry_residual(q.matrix()) < 1e-12);
    }

    #[test]
    fn pinv_penrose_conditions(seed in any::<u64>(), r in 1usize..=5, c in 1usize..=5, k in 1usize..=5) {
        let mut rng = rng_from_seed(seed);
        let m = random_matrix(&mut rng, r, k) * random_matrix(&mut rng, k, c);
        let p = pinv(&m, DEFAULT_RANK_TOL);
        prop_assert!(max_abs(&(&m * &p * &m - &m)) < 1e-9);
        prop_assert!(max_abs(&(&p * &m * &p - &p)) < 1e-9);
        let mp = &m * &p;
        let pm = &p * &m;
        prop_assert!(max_abs(&(&mp - mp.adjoint())) < 1e-9);
        prop_assert!(max_abs(&(&pm - pm.adjoint())) < 1e-9);
    }

    #[test]
    fn polar_and_procrustes(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = rng_from_seed(seed);
        let u = polar_unitary(&random_matrix(&mut rng, n, n)).unwrap();
        prop_assert!(unitarity_residual(&u) < 1e-10);
        let pairs: Vec<_> = (0..3)
            .map(|_| (random_matrix(&mut rng, 2, n), random_matrix(&mut rng, 2, n)))
            .collect();
        let v = procrustes(&pairs).unwrap();
        let objective = |w: &CMatrix| -> f64 {
            pairs.iter().map(|(x, y)| (w.adjoint() * x.adjoint() * y).trace().re).sum()
        };
        prop_assert!(objective(&v) >= objective(&identity(n)) - 1e-12);
    }

    #[test]
    fn fock_operator_round_trip(seed in any::<u64>(), d in 1usize..=2, n in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let t = random_strict_row_contraction(&mut rng, n, d, 0.3, 0.9);
        let s = char_symbol(&t, 3).unwrap();
        let fock = build_fock(d, 3).unwrap();
        let m = multianalytic_matrix(&s, &fock).unwrap();
        let back = series_from_fock_operator(&m, &fock, s.in_dim(), s.out_dim()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn row_contraction_defects(seed in any::<u64>(), n in 1usize..=4, d in 1usize..=3, norm in 0.1f64..=1.0) {
        let mut rng = rng_from_seed(seed);
        let t = random_row_contraction(&mut rng, n, d, norm);
        let dp = defects(&t, DEFAULT_RANK_TOL).unwrap();
        let row = t.row();
        prop_assert!(max_abs(&(&dp.d * &dp.d + row.adjoint() * &row - identity(n * d))) < 1e-10);
        prop_assert!(max_abs(&(&dp.dstar * &dp.dstar + &row * row.adjoint() - identity(n))) < 1e-10);
        let k = dp.dim_d();
        prop_assert!(n * (d - 1) <= k && k <= n * d);
    }

    #[test]
    fn char_symbol_matches_oracle(seed in any::<u64>(), n in 1usize..=4, d in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let t = random_strict_row_contraction(&mut rng, n, d, 0.2, 0.95);
        let s = char_symbol(&t, 4).unwrap();
        prop_assert!(s.max_deviation(&char_symbol_oracle(&t, 4).unwrap()).unwrap() < 1e-10);
        let w = popescu_colligation(&t).unwrap();
        prop_assert!(is_coisometric(&w, 1e-10).0);
        prop_assert!(transfer_symbol(&w, 4).unwrap().max_deviation(&s).unwrap() < 1e-10);
        prop_assert!(multianalytic_norm(&s.truncate(2)).unwrap() <= 1.0 + 1e-8);
    }

    #[test]
    fn transfer_matches_oracle(seed in any::<u64>(), d in 1usize..=3, n1 in 1usize..=4, n2 in 1usize..=3, n3 in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let m = random_contraction(&mut rng, d * n1 + n3, n1 + n2, 0.95);
        let w = Colligation::from_matrix(&m, d, n1, n2).unwrap();
        let a = transfer_symbol(&w, 5).unwrap();
        prop_assert!(a.max_deviation(&transfer_oracle(&w, 5).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn structure_round_trip(seed in any::<u64>(), n in 1usize..=4, d in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let t = random_strict_row_contraction(&mut rng, n, d, 0.3, 0.95);
        let dp = defects(&t, DEFAULT_RANK_TOL).unwrap();
        let sigma = random_unitary(&mut rng, dp.dim_d());
        let gamma = random_unitary(&mut rng, dp.dim_dstar());
        let w = structure_reconstruct(&t, &dp, &gamma, &sigma).unwrap();
        let s = structure_decompose(&w, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(s.residual < 1e-8);
        prop_assert!(max_abs(&(&s.sigma_tilde - &sigma)) < 1e-8);
        prop_assert!(max_abs(&(&s.gamma - &gamma)) < 1e-8);
    }

    #[test]
    fn lifting_identities(seed in any::<u64>(), d in 1usize..=2, n_c in 1usize..=3, n_a_raw in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let n_a = n_a_raw.min(n_c * d);
        let e = random_minimal_lifting(&mut rng, n_c, n_a, d);
        let g = extract_gamma(&e, DEFAULT_RANK_TOL).unwrap();
        let rebuilt = build_lifting(e.c(), e.a(), &g.gamma).unwrap();
        prop_assert!(max_abs(&(rebuilt.e().row() - e.e().row())) < 1e-9);
        let sm = sigma_map(&e).unwrap();
        prop_assert!(sm.unitarity_residual < 1e-9);
        let dec = lifting_char_decomposed(&e, 4).unwrap();
        prop_assert!(dec.max_deviation(&lifting_char_direct(&e, 4).unwrap()).unwrap() < 1e-9);
        let v = lifting_colligation(&e).unwrap();
        prop_assert!(transfer_symbol(&v, 4).unwrap().max_deviation(&dec).unwrap() < 1e-9);
        if minimality_check(&e).minimal {
            prop_assert!(resolving_check(&e).unwrap().resolving);
            prop_assert!(is_cnc(e.a()).unwrap());
        }
    }

    #[test]
    fn equivalence_and_coincidence(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2) {
        let mut rng = rng_from_seed(seed);
        let a = random_strict_row_contraction(&mut rng, n, d, 0.3, 0.9);
        let u0 = random_unitary(&mut rng, n);
        let s1 = char_symbol(&a, 3).unwrap();
        let s2 = char_symbol(&conjugate_row(&a, &u0), 3).unwrap();
        let opts = SolverOptions { seed, ..SolverOptions::default() };
        let r = coincidence_solve(&s1, &s2, &opts).unwrap();
        prop_assert_ne!(r.status, Verdict::RefutedByInvariant);
        if r.status == Verdict::Confirmed {
            let (u, ut) = (&r.unitaries[0], &r.unitaries[1]);
            for (c1, c2) in s1.coeffs().iter().zip(s2.coeffs()) {
                prop_assert!(max_abs(&(ut * c1 - c2 * u)) < 1e-8);
            }
        }
        let v0 = random_unitary(&mut rng, s1.in_dim());
        let e = equivalence_solve(&s1, &s1.apply_input(&v0).unwrap(), None).unwrap();
        prop_assert_eq!(e.status, Verdict::Confirmed);
    }

    #[test]
    fn mobius_involution_and_z_relations(seed in any::<u64>(), n in 1usize..=4, r in 0.0f64..0.9, th in 0.0f64..6.28) {
        let mut rng = rng_from_seed(seed);
        let t = random_contraction(&mut rng, n, n, 0.95);
        let a = Complex64::from_polar(r, th);
        let back = mobius_contraction(&mobius_contraction(&t, a).unwrap(), -a).unwrap();
        prop_assert!(max_abs(&(back - &t)) < 1e-10);
        let md = z_unitaries(&t, a, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(md.residuals.iter().all(|&x| x < 1e-9));
    }

    #[test]
    fn mobius_lifting_stays_minimal(seed in any::<u64>(), n_c in 1usize..=3, n_a_raw in 1usize..=3, r in 0.0f64..=0.5, th in 0.0f64..6.28) {
        let mut rng = rng_from_seed(seed);
        let e = random_minimal_lifting(&mut rng, n_c, n_a_raw.min(n_c), 1);
        let ea = mobius_lifting(&e, Complex64::from_polar(r, th)).unwrap();
        prop_assert!(minimality_check(&ea).minimal);
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2) {
        let mut rng = rng_from_seed(seed);
        let t = random_strict_row_contraction(&mut rng, n, d, 0.2, 0.9);
        let jt: RowContractionJson = parse(&to_pretty(&rowcon_to_json(&t))).unwrap();
        prop_assert_eq!(rowcon_from_json(&jt).unwrap(), t.clone());
        let s = char_symbol(&t, 2).unwrap();
        let js: NCSeriesJson = parse(&to_pretty(&series_to_json(&s))).unwrap();
        prop_assert_eq!(series_from_json(&js).unwrap(), s);
        let w = popescu_colligation(&t).unwrap();
        let jw: ColligationJson = parse(&to_pretty(&colligation_to_json(&w))).unwrap();
        prop_assert_eq!(colligation_from_json(&jw).unwrap(), w);
        let e = random_minimal_lifting(&mut rng, n, 1, d);
        let je: LiftingJson = parse(&to_pretty(&lifting_to_json(&e))).unwrap();
        prop_assert_eq!(lifting_from_json(&je).unwrap(), e);
    }
}

#[test]
fn defect_constrained_dimensions() {
    for n in 1..=4 {
        for d in 1..=3 {
            for k in n * (d - 1)..=n * d {
                let g = make_defect_constrained(n, d, k).unwrap();
                assert_eq!(defects(&g, DEFAULT_RANK_TOL).unwrap().dim_d(), k, "n={n} d={d} k={k}");
            }
        }
    }
}
