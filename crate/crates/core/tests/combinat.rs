use iqft_core::combinat::*;
use iqft_core::fock::{FockSpace, GridFunction, RapidityGrid};
use iqft_core::smatrix::{OnConvention, ParticleSpectrum, SMatrix, Scalar};
use iqft_core::C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn one_line(p: &Permutation) -> Vec<usize> {
    p.one_line_1based()
}

#[test]
fn pi_a_b_matches_two_line_examples() {
    assert_eq!(one_line(&pi_a_b(3, 1, 3).unwrap()), vec![2, 3, 1]);
    assert_eq!(one_line(&pi_a_b(3, 3, 1).unwrap()), vec![3, 1, 2]);
    for a in 1..=5 {
        assert_eq!(pi_a_b(5, a, a).unwrap(), Permutation::identity(5));
    }
    assert!(pi_a_b(3, 0, 2).is_err());
    assert!(pi_a_b(3, 1, 4).is_err());
}

#[test]
fn enumeration_counts() {
    for n in 0..=6 {
        let all = enumerate_contractions(n, 0).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_empty());
        assert_eq!(enumerate_contractions(n, n).unwrap().len(), 1);
    }
    let c42 = enumerate_contractions(4, 2).unwrap();
    assert_eq!(c42.len(), 7);
    let by_len: Vec<usize> = (0..=2).map(|l| c42.iter().filter(|c| c.len() == l).count()).collect();
    assert_eq!(by_len, vec![1, 4, 2]);
    for n in 0..=9 {
        for k in 0..=n {
            let all = enumerate_contractions(n, k).unwrap();
            let want: u128 = (0..=k.min(n - k)).map(|l| contraction_count(n, k, l)).sum();
            assert_eq!(all.len() as u128, want, "n = {n}, k = {k}");
            assert!(all.iter().all(|c| c.validate().is_ok()));
        }
    }
    assert!(enumerate_contractions(13, 2).is_err());
    assert!(enumerate_contractions(3, 4).is_err());
}

#[test]
fn pi_rho_and_pi_lambda_spot_case() {
    let c = Contraction::new(4, 2, vec![1], vec![3]).unwrap();
    assert_eq!(pi_rho(&c).unwrap(), pi_a_b(4, 1, 2).unwrap());
    assert_eq!(pi_lambda(&c).unwrap(), Permutation::identity(4));
    let e = Contraction::empty(5, 2);
    assert_eq!(pi_rho(&e).unwrap(), Permutation::identity(5));
    assert_eq!(pi_lambda(&e).unwrap(), Permutation::identity(5));
    // two pairs, crossing order on the left
    let c = Contraction::new(5, 2, vec![1, 2], vec![5, 3]).unwrap();
    assert_eq!(one_line(&pi_rho(&c).unwrap()), vec![2, 1, 3, 4, 5]);
    assert_eq!(one_line(&pi_lambda(&c).unwrap()), vec![1, 2, 5, 3, 4]);
}

#[test]
fn contraction_validation() {
    assert!(Contraction::new(4, 2, vec![2, 1], vec![3, 4]).is_err());
    assert!(Contraction::new(4, 2, vec![1], vec![2]).is_err());
    assert!(Contraction::new(4, 2, vec![1, 2], vec![3, 3]).is_err());
    assert!(Contraction::new(4, 2, vec![1], vec![]).is_err());
}

#[test]
fn lemmas_hold_exhaustively_up_to_seven() {
    let reports = verify_all_lemmas(7).unwrap();
    for r in &reports {
        assert!(r.passed(), "{}: {:?}", r.lemma, r.counterexample);
        assert!(r.checked > 0, "{}", r.lemma);
    }
    let json = serde_json::to_value(&reports[0]).unwrap();
    assert!(json["counterexample"].is_null());
}

#[test]
fn extension_right_cases() {
    // |C| = 0: π_{C′} = π_r^k·π_{k+1}^{k+1}
    for r in 1..=3 {
        let e = Contraction::empty(6, 3);
        let (cp, v) = extend_right(&e, r).unwrap();
        assert_eq!(v, 0);
        assert_eq!(pi_c(&cp).unwrap(), pi_a_b(6, r, 3).unwrap().then(&pi_a_b(6, 4, 4).unwrap()));
        assert!(verify_extension_lemma_right(&e, r).unwrap());
    }
    // (n,k) = (5,2), C = {(4,1)}, r = 2: C′ = {(4,1),(3,2)}
    let c = Contraction::new(5, 2, vec![1], vec![4]).unwrap();
    let (cp, v) = extend_right(&c, 2).unwrap();
    assert_eq!(v, 1);
    assert_eq!((cp.rs.clone(), cp.ls.clone()), (vec![1, 2], vec![4, 3]));
    assert_eq!(one_line(&pi_c(&cp).unwrap()), vec![2, 1, 4, 3, 5]);
    assert!(verify_extension_lemma_right(&c, 2).unwrap());
    assert!(verify_extension_lemma_right(&c, 1).is_err());
    let bad = Contraction::new(5, 2, vec![1], vec![3]).unwrap();
    assert!(verify_extension_lemma_right(&bad, 2).is_err());
}

#[test]
fn extension_left_cases() {
    let e = Contraction::empty(5, 3);
    for l in 4..=5 {
        let (cpp, u) = extend_left(&e, l).unwrap();
        assert_eq!(u, 0);
        assert_eq!(pi_c(&cpp).unwrap(), pi_a_b(5, l, 4).unwrap());
        assert!(verify_extension_lemma_left(&e, l).unwrap());
    }
    // C̃ = {(6,1)} in sector k+1 = 3, l = 4: u_l = 1
    let c = Contraction::new(6, 3, vec![1], vec![6]).unwrap();
    let (cpp, u) = extend_left(&c, 4).unwrap();
    assert_eq!(u, 1);
    assert_eq!((cpp.rs.clone(), cpp.ls.clone()), (vec![1, 3], vec![6, 4]));
    assert_eq!(one_line(&pi_c(&cpp).unwrap()), vec![2, 3, 1, 6, 4, 5]);
    assert!(verify_extension_lemma_left(&c, 4).unwrap());
    assert!(verify_extension_lemma_left(&c, 6).is_err());
    let bad = Contraction::new(6, 3, vec![3], vec![6]).unwrap();
    assert!(verify_extension_lemma_left(&bad, 4).is_err());
}

#[test]
fn sum_bound_values() {
    assert_eq!(contraction_sum_bound(1, 0).unwrap(), (1.0, 2.0));
    let (lhs, rhs) = contraction_sum_bound(4, 2).unwrap();
    assert!((lhs - 8.0).abs() < 1e-12);
    assert!((rhs - 16.0 * 24f64.sqrt()).abs() < 1e-9);
    for n in 0..=10 {
        for k in 0..=n {
            let (l, r) = contraction_sum_bound(n, k).unwrap();
            assert!(l <= r, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn contraction_json_roundtrip() {
    let c = Contraction::new(5, 2, vec![1, 2], vec![5, 3]).unwrap();
    let s = serde_json::to_string(&c).unwrap();
    assert_eq!(s, r#"{"n":5,"k":2,"rs":[1,2],"ls":[5,3]}"#);
    assert_eq!(serde_json::from_str::<Contraction>(&s).unwrap(), c);
}

fn contraction_strategy(n: usize) -> impl Strategy<Value = Contraction> {
    (0..=n).prop_flat_map(move |k| {
        let all = enumerate_contractions(n, k).unwrap();
        (0..all.len()).prop_map(move |i| all[i].clone())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_contractions_at_nine_commute(c in contraction_strategy(9)) {
        prop_assert!(verify_commutation(&c).unwrap());
        prop_assert_eq!(pi_rho(&c).unwrap(), pi_rho_short(&c).unwrap());
        prop_assert_eq!(pi_lambda(&c).unwrap(), pi_lambda_short(&c).unwrap());
        prop_assert!(perm_is_valid(&pi_c(&c).unwrap().one_line));
    }
}

fn perm_is_valid(p: &[usize]) -> bool {
    iqft_core::perm::is_permutation(p)
}

fn on3_literal() -> SMatrix {
    SMatrix::o_n(3).unwrap()
}

#[test]
fn factorization_of_s_tensors() {
    let s = SMatrix::sinh_gordon(2.0);
    let f = s_tensor_factorization(&s, &Contraction::empty(3, 1), &[0.3, -0.2, 1.1]).unwrap();
    assert!(f.residual < 1e-14);
    assert!((f.full[(0, 0)] - C::new(1.0, 0.0)).norm() < 1e-14);

    let c = Contraction::new(3, 1, vec![1], vec![3]).unwrap();
    let f = s_tensor_factorization(&s, &c, &[0.3, -0.2, 1.1]).unwrap();
    assert!(f.residual < 1e-12);
    // π_λ = τ_2 alone: S(θ_3 − θ_2)
    let direct = s.eval_real(1.1 - -0.2).unwrap()[(0, 0)];
    assert!((f.full[(0, 0)] - direct).norm() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let on = on3_literal();
    for k in 0..=4 {
        let all = enumerate_contractions(4, k).unwrap();
        let c = &all[rng.gen_range(0..all.len())];
        let theta: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f = s_tensor_factorization(&on, c, &theta).unwrap();
        assert!(f.residual < 1e-10, "{c:?}: {}", f.residual);
    }
}

fn small_grid(g: usize) -> RapidityGrid {
    RapidityGrid::gauss_legendre(g, -2.0, 2.0)
}

fn con_spaces() -> Vec<FockSpace> {
    let e = |g2| Scalar::SinhGordon { g2 };
    vec![
        FockSpace::new(&SMatrix::sinh_gordon(4.0 * PI), small_grid(4), 3).unwrap(),
        FockSpace::new(&SMatrix::diagonal(vec![vec![e(4.0 * PI), e(2.0)], vec![e(2.0), e(7.0)]], ParticleSpectrum::neutral(2, 1.0)).unwrap(), small_grid(3), 3)
            .unwrap(),
        FockSpace::new(&SMatrix::o_n_with(3, OnConvention::YangBaxter).unwrap(), small_grid(2), 3).unwrap(),
    ]
}

fn random_fns(fs: &FockSpace, n: usize, rng: &mut ChaCha8Rng) -> Vec<GridFunction> {
    (0..n).map(|_| GridFunction::random(fs.dim1(), rng)).collect()
}

fn conj_fn(f: &GridFunction) -> GridFunction {
    GridFunction { values: f.values.iter().map(|z| z.conj()).collect() }
}

fn bar_fn(fs: &FockSpace, f: &GridFunction) -> GridFunction {
    let d = fs.d();
    GridFunction { values: (0..fs.dim1()).map(|s| f.values[(s / d) * d + fs.spectrum.bar(s % d)]).collect() }
}

fn tensor(fs: &[&GridFunction]) -> Vec<C> {
    fs.iter().fold(vec![C::new(1.0, 0.0)], |acc, f| acc.iter().flat_map(|a| f.values.iter().map(move |b| a * b)).collect())
}

#[test]
fn contracted_element_identity_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fs = &con_spaces()[1];
    let dim = fock_dim(fs);
    let ctx = ContractionContext::new(fs, &iqft_core::linalg::eye(dim)).unwrap();
    let (f, g) = (GridFunction::random(fs.dim1(), &mut rng), GridFunction::random(fs.dim1(), &mut rng));
    let v = ctx.contracted_matrix_element(&Contraction::empty(2, 1), &f.values, &g.values).unwrap();
    let want = fs.one_inner(&conj_fn(&f), &bar_fn(fs, &g));
    assert!((v - want).norm() < 1e-13);
}

#[test]
fn contracted_element_matches_z_dagger_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for fs in con_spaces() {
        let a = random_operator(&fs, &mut rng);
        let ctx = ContractionContext::new(&fs, &a).unwrap();
        let fns = random_fns(&fs, 4, &mut rng);
        // left z†(f̄₁)z†(f̄₂)Ω, right z†(ḡ₂′)z†(ḡ₁′)Ω with g′ species-conjugated
        let left = fs.z_dagger(&conj_fn(&fns[0]), &fs.z_dagger(&conj_fn(&fns[1]), &fs.vacuum()).unwrap()).unwrap();
        let right = fs.z_dagger(&bar_fn(&fs, &fns[3]), &fs.z_dagger(&bar_fn(&fs, &fns[2]), &fs.vacuum()).unwrap()).unwrap();
        let want = fs.inner(&left, &ctx.apply(&right));
        let c = Contraction::empty(4, 2);
        let got = ctx.contracted_matrix_element(&c, &tensor(&[&fns[0], &fns[1]]), &tensor(&[&fns[2], &fns[3]])).unwrap();
        assert!((got - want).norm() < 1e-11 * (1.0 + want.norm()), "{got} vs {want}");
    }
}

#[test]
fn contracted_element_cauchy_schwarz_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for fs in con_spaces() {
        let a = random_operator(&fs, &mut rng);
        let ctx = ContractionContext::new(&fs, &a).unwrap();
        let na = ctx.norm();
        for c in enumerate_contractions(4, 2).unwrap() {
            let (m, q) = (2 - c.len(), 2 - c.len());
            let f = fs.random_layer(m, &mut rng);
            let g = fs.random_layer(q, &mut rng);
            let nf = fs.layer_inner(m, &f, &f).re.sqrt();
            let ng = fs.layer_inner(q, &g, &g).re.sqrt();
            let v = ctx.contracted_matrix_element(&c, &f, &g).unwrap();
            let fact = |x: usize| iqft_core::perm::factorial(x) as f64;
            assert!(v.norm() <= (fact(m) * fact(q)).sqrt() * nf * ng * na * (1.0 + 1e-12));
        }
    }
}

#[test]
fn empty_sector_reproduces_vacuum_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for fs in con_spaces() {
        let a = random_operator(&fs, &mut rng);
        let ctx = ContractionContext::new(&fs, &a).unwrap();
        for n in 1..=3 {
            let fns = random_fns(&fs, n, &mut rng);
            let con = ctx.fully_contracted_element(n, 0, &fns).unwrap();
            let want = ctx.vacuum_pairing(&fns).unwrap();
            assert!((con - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }
}

#[test]
fn sector_n_reproduces_modular_component() {
    // ⟨A⟩^con_{n,n} = √(n!) (J A* Ω)_n
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for fs in con_spaces() {
        let a = random_operator(&fs, &mut rng);
        let ctx = ContractionContext::new(&fs, &a).unwrap();
        let w: Vec<f64> = (0..=fs.n_max).flat_map(|n| fs.weights(n)).collect();
        let pap = ctx.operator();
        let adj = iqft_core::linalg::CMat::from_fn(w.len(), w.len(), |i, j| pap[(j, i)].conj() * w[j] / w[i]);
        let adj_ctx = ContractionContext::new(&fs, &adj).unwrap();
        let jv = fs.pct_j(&adj_ctx.apply(&fs.vacuum()));
        for n in 1..=3 {
            let fns = random_fns(&fs, n, &mut rng);
            let con = ctx.fully_contracted_element(n, n, &fns).unwrap();
            let prod = tensor(&fns.iter().collect::<Vec<_>>());
            let want: C = fs.weights(n).iter().zip(prod.iter().zip(&jv.layers[n])).map(|(w, (f, v))| *w * f * v).sum::<C>()
                * (iqft_core::perm::factorial(n) as f64).sqrt();
            assert!((con - want).norm() < 1e-11 * (1.0 + want.norm()), "n = {n}: {con} vs {want}");
        }
    }
}

#[test]
fn commutator_form_agrees_with_contraction_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for fs in con_spaces() {
        let a = random_operator(&fs, &mut rng);
        let ctx = ContractionContext::new(&fs, &a).unwrap();
        for n in 1..=3 {
            for k in 0..n {
                let fns = random_fns(&fs, n, &mut rng);
                let direct = ctx.fully_contracted_element(n, k, &fns).unwrap();
                let comm = ctx.fully_contracted_commutator(n, k, &fns).unwrap();
                assert!((direct - comm).norm() < 1e-10 * (1.0 + direct.norm()), "n = {n}, k = {k}: {direct} vs {comm}");
            }
        }
    }
}

#[test]
fn fully_contracted_bound_on_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let fs = &con_spaces()[0];
    for _ in 0..50 {
        let a = random_operator(fs, &mut rng);
        let ctx = ContractionContext::new(fs, &a).unwrap();
        let na = ctx.norm();
        let n = 3;
        let fns = random_fns(fs, n, &mut rng);
        let nf: f64 = fns.iter().map(|f| l2_norm(fs, f)).product();
        for k in 0..=n {
            let v = ctx.fully_contracted_element(n, k, &fns).unwrap();
            assert!(v.norm() <= 8.0 * 6f64.sqrt() * na * nf);
        }
    }
}

#[test]
fn guards() {
    let fs = &con_spaces()[0];
    let ctx = ContractionContext::new(fs, &iqft_core::linalg::eye(fock_dim(fs))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fns = random_fns(fs, 4, &mut rng);
    assert!(ctx.fully_contracted_element(4, 2, &fns).is_err());
    assert!(ctx.fully_contracted_commutator(3, 3, &fns[..3]).is_err());
    assert!(ContractionContext::new(fs, &iqft_core::linalg::eye(3)).is_err());
}

#[test]
fn shifted_v_r_is_caught() {
    let reports = iqft_core::combinat::verify_all_lemmas_with(4, &iqft_core::combinat::LemmaHooks { v_r_shift: 1 }).unwrap();
    let right = reports.iter().find(|r| r.lemma == "extension-right").unwrap();
    assert!(right.counterexample.is_some());
    assert!(reports.iter().filter(|r| r.lemma != "extension-right").all(|r| r.passed()));
}
