//! Gauge naturality of the iterated-integral A∞ morphism from
//! `(End V ⊗ Ω(Δ_k), -d, ∧)` to `(End V ⊗ C(Δ_k), δ, ∪)`.

use iterint::chen::ChenConfig;
use iterint::forms::PolyForm;
use iterint::generators::{random_mixed_gauge, random_poly_form};
use iterint::holonomy::{gauge_intertwining_defect, gauge_inverse_defect, gauge_pushforward_defect, psi_series};
use iterint::GradedVectorSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg() -> ChenConfig {
    ChenConfig { max_n: 64, tol: 1e-12, ..ChenConfig::default() }
}

#[test]
fn pushforward_of_gauge_element_is_gauge_element() {
    let v = GradedVectorSpace::concentrated(0, 3);
    for seed in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_mixed_gauge::<f64, _>(&mut rng, 1, &v, 2).unwrap();
        let u = g.maurer_cartan_form().scale(-1.0);
        assert!(psi_series(&u, &cfg()).unwrap().amax() > 1e-2);
        let err = gauge_pushforward_defect(&g, &cfg()).unwrap();
        assert!(err < 1e-6, "seed {seed}: {err:e}");
    }
}

#[test]
fn pushforward_with_graded_fibre() {
    let v = GradedVectorSpace::new([(0, 2), (1, 1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_mixed_gauge::<f64, _>(&mut rng, 1, &v, 2).unwrap();
    assert!(gauge_pushforward_defect(&g, &cfg()).unwrap() < 1e-6);
}

#[test]
fn unit_conditions_give_inverse() {
    let v = GradedVectorSpace::concentrated(0, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = random_mixed_gauge::<f64, _>(&mut rng, 2, &v, 2).unwrap();
    let w = random_poly_form::<f64, _>(&mut rng, 2, &v, 1, 0, 2, 1.0);
    assert!(gauge_inverse_defect(&g, &w, &cfg()).unwrap() < 1e-8);
}

#[test]
fn twisted_morphism_intertwines_conjugations() {
    let v = GradedVectorSpace::concentrated(0, 2);
    for (k, n, seed) in [(1usize, 1usize, 20u64), (1, 2, 21), (2, 1, 22), (2, 2, 23)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_mixed_gauge::<f64, _>(&mut rng, k, &v, 2).unwrap();
        let forms: Vec<PolyForm<f64>> = (0..n)
            .map(|i| random_poly_form::<f64, _>(&mut rng, k, &v, if i == 0 { k } else { 1 }, 0, 2, 1.0))
            .collect();
        let err = gauge_intertwining_defect(&g, &forms, &cfg()).unwrap();
        assert!(err < 1e-8, "k={k} n={n}: {err:e}");
    }
}
