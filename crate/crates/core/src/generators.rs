//! Seeded random inputs: polynomial forms, flat superconnections and gauge
//! transformations. Used by tests, the CLI and benchmarks.

use rand::Rng;

use crate::error::Result;
use crate::forms::{gauge_act, subsets, Domain, GaugeElement, PolyForm, SuperconnectionMC};
use crate::graded::{GradedMap, GradedVectorSpace};
use crate::poly::MatPoly;
use crate::scalar::{Mat, Scalar};

fn uniform<S: Scalar, R: Rng>(rng: &mut R, scale: f64) -> S {
    S::of(rng.random_range(-scale..=scale))
}

fn random_exponent<R: Rng>(rng: &mut R, k: usize, max_deg: u32) -> Vec<u32> {
    let mut e = vec![0u32; k];
    let mut budget = rng.random_range(0..=max_deg);
    while budget > 0 && k > 0 {
        e[rng.random_range(0..k)] += 1;
        budget -= 1;
    }
    e
}

/// Random homogeneous form on `Δ_k`: form degree `p`, endomorphism degree
/// `d`, monomials of total degree at most `max_deg`, coefficients in
/// `[-scale, scale]`.
pub fn random_poly_form<S: Scalar, R: Rng>(
    rng: &mut R,
    k: usize,
    space: &GradedVectorSpace,
    p: usize,
    d: i32,
    max_deg: u32,
    scale: f64,
) -> PolyForm<S> {
    let n = space.total_dim();
    let mut out = PolyForm::zero(Domain::Simplex(k), space);
    for idx in subsets(k, p) {
        let mut coeff = MatPoly::zero(k, n, n);
        for _ in 0..2 {
            let m = Mat::from_fn(n, n, |_, _| uniform::<S, R>(rng, scale));
            let g = GradedMap::from_dense(space, space, d, &m).expect("square");
            coeff.add_term(random_exponent(rng, k, max_deg), g.to_dense());
        }
        let term = PolyForm::from_dense_term(Domain::Simplex(k), space, &idx, d, coeff).expect("well formed");
        out = out.add(&term).expect("same space");
    }
    out
}

/// `a(t) dt` on `Δ_1` with `a` an `n × n` polynomial of degree at most
/// `max_deg`, coefficients in `[-1, 1]`.
pub fn random_connection_1d<S: Scalar, R: Rng>(rng: &mut R, n: usize, max_deg: u32) -> SuperconnectionMC<S> {
    let v = GradedVectorSpace::concentrated(0, n);
    let mut a = MatPoly::zero(1, n, n);
    for e in 0..=max_deg {
        a.add_term(vec![e], Mat::from_fn(n, n, |_, _| uniform::<S, R>(rng, 1.0)));
    }
    let form = PolyForm::from_dense_term(Domain::Simplex(1), &v, &[1], 0, a).expect("degree 0");
    SuperconnectionMC::new(form).expect("1-forms on Δ_1 are flat")
}

/// Degree-1 map with `∂² = 0`: only the block from the lowest degree to the
/// next one is populated.
pub fn random_differential<S: Scalar, R: Rng>(rng: &mut R, space: &GradedVectorSpace, scale: f64) -> GradedMap<S> {
    let degs: Vec<i32> = space.degrees().collect();
    let n = space.total_dim();
    let mut m = Mat::zeros(n, n);
    if let Some(&lo) = degs.first() {
        if space.dim(lo + 1) > 0 {
            let (r0, c0) = (space.offset(lo + 1), space.offset(lo));
            for r in 0..space.dim(lo + 1) {
                for c in 0..space.dim(lo) {
                    m[(r0 + r, c0 + c)] = uniform::<S, R>(rng, scale);
                }
            }
        }
    }
    GradedMap::from_dense(space, space, 1, &m).expect("square")
}

/// `f = D (1 + N)` with `D` constant diagonal and `N` a polynomial strictly
/// upper triangular inside each degree block; the inverse is exact.
pub fn random_gauge<S: Scalar, R: Rng>(
    rng: &mut R,
    k: usize,
    space: &GradedVectorSpace,
    max_deg: u32,
) -> Result<GaugeElement<S>> {
    let n = space.total_dim();
    let dom = Domain::Simplex(k);
    let diag: Vec<S> = (0..n).map(|_| S::of(rng.random_range(0.5..2.0))).collect();
    let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    let dinv = Mat::from_diagonal(&nalgebra::DVector::from_vec(diag.iter().map(|x| S::one() / *x).collect()));
    let mut nil = MatPoly::zero(k, n, n);
    for deg in space.degrees() {
        let off = space.offset(deg);
        for r in 0..space.dim(deg) {
            for c in r + 1..space.dim(deg) {
                let mut m = Mat::zeros(n, n);
                m[(off + r, off + c)] = uniform::<S, R>(rng, 0.5);
                nil.add_term(random_exponent(rng, k, max_deg), m);
            }
        }
    }
    let nform = PolyForm::from_dense_term(dom, space, &[], 0, nil)?;
    let id = PolyForm::identity(dom, space);
    // (1 + N)^{-1} = Σ (-N)^m, finite since N is nilpotent
    let mut inv = id.clone();
    let mut power = id.clone();
    for _ in 1..n.max(1) {
        power = power.wedge(&nform.scale(-S::one()))?;
        inv = inv.add(&power)?;
    }
    let dform = PolyForm::constant_map(dom, &GradedMap::from_dense(space, space, 0, &d)?)?;
    let dinvform = PolyForm::constant_map(dom, &GradedMap::from_dense(space, space, 0, &dinv)?)?;
    let f = dform.wedge(&id.add(&nform)?)?;
    let finv = inv.wedge(&dinvform)?;
    GaugeElement::new(f, finv)
}

/// `g_1 P g_2 P` for two gauges from [`random_gauge`] and the permutation
/// `P` reversing the basis inside each degree; its Maurer-Cartan form is
/// not nilpotent.
pub fn random_mixed_gauge<S: Scalar, R: Rng>(
    rng: &mut R,
    k: usize,
    space: &GradedVectorSpace,
    max_deg: u32,
) -> Result<GaugeElement<S>> {
    let a = random_gauge::<S, R>(rng, k, space, max_deg)?;
    let b = random_gauge::<S, R>(rng, k, space, max_deg)?;
    let n = space.total_dim();
    let mut p = Mat::zeros(n, n);
    for d in space.degrees() {
        let (off, m) = (space.offset(d), space.dim(d));
        for i in 0..m {
            p[(off + i, off + m - 1 - i)] = S::one();
        }
    }
    let pm = GradedMap::from_dense(space, space, 0, &p)?;
    let flip = GaugeElement::constant(Domain::Simplex(k), &pm, &pm)?;
    a.product(&flip)?.product(&b)?.product(&flip)
}

/// Flat superconnection `(∂ + dh · 1) • f` for a random differential `∂`,
/// scalar polynomial `h` and gauge `f`.
pub fn random_flat<S: Scalar, R: Rng>(
    rng: &mut R,
    k: usize,
    space: &GradedVectorSpace,
    max_deg: u32,
    scale: f64,
) -> Result<SuperconnectionMC<S>> {
    let n = space.total_dim();
    let dom = Domain::Simplex(k);
    let del = random_differential::<S, R>(rng, space, scale);
    let mut h = MatPoly::zero(k, n, n);
    for _ in 0..3 {
        let c = uniform::<S, R>(rng, scale);
        h.add_term(random_exponent(rng, k, max_deg.max(1)), Mat::identity(n, n) * c);
    }
    let base = PolyForm::constant_map(dom, &del)?
        .add(&PolyForm::from_dense_term(dom, space, &[], 0, h)?.exterior_derivative())?;
    let omega = SuperconnectionMC::new(base)?;
    let g = random_gauge::<S, R>(rng, k, space, max_deg)?;
    gauge_act(&omega, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::mc_residual;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_generators_are_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in [
            GradedVectorSpace::concentrated(0, 2),
            GradedVectorSpace::new([(0, 1), (1, 1)]).unwrap(),
            GradedVectorSpace::new([(0, 2), (1, 1)]).unwrap(),
        ] {
            for k in 1..=3 {
                let w = random_flat::<f64, _>(&mut rng, k, &space, 2, 0.5).unwrap();
                assert!(mc_residual(w.form()) < 1e-12);
            }
        }
    }

    #[test]
    fn gauges_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let space = GradedVectorSpace::new([(0, 3), (1, 2)]).unwrap();
        let g = random_gauge::<f64, _>(&mut rng, 2, &space, 2).unwrap();
        let p = [0.7, 0.2];
        let prod = g.at(&p).unwrap() * g.inverse().evaluate(&p).unwrap()[&0].clone();
        assert!((prod - Mat::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn forms_have_requested_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let space = GradedVectorSpace::new([(0, 1), (1, 1)]).unwrap();
        let f = random_poly_form::<f64, _>(&mut rng, 3, &space, 2, -1, 2, 1.0);
        assert_eq!(f.total_degree(), Some(1));
        let c = random_connection_1d::<f64, _>(&mut rng, 3, 2);
        assert_eq!(c.form().dim(), 3);
    }
}
