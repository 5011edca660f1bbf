//! Seeded numerical suites. Each returns checks with fixed names so that
//! reports are comparable across runs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use iterint::ainfty::{
    nilpotent_automorphism, random_homogeneous, tensor_with_algebra, AInftyMorphism, Dga, EndLayout,
    ResidualOptions, Vector,
};
use iterint::chen::{psi_n_eval, series_dense, ChenConfig};
use iterint::forms::{gauge_act, mask_of, subsets, Domain, PolyForm, SuperconnectionMC};
use iterint::generators::{
    random_connection_1d, random_differential, random_flat, random_mixed_gauge, random_poly_form,
};
use iterint::graded::op_norm;
use iterint::holonomy::{
    functor_residual, gauge_intertwining_defect, gauge_inverse_defect, gauge_pushforward_defect, hol_object,
    integrate_rep, FormValuedComplex, LinkForm, MorphismChainDatum,
};
use iterint::oracles::{brute_simplex_integral, parallel_transport_ode, TransportProblem};
use iterint::poly::MatPoly;
use iterint::scalar::sgn_s;
use iterint::simplex::{back_face, degeneracy_map, front_face, mu_concat, theta_path, PathFn};
use iterint::simplicial::{twisted_cohomology, unitality_check, FiniteSimplicialSet, SimplicialRep};
use iterint::verify::psi_bar_ainfty_residual;
use iterint::{GradedMap, GradedVectorSpace, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{Check, CheckClass, Settings};
use crate::CliError;

use CheckClass::{Accuracy, Invariant};

fn rng(settings: &Settings, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(settings.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn two_term() -> GradedVectorSpace {
    GradedVectorSpace::new([(0, 1), (1, 1)]).expect("valid")
}

/// Runs `f`, turning an error into a failed check of the given name.
fn guarded(name: &str, f: impl FnOnce() -> Result<Check, CliError>) -> Check {
    f().unwrap_or_else(|e| Check::errored(name, &e))
}

fn transport_defect(w: &SuperconnectionMC<f64>, h: &Mat<f64>) -> Result<f64, CliError> {
    let ode = parallel_transport_ode(&TransportProblem::from_connection(w.form())?, 256)?;
    Ok(op_norm(&(h - ode.value)))
}

/// Random polynomial connections on an edge against the ODE oracle.
pub fn transport(settings: &Settings) -> Vec<Check> {
    let cfg = settings.chen();
    let mut r = rng(settings, 1);
    let mut worst = 0.0f64;
    let mut out = Vec::new();
    for i in 0..10 {
        let n = if i < 5 { 2 } else { 3 };
        let w = random_connection_1d::<f64, _>(&mut r, n, 2);
        let c = guarded("transport.ode", || {
            let h = hol_object(&w, &cfg)?.to_dense();
            Ok(Check::at_most("transport.ode", transport_defect(&w, &h)?, 1e-6, Accuracy))
        });
        if c.passed {
            worst = worst.max(c.value);
        } else {
            out.push(c.with_note(format!("connection {i}")));
        }
    }
    if out.is_empty() {
        out.push(Check::at_most("transport.ode", worst, 1e-6, Accuracy).with_note("10 connections, op norm"));
    }
    out
}

/// `[[0,1],[0,0]] dt` integrates to `[[1,1],[0,1]]`.
pub fn constant_connection(settings: &Settings) -> Vec<Check> {
    let name = "constant.nilpotent";
    vec![guarded(name, || {
        let v = GradedVectorSpace::concentrated(0, 2);
        let a = MatPoly::constant(1, Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let w = SuperconnectionMC::new(PolyForm::from_dense_term(Domain::Simplex(1), &v, &[1], 0, a)?)?;
        let h = hol_object(&w, &settings.chen())?.to_dense();
        let want = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        Ok(Check::at_most(name, (h - want).amax(), 1e-9, Accuracy))
    })]
}

/// Degenerate pullbacks of edge connections to triangles.
pub fn degenerate_vanishing(settings: &Settings) -> Vec<Check> {
    let name = "degenerate.components";
    let cfg = settings.chen();
    let mut r = rng(settings, 3);
    vec![guarded(name, || {
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let w = random_connection_1d::<f64, _>(&mut r, 2, 2);
            for i in 1..=2 {
                let pb = w.form().pullback_affine(&degeneracy_map(i, 2)?)?;
                for c in series_dense(&pb, &cfg)?.components {
                    worst = worst.max(c.amax());
                }
            }
        }
        Ok(Check::at_most(name, worst, 1e-6, Invariant).with_note("10 connections, both degeneracies"))
    })]
}

/// `Hol(ω • f) = f(v_0)^{-1} Hol(ω) f(v_k)` on edges and triangles.
pub fn gauge_equivariance(settings: &Settings) -> Vec<Check> {
    let cfg = settings.chen();
    let mut r = rng(settings, 4);
    let v = GradedVectorSpace::new([(0, 2), (1, 1)]).expect("valid");
    let mut out = Vec::new();
    for k in 1..=2usize {
        let name = format!("gauge.simplex{k}");
        out.push(guarded(&name, || {
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let w = random_flat::<f64, _>(&mut r, k, &v, 1, 0.5)?;
                let g = random_mixed_gauge::<f64, _>(&mut r, k, &v, 1)?;
                let lhs = hol_object(&gauge_act(&w, &g)?, &cfg)?.to_dense();
                let h = hol_object(&w, &cfg)?.to_dense();
                let f0 = g.at(&vec![0.0; k])?;
                let f0inv = f0
                    .try_inverse()
                    .ok_or_else(|| CliError::Invariant("gauge not invertible at v_0".into()))?;
                let rhs = f0inv * h * g.at(&vec![1.0; k])?;
                worst = worst.max((lhs - rhs).amax());
            }
            Ok(Check::at_most(name.clone(), worst, 1e-6, Invariant).with_note("5 pairs"))
        }));
    }
    out
}

/// Structure equations and unitality of an integrated representation.
pub fn rep_checks(prefix: &str, rep: &SimplicialRep<f64>) -> Vec<Check> {
    let (unital, defect) = unitality_check(rep);
    let mut u = Check::at_most(format!("{prefix}unitality"), defect, 0.0, Invariant);
    u.passed = unital;
    vec![Check::at_most(format!("{prefix}structure"), rep.structure_residual(), 1e-5, Invariant), u]
}

fn random_simplices(r: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<Vec<f64>>> {
    let verts = [vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let mut out = Vec::new();
    if dim == 2 {
        out.push(verts.to_vec());
    } else {
        for a in 0..3 {
            for b in a + 1..3 {
                out.push(vec![verts[a].clone(), verts[b].clone()]);
            }
        }
    }
    let mut extra = Vec::new();
    for _ in 0..=dim {
        let mut p = vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        p.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        extra.push(p);
    }
    out.push(extra);
    out
}

/// Words `(form degree, endomorphism degree)` of length at most three whose
/// relation lives on an edge or a triangle.
const WORDS: &[&[(usize, i32)]] = &[
    &[(1, 0)],
    &[(2, -1)],
    &[(0, 1), (1, 0)],
    &[(1, 0), (1, 0)],
    &[(1, 1), (1, -1)],
    &[(0, 1), (2, -1)],
    &[(2, -1), (0, 1)],
    &[(0, -1), (2, 0)],
    &[(1, 0), (1, 0), (1, -1)],
    &[(1, 1), (1, -1), (1, -1)],
    &[(2, -1), (0, 1), (1, 0)],
    &[(1, 0), (0, 1), (1, -1)],
];

/// A∞ morphism equations of the sign-twisted iterated integrals on random
/// forms over the triangle.
pub fn psi_bar_relations(settings: &Settings) -> Vec<Check> {
    let name = "psi_bar.relations";
    let cfg = ChenConfig { tol: settings.tol.min(1e-10), ..settings.chen() };
    let mut r = rng(settings, 6);
    let v = two_term();
    vec![guarded(name, || {
        let mut worst = 0.0f64;
        for word in WORDS {
            let forms: Vec<_> = word
                .iter()
                .map(|&(p, d)| random_poly_form::<f64, _>(&mut r, 2, &v, p, d, 2, 1.0))
                .collect();
            let dim = word.iter().map(|&(p, _)| p as i32 - 1).sum::<i32>() + 2;
            let s = random_simplices(&mut r, dim as usize);
            worst = worst.max(psi_bar_ainfty_residual(&forms, &s, &cfg)?);
        }
        Ok(Check::at_most(name, worst, 1e-6, Invariant).with_note(format!("{} words", WORDS.len())))
    })]
}

fn random_link(r: &mut ChaCha8Rng, k: usize, v: &GradedVectorSpace, total: i32) -> Result<LinkForm<f64>, CliError> {
    let mut l = LinkForm::zero(k, v, v);
    let n = v.total_dim();
    for p in 0..=k {
        let d = total - p as i32;
        for idx in subsets(k, p) {
            let mut q = MatPoly::zero(k, n, n);
            for e in [vec![0; k], (0..k).map(|i| (i % 2) as u32).collect::<Vec<u32>>()] {
                let m = Mat::from_fn(n, n, |_, _| r.random_range(-0.5..0.5));
                q.add_term(e, GradedMap::from_dense(v, v, d, &m)?.to_dense());
            }
            l.add_term(&idx, d, q)?;
        }
    }
    Ok(l)
}

/// Functor equations for chains of morphisms between flat superconnections.
pub fn functor_equations(settings: &Settings) -> Vec<Check> {
    let cfg = settings.chen();
    let mut r = rng(settings, 7);
    let v = two_term();
    let mut out = Vec::new();
    for k in 1..=2usize {
        let name = format!("functor.simplex{k}");
        out.push(guarded(&name, || {
            let mut worst = 0.0f64;
            for n in 1..=2usize {
                for total in 0..=2 {
                    let reps = (0..=n)
                        .map(|_| random_flat::<f64, _>(&mut r, k, &v, 1, 0.4))
                        .collect::<Result<Vec<_>, _>>()?;
                    let links = (0..n).map(|_| random_link(&mut r, k, &v, total)).collect::<Result<Vec<_>, _>>()?;
                    let d = MorphismChainDatum::new(reps, links)?;
                    worst = worst.max(functor_residual(&d, &cfg)?);
                }
            }
            Ok(Check::at_most(name.clone(), worst, 1e-5, Invariant).with_note("chains of length 1 and 2"))
        }));
    }
    out
}

/// Ordered iterated integral of 1-forms along a path, linear on
/// `[0, 1/2]` and `[1/2, 1]`, by nested Gauss rules.
struct PathIntegral<'a> {
    forms: &'a [PolyForm<f64>],
    path: PathFn<'a, f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl PathIntegral<'_> {
    fn velocity(&self, t: f64) -> Vec<f64> {
        let (a, b) = if t <= 0.5 { (0.0, 0.5) } else { (0.5, 1.0) };
        let (pa, pb) = ((self.path)(a), (self.path)(b));
        pa.iter().zip(&pb).map(|(x, y)| (y - x) / (b - a)).collect()
    }

    fn integrand(&self, m: usize, t: f64) -> Result<Mat<f64>, CliError> {
        let vals = self.forms[m].evaluate(&(self.path)(t))?;
        let vel = self.velocity(t);
        let mut out = Mat::zeros(self.dim, self.dim);
        for (i, v) in vel.iter().enumerate() {
            if let Some(c) = vals.get(&mask_of(&[i + 1])) {
                out += c * *v;
            }
        }
        Ok(out)
    }

    /// `∫_{upper ≥ t_m ≥ … ≥ t_n ≥ 0} ω_m(t_m) ⋯ ω_n(t_n)`.
    fn tail(&self, m: usize, upper: f64) -> Result<Mat<f64>, CliError> {
        if m == self.forms.len() {
            return Ok(Mat::identity(self.dim, self.dim));
        }
        let pieces: Vec<(f64, f64)> = if upper > 0.5 { vec![(0.0, 0.5), (0.5, upper)] } else { vec![(0.0, upper)] };
        let mut acc = Mat::zeros(self.dim, self.dim);
        for (a, b) in pieces {
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let t = a + (b - a) * x;
                acc += self.integrand(m, t)? * self.tail(m + 1, t)? * (w * (b - a));
            }
        }
        Ok(acc)
    }
}

/// Chen's factorization along the concatenated path `μ_1(Θ_(1), Θ_(1))` in
/// the triangle: the direct integral against the sum over splittings of
/// products of edge integrals of the back and front pullbacks.
pub fn factorization(settings: &Settings) -> Vec<Check> {
    let name = "factorization.k2_i1";
    let cfg = settings.chen();
    let mut r = rng(settings, 8);
    let v = GradedVectorSpace::concentrated(0, 2);
    vec![guarded(name, || {
        let (nodes, weights) = iterint::quad::gauss_legendre(10);
        let back = back_face::<f64>(1, 2)?;
        let front = front_face::<f64>(1, 2)?;
        let mut worst = 0.0f64;
        for trial in 0..10 {
            let n = 1 + trial % 3;
            let forms: Vec<_> = (0..n).map(|_| random_poly_form::<f64, _>(&mut r, 2, &v, 1, 0, 2, 1.0)).collect();
            let theta = || -> PathFn<'static, f64> { Box::new(|t| theta_path(1, &[], t).expect("t in [0,1]").t) };
            let path = mu_concat(1, 2, theta(), theta())?;
            let direct = PathIntegral { forms: &forms, path, nodes: nodes.clone(), weights: weights.clone(), dim: 2 }
                .tail(0, 1.0)?;
            let on_back: Vec<_> = forms.iter().map(|f| f.pullback_affine(&back)).collect::<Result<_, _>>()?;
            let on_front: Vec<_> = forms.iter().map(|f| f.pullback_affine(&front)).collect::<Result<_, _>>()?;
            let word = |fs: &[PolyForm<f64>]| -> Result<Mat<f64>, CliError> {
                if fs.is_empty() {
                    Ok(Mat::identity(2, 2))
                } else {
                    Ok(psi_n_eval(fs, &cfg)?.matrix)
                }
            };
            let mut split = Mat::zeros(2, 2);
            for j in 0..=n {
                split += word(&on_back[..j])? * word(&on_front[j..])?;
            }
            worst = worst.max((direct - split).amax());
        }
        Ok(Check::at_most(name, worst, 1e-6, Invariant).with_note("10 words of length 1 to 3"))
    })]
}

fn vol_term(c: f64) -> Result<PolyForm<f64>, CliError> {
    let v = two_term();
    let phi = GradedMap::from_dense(&v, &v, -1, &Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]))?;
    Ok(PolyForm::from_graded_term(Domain::Simplex(2), &v, &[1, 2], -1, &[(vec![0, 0], phi.scale(c))])?)
}

/// Orientation of an octahedron face relative to the outward normal.
pub fn octahedron_orientation(s: &[usize]) -> f64 {
    let flips = [s[0] == 0, s[1] == 2, s[2] == 4].iter().filter(|b| !**b).count();
    if flips % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The octahedral sphere with `ε_σ c φ dt_1 ∧ dt_2` on each face, fibre
/// `ℝ ⊕ ℝ[-1]`.
pub fn sphere_complex(c: f64) -> Result<FormValuedComplex<f64>, CliError> {
    let set = FiniteSimplicialSet::octahedron();
    let mut top = BTreeMap::new();
    for s in set.simplices(2) {
        top.insert(s.clone(), SuperconnectionMC::new(vol_term(octahedron_orientation(s) * c)?)?);
    }
    Ok(FormValuedComplex::from_top_forms(set, vec![two_term(); 6], top)?)
}

/// Mass, twisted cohomology and untwisted control on the sphere.
pub fn sphere(settings: &Settings) -> Result<(Vec<Check>, SimplicialRep<f64>, Vec<usize>), CliError> {
    let cfg = settings.chen();
    // F_2 = -(c/2) φ per face, so c = π gives total mass 4π
    let x = sphere_complex(PI)?;
    let rep = integrate_rep(&x, &cfg)?;
    let mut checks = rep_checks("sphere.", &rep);
    let (mut mass, mut brute) = (0.0, 0.0);
    for s in x.set().simplices(2) {
        mass += rep.value(s).to_dense()[(0, 1)].abs();
        let form = x.form(s).ok_or_else(|| CliError::Invariant(format!("no form on {s:?}")))?;
        brute += brute_simplex_integral(form.form())?[(0, 1)].abs();
    }
    checks.push(Check::at_most("sphere.mass_vs_brute", (mass - brute).abs() / brute, 1e-3, Accuracy));
    checks.push(Check::at_most("sphere.mass_vs_4pi", (mass - 4.0 * PI).abs() / (4.0 * PI), 1e-3, Accuracy));
    let betti = twisted_cohomology(&rep, 3)?.betti_in(0, 3);
    let want = [1usize, 0, 0, 1];
    let mismatch = betti.iter().zip(want).filter(|(a, b)| **a != *b).count();
    checks.push(
        Check::new("sphere.betti_twisted", mismatch as f64, crate::report::Relation::Equal, 0.0, Invariant)
            .with_note(format!("got {betti:?}, want {want:?}")),
    );
    let plain = integrate_rep(&sphere_complex(0.0)?, &cfg)?;
    let h2 = twisted_cohomology(&plain, 3)?.betti_in(2, 2)[0];
    checks.push(Check::new("sphere.h2_untwisted", h2 as f64, crate::report::Relation::AtLeast, 1.0, Invariant));
    Ok((checks, rep, betti))
}

/// `∫_{I^k} Θ_k^* α = (-1)^k ∫_{Δ_k} α` for top forms.
pub fn theta_degree(settings: &Settings) -> Vec<Check> {
    let cfg = settings.chen();
    let mut r = rng(settings, 10);
    let v = GradedVectorSpace::concentrated(0, 1);
    let mut out = Vec::new();
    for k in 1..=3usize {
        let name = format!("theta_degree.k{k}");
        out.push(guarded(&name, || {
            let mut worst = 0.0f64;
            for _ in 0..5 {
                let f = random_poly_form::<f64, _>(&mut r, k, &v, k, 0, 2, 1.0);
                let lhs = psi_n_eval(std::slice::from_ref(&f), &cfg)?.matrix;
                let rhs = brute_simplex_integral(&f)? * sgn_s::<f64>(k as i64);
                worst = worst.max((lhs - rhs).amax());
            }
            Ok(Check::at_most(name.clone(), worst, 1e-6, Accuracy).with_note("5 top forms"))
        }));
    }
    out
}

/// Degree-0 bundles: higher components vanish, edges are transports.
pub fn ordinary_reps(settings: &Settings) -> Vec<Check> {
    let cfg = settings.chen();
    let mut r = rng(settings, 11);
    let v = GradedVectorSpace::concentrated(0, 2);
    let mut out = Vec::new();
    for k in 2..=3usize {
        let built = (|| -> Result<(FormValuedComplex<f64>, SimplicialRep<f64>), CliError> {
            let set = FiniteSimplicialSet::standard(k);
            let w = random_flat::<f64, _>(&mut r, k, &v, 1, 0.5)?;
            let top = BTreeMap::from([((0..=k).collect::<Vec<_>>(), w)]);
            let x = FormValuedComplex::from_top_forms(set, vec![v.clone(); k + 1], top)?;
            let rep = integrate_rep(&x, &cfg)?;
            Ok((x, rep))
        })();
        let (x, rep) = match built {
            Ok(p) => p,
            Err(e) => {
                out.push(Check::errored(format!("ordinary.simplex{k}"), &e));
                continue;
            }
        };
        let mut higher = 0.0f64;
        for j in 2..=k {
            for s in x.set().simplices(j) {
                higher = higher.max(rep.value(s).to_dense().amax());
            }
        }
        out.push(Check::new(format!("ordinary.simplex{k}.higher"), higher, crate::report::Relation::Equal, 0.0, Invariant));
        let name = format!("ordinary.simplex{k}.edges");
        out.push(guarded(&name, || {
            let mut worst = 0.0f64;
            for e in x.set().simplices(1) {
                let w = x.form(e).ok_or_else(|| CliError::Invariant(format!("no form on {e:?}")))?;
                worst = worst.max(transport_defect(w, &rep.value(e).to_dense())?);
            }
            Ok(Check::at_most(name.clone(), worst, 1e-6, Accuracy))
        }));
    }
    out
}

/// `End(V)` with `d a = [∂, a]` for a random `∂`, returned alongside.
fn end_dga(v: &GradedVectorSpace, r: &mut ChaCha8Rng) -> Result<(Dga<f64>, Mat<f64>), CliError> {
    let del = random_differential::<f64, _>(r, v, 1.0);
    Ok((Dga::endomorphisms(v, Some(&del))?, del.to_dense()))
}

/// Structure, morphism, twisting and tensor relations for A∞ data built
/// from nilpotent deformations, plus gauge identities of the iterated
/// integral morphism.
pub fn algebraic(settings: &Settings) -> Vec<Check> {
    let mut out = Vec::new();
    let opts = ResidualOptions { trials: 4, seed: settings.seed, max_arity: Some(5) };
    let mut r = rng(settings, 12);
    let v2 = two_term();
    let v3 = GradedVectorSpace::new([(0, 1), (1, 1), (2, 1)]).expect("valid");
    out.push(guarded("ainfty.structure", || {
        let mut worst = 0.0f64;
        for v in [&v2, &v3] {
            let (a, _) = end_dga(v, &mut r)?;
            worst = worst.max(a.to_ainfty().structure_residual(&opts));
            let (t, _) = Dga::tensor(&a, &Dga::truncated_polynomials(3)?)?;
            worst = worst.max(t.to_ainfty().structure_residual(&opts));
        }
        Ok(Check::at_most("ainfty.structure", worst, 1e-10, Invariant))
    }));
    let setup = (|| -> Result<_, CliError> {
        let (base, del) = end_dga(&v2, &mut r)?;
        let (a, layout, psi) = nilpotent_automorphism(&mut r, &base, 2)?;
        let (_, _, chi) = nilpotent_automorphism(&mut r, &base, 2)?;
        Ok((del, a, layout, psi, chi))
    })();
    let (dm, a, layout, psi, chi) = match setup {
        Ok(s) => s,
        Err(e) => {
            out.push(Check::errored("ainfty.setup", &e));
            return out;
        }
    };
    let alg = a.to_ainfty();
    out.push(guarded("ainfty.morphism", || {
        let both = AInftyMorphism::compose(&chi, &psi)?;
        let worst = psi.residual(&alg, &alg, &opts)?.max(both.residual(&alg, &alg, &opts)?);
        // a morphism with a vanishing quadratic part would make this vacuous
        let mut size = 0.0f64;
        let mut q = rng(settings, 13);
        for _ in 0..4 {
            let x = [random_homogeneous(&mut q, a.space()), random_homogeneous(&mut q, a.space())];
            size = size.max(psi.psi(&x)?.amax());
        }
        let c = Check::at_most("ainfty.morphism", worst, 1e-10, Invariant);
        Ok(if size > 1e-3 {
            c
        } else {
            let mut c = c.with_note("quadratic component vanished");
            c.passed = false;
            c
        })
    }));
    out.push(guarded("ainfty.twist", || {
        // x = c∂ ⊗ 1 + s∂ ⊗ ε: (1 + c)∂ squares to zero and ∂ commutes with it
        let bl = EndLayout::new(&v2)?;
        let c = r.random_range(-1.5..1.5);
        let s = r.random_range(-1.0..1.0);
        let one = Vector::from_vec(vec![1.0, 0.0]);
        let eps = Vector::from_vec(vec![0.0, 1.0]);
        let x = layout.pure(&bl.to_vector(&(&dm * c)), &one) + layout.pure(&bl.to_vector(&(&dm * s)), &eps);
        let mut worst = alg.mc_residual(&x)?;
        let y = psi.mc_pushforward(&x, None)?;
        worst = worst.max(alg.mc_residual(&y)?);
        let tx = alg.twist(&x, None)?;
        let ty = alg.twist(&y, None)?;
        worst = worst.max(tx.structure_residual(&opts));
        worst = worst.max(psi.twist(&x, None)?.residual(&tx, &ty, &opts)?);
        Ok(Check::at_most("ainfty.twist", worst, 1e-10, Invariant))
    }));
    out.push(guarded("ainfty.tensor", || {
        let e = Dga::endomorphisms(&v2, None)?;
        let t = tensor_with_algebra(&e, &a, &a, &psi)?;
        let worst = t.morphism.residual(&t.source.to_ainfty(), &t.target.to_ainfty(), &opts)?;
        Ok(Check::at_most("ainfty.tensor", worst, 1e-10, Invariant))
    }));
    out.extend(gauge_identities(settings));
    out
}

/// Unit, pushforward and intertwining identities for gauge elements.
pub fn gauge_identities(settings: &Settings) -> Vec<Check> {
    let cfg = ChenConfig { max_n: settings.max_n.max(128), tol: settings.tol.min(1e-12), ..settings.chen() };
    let mut out = Vec::new();
    let v = GradedVectorSpace::concentrated(0, 3);
    let mut r = rng(settings, 14);
    out.push(guarded("gauge.inverse", || {
        let g = random_mixed_gauge::<f64, _>(&mut r, 2, &v, 2)?;
        let w = random_poly_form::<f64, _>(&mut r, 2, &v, 1, 0, 2, 1.0);
        Ok(Check::at_most("gauge.inverse", gauge_inverse_defect(&g, &w, &cfg)?, 1e-8, Invariant))
    }));
    out.push(guarded("gauge.pushforward", || {
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let g = random_mixed_gauge::<f64, _>(&mut r, 1, &v, 2)?;
            worst = worst.max(gauge_pushforward_defect(&g, &cfg)?);
        }
        Ok(Check::at_most("gauge.pushforward", worst, 1e-8, Invariant))
    }));
    let v2 = GradedVectorSpace::concentrated(0, 2);
    out.push(guarded("gauge.intertwining", || {
        let mut worst = 0.0f64;
        for (k, n) in [(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
            let g = random_mixed_gauge::<f64, _>(&mut r, k, &v2, 2)?;
            let forms: Vec<PolyForm<f64>> = (0..n)
                .map(|i| random_poly_form::<f64, _>(&mut r, k, &v2, if i == 0 { k } else { 1 }, 0, 2, 0.5))
                .collect();
            worst = worst.max(gauge_intertwining_defect(&g, &forms, &cfg)?);
        }
        Ok(Check::at_most("gauge.intertwining", worst, 1e-8, Invariant))
    }));
    out
}
