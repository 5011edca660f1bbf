//! Iterated integrals along the cube families `Θ_(k)` and the maps `ψ_n`,
//! `ψ̄_n` evaluated on the fundamental simplex.
//!
//! For a word `a_1 … a_n` of forms on `Δ_k` the value is
//! `∫_{Δ_n × I^{k-1}} F(t_1, …, t_n, x)` where `F` is the top coefficient
//! produced by [`chen_integrand`]. The `t`-integrals are computed by dynamic
//! programming over nested antiderivatives on composite Gauss panels cut at
//! the path breakpoints; the `x`-integral by Gauss rules on the sectors where
//! the family is smooth.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{mask_indices, mask_len, subsets, wedge_mask_sign, Domain, Mask, PolyForm, SuperconnectionMC};
use crate::graded::{op_norm, GradedMap, GradedVectorSpace};
use crate::poly::MatPoly;
use crate::quad::{gauss_legendre, Panel};
use crate::scalar::{max_abs, sgn_s, Mat, Scalar};
use crate::simplex::{theta_branch, theta_breakpoints, theta_jacobian};

/// Numerical settings for iterated integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct ChenConfig {
    pub max_n: usize,
    pub tol: f64,
    pub quad_order: usize,
    pub subdivide_t: bool,
    pub jitter_seed: u64,
    /// Number of panel/sector halvings tried before giving up.
    pub max_refinements: usize,
}

impl Default for ChenConfig {
    fn default() -> Self {
        Self {
            max_n: 8,
            tol: 1e-8,
            quad_order: 8,
            subdivide_t: true,
            jitter_seed: 0x5eed,
            max_refinements: 5,
        }
    }
}

impl ChenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::Domain("max_n must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Domain("tol must be positive".into()));
        }
        if self.quad_order < 2 {
            return Err(Error::Domain("quad_order must be at least 2".into()));
        }
        Ok(())
    }
}

/// Value of a cochain on the fundamental simplex, as a dense endomorphism of
/// the value space.
#[derive(Debug, Clone, PartialEq)]
pub struct CochainValue<S: Scalar> {
    pub k: usize,
    pub space: GradedVectorSpace,
    pub matrix: Mat<S>,
    /// Difference between the last two refinement levels.
    pub error_estimate: f64,
}

impl<S: Scalar> CochainValue<S> {
    /// The degree-`degree` part as a graded map.
    pub fn graded(&self, degree: i32) -> GradedMap<S> {
        GradedMap::from_dense(&self.space, &self.space, degree, &self.matrix)
            .expect("square matrix on the value space")
    }
}

pub mod signs {
    //! Every sign of the pipeline lives here.
    use super::*;

    /// Sign picked up when a factor carrying `dt ∧ dx_S` with the given
    /// suspended degree `|S|` is put in front of later factors that carry
    /// `dx_T` and endomorphisms of total parity `later_odd`: the reordering
    /// `dx_S ∧ dx_T` and the tensor sign `(-1)^{[a](|e_{i+1}|+…)}`.
    pub fn prepend_sign<S: Scalar>(s: Mask, t: Mask, later_odd: bool) -> Option<S> {
        let reorder = wedge_mask_sign(s, t)?;
        let tensor = if later_odd { mask_len(s) as i64 } else { 0 };
        Some(S::of(reorder as f64) * sgn_s(tensor))
    }

    /// `ψ̄_n = (-1)^{k(k-1)/2 + k + n - 1} ψ_n` on `k`-simplices.
    pub fn psi_bar_sign<S: Scalar>(k: usize, n: usize) -> S {
        sgn_s((k * k.saturating_sub(1) / 2 + k + n) as i64 - 1)
    }
}

/// Tail bound `Σ_{m>n} C^m/m!`, infinite while `n + 2 ≤ C`.
pub fn tail_bound(c: f64, n: usize) -> f64 {
    let next = (n + 2) as f64;
    if c <= 0.0 {
        return 0.0;
    }
    if c >= next {
        return f64::INFINITY;
    }
    let mut term = 1.0;
    for m in 1..=n + 1 {
        term *= c / m as f64;
    }
    term / (1.0 - c / next)
}

/// Sup bound of every factor's integrand contribution: coefficient operator
/// norms times a Hadamard bound for the Jacobian minors, summed over the
/// `x`-patterns a form-degree-`p` term can use.
pub fn integrand_bound<S: Scalar>(form: &PolyForm<S>, k: usize) -> f64 {
    let mut c = 0.0;
    for ((mask, _), p) in form.terms() {
        let deg = mask_len(*mask);
        if deg == 0 {
            continue;
        }
        let coeff: f64 = p.terms.values().map(|m| op_norm(m).f64()).sum();
        let minor = (k as f64).powf((deg as f64 + 1.0) / 2.0);
        let patterns = binomial(k.saturating_sub(1), deg - 1) as f64;
        c += coeff * minor * patterns;
    }
    c
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Form-degree-`p ≥ 1` terms of one form with the `x`-patterns they feed.
struct Prepared<S: Scalar> {
    terms: Vec<PreparedTerm<S>>,
}

struct PreparedTerm<S: Scalar> {
    rows: Vec<usize>,
    odd: bool,
    poly: MatPoly<S>,
    /// `(S as mask, columns t, x_S of the Jacobian)`.
    patterns: Vec<(Mask, Vec<usize>)>,
}

impl<S: Scalar> Prepared<S> {
    fn new(form: &PolyForm<S>, k: usize) -> Self {
        let mut terms = Vec::new();
        for ((mask, d), p) in form.terms() {
            let deg = mask_len(*mask);
            if deg == 0 || deg > k {
                continue;
            }
            let patterns = subsets(k.saturating_sub(1), deg - 1)
                .into_iter()
                .map(|s| {
                    let m = s.iter().fold(0, |acc, &l| acc | (1 << (l - 1)));
                    let mut cols = vec![0];
                    cols.extend(s);
                    (m, cols)
                })
                .collect();
            terms.push(PreparedTerm {
                rows: mask_indices(*mask).into_iter().map(|i| i - 1).collect(),
                odd: d.rem_euclid(2) == 1,
                poly: p.clone(),
                patterns,
            });
        }
        Self { terms }
    }

    /// Pulled-back coefficients of `dt ∧ dx_S` at one point, grouped by
    /// `(S, parity of the endomorphism degree)`.
    fn sample(&self, point: &[S], jac: &Mat<S>, out: &mut BTreeMap<(Mask, bool), Mat<S>>) {
        for term in &self.terms {
            let mut value: Option<Mat<S>> = None;
            for (smask, cols) in &term.patterns {
                let r = term.rows.len();
                let minor = if r == 1 {
                    jac[(term.rows[0], cols[0])]
                } else {
                    Mat::from_fn(r, r, |a, b| jac[(term.rows[a], cols[b])]).determinant()
                };
                if minor == S::zero() {
                    continue;
                }
                let v = value.get_or_insert_with(|| term.poly.eval(point));
                let contrib = &*v * minor;
                out.entry((*smask, term.odd))
                    .and_modify(|m| *m += &contrib)
                    .or_insert(contrib);
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Composite Gauss grid in `t` for one cube point.
struct TGrid<S: Scalar> {
    /// Panel start and width, in order.
    panels: Vec<(S, S)>,
    q: usize,
}

impl<S: Scalar> TGrid<S> {
    fn new(k: usize, x: &[S], subdivide: bool, refine: usize) -> Self {
        let cuts = if subdivide && k > 1 {
            theta_breakpoints(k, x)
        } else {
            vec![S::zero(), S::one()]
        };
        let r = 1usize << refine;
        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            if len <= S::EPS * S::of(64.0) {
                continue;
            }
            let h = len / S::of_usize(r);
            for i in 0..r {
                panels.push((w[0] + h * S::of_usize(i), h));
            }
        }
        Self { panels, q: 0 }
    }
}

/// Numerical state of one cube point: grid, geometry at every node, and the
/// sampled pulled-back coefficients of every distinct form.
struct Node<S: Scalar> {
    grid: TGrid<S>,
    samples: Vec<BTreeMap<(Mask, bool), Vec<Mat<S>>>>,
}

fn build_node<S: Scalar>(
    k: usize,
    x: &[S],
    forms: &[Prepared<S>],
    panel: &Panel<S>,
    dim: usize,
    cfg: &ChenConfig,
    refine: usize,
) -> Node<S> {
    let mut grid = TGrid::new(k, x, cfg.subdivide_t, refine);
    grid.q = panel.order();
    let nnodes = grid.panels.len() * grid.q;
    let mut samples: Vec<BTreeMap<(Mask, bool), Vec<Mat<S>>>> = vec![BTreeMap::new(); forms.len()];
    let half = S::of(0.5);
    for (p, &(a, h)) in grid.panels.iter().enumerate() {
        let branch = theta_branch(k, x, a + h * half);
        for (i, &u) in panel.nodes.iter().enumerate() {
            let t = a + h * u;
            let (point, jac) = branch.eval(x, t);
            let idx = p * grid.q + i;
            for (f, prep) in forms.iter().enumerate() {
                let mut local = BTreeMap::new();
                prep.sample(&point, &jac, &mut local);
                for (key, m) in local {
                    samples[f]
                        .entry(key)
                        .or_insert_with(|| vec![Mat::zeros(dim, dim); nnodes])[idx] = m;
                }
            }
        }
    }
    Node { grid, samples }
}

type State<S> = BTreeMap<(Mask, bool), (Vec<Mat<S>>, Mat<S>)>;

/// One dynamic-programming step: prepend the factor `form` (index into the
/// node samples) to every partial word.
fn prepend<S: Scalar>(node: &Node<S>, panel: &Panel<S>, form: usize, old: &State<S>, dim: usize) -> State<S> {
    let q = node.grid.q;
    let nnodes = node.grid.panels.len() * q;
    let mut new: State<S> = BTreeMap::new();
    for (&(tmask, todd), (wvals, _)) in old {
        for (&(smask, sodd), gvals) in &node.samples[form] {
            let Some(sign) = signs::prepend_sign::<S>(smask, tmask, todd) else {
                continue;
            };
            let integrand: Vec<Mat<S>> = gvals.iter().zip(wvals).map(|(g, w)| g * w).collect();
            let mut vals = Vec::with_capacity(nnodes);
            let mut acc = Mat::zeros(dim, dim);
            for (p, &(_, h)) in node.grid.panels.iter().enumerate() {
                let base = p * q;
                for i in 0..q {
                    let mut v = acc.clone();
                    for j in 0..q {
                        v += &integrand[base + j] * (h * panel.antideriv[i][j]);
                    }
                    vals.push(v * sign);
                }
                for j in 0..q {
                    acc += &integrand[base + j] * (h * panel.weights[j]);
                }
            }
            let end = acc * sign;
            let key = (smask | tmask, todd ^ sodd);
            match new.get_mut(&key) {
                Some((vs, e)) => {
                    for (a, b) in vs.iter_mut().zip(vals) {
                        *a += b;
                    }
                    *e += end;
                }
                None => {
                    new.insert(key, (vals, end));
                }
            }
        }
    }
    new
}

/// Words evaluated at one cube point. `order` lists forms in the order they
/// are prepended, i.e. `a_n` first. Returns the raw `ψ` value of every prefix
/// length `1..=order.len()` that closes the full `x`-pattern.
fn words_at_node<S: Scalar>(node: &Node<S>, panel: &Panel<S>, order: &[usize], k: usize, dim: usize) -> Vec<Mat<S>> {
    let full: Mask = (1u32 << (k - 1)) - 1;
    let nnodes = node.grid.panels.len() * node.grid.q;
    let mut state: State<S> = BTreeMap::new();
    state.insert((0, false), (vec![Mat::identity(dim, dim); nnodes], Mat::identity(dim, dim)));
    let mut out = Vec::with_capacity(order.len());
    for &f in order {
        state = prepend(node, panel, f, &state, dim);
        let mut total = Mat::zeros(dim, dim);
        for par in [false, true] {
            if let Some((_, e)) = state.get(&(full, par)) {
                total += e;
            }
        }
        out.push(total);
        if state.is_empty() {
            break;
        }
    }
    out.resize(order.len(), Mat::zeros(dim, dim));
    out
}

/// Cube points and weights for the `x`-integral at a refinement level.
fn cube_rule<S: Scalar>(k: usize, q: usize, level: usize, seed: u64) -> Vec<(Vec<S>, S)> {
    let (gx, gw) = gauss_legendre(q);
    let r = 1usize << level;
    let composite: Vec<(f64, f64)> = (0..r)
        .flat_map(|p| {
            let a = p as f64 / r as f64;
            let h = 1.0 / r as f64;
            gx.iter().zip(&gw).map(move |(&x, &w)| (a + h * x, h * w)).collect::<Vec<_>>()
        })
        .collect();
    match k {
        0 | 1 => vec![(Vec::new(), S::one())],
        2 => composite.iter().map(|&(x, w)| (vec![S::of(x)], S::of(w))).collect(),
        3 => {
            // sectors x_1 > x_2 and x_2 > x_1 through the Duffy square
            let mut out = Vec::with_capacity(2 * composite.len() * composite.len());
            for &(u, wu) in &composite {
                for &(v, wv) in &composite {
                    let (hi, lo, w) = (u, u * v, wu * wv * u);
                    out.push((vec![S::of(hi), S::of(lo)], S::of(w)));
                    out.push((vec![S::of(lo), S::of(hi)], S::of(w)));
                }
            }
            out
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (level as u64) << 32);
            let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
            for _ in 0..k - 1 {
                let mut next = Vec::with_capacity(out.len() * composite.len());
                for (p, w) in &out {
                    for &(x, wx) in &composite {
                        let mut p2 = p.clone();
                        p2.push(x);
                        next.push((p2, w * wx));
                    }
                }
                out = next;
            }
            out.into_iter()
                .map(|(p, w)| {
                    let p = p
                        .into_iter()
                        .map(|v| S::of((v + 1e-8 * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0)))
                        .collect();
                    (p, S::of(w))
                })
                .collect()
        }
    }
}

/// `∫` of the words over `Δ_n × I^{k-1}` at one refinement level.
fn integrate_words<S: Scalar>(
    k: usize,
    forms: &[Prepared<S>],
    order: &[usize],
    dim: usize,
    cfg: &ChenConfig,
    level: usize,
) -> Vec<Mat<S>> {
    let panel = Panel::<S>::new(cfg.quad_order);
    let rule = cube_rule::<S>(k, cfg.quad_order, level, cfg.jitter_seed);
    let per_node: Vec<Vec<Mat<S>>> = rule
        .par_iter()
        .map(|(x, w)| {
            let node = build_node(k, x, forms, &panel, dim, cfg, level);
            words_at_node(&node, &panel, order, k, dim)
                .into_iter()
                .map(|m| m * *w)
                .collect()
        })
        .collect();
    let mut total = vec![Mat::zeros(dim, dim); order.len()];
    for vals in per_node {
        for (t, v) in total.iter_mut().zip(vals) {
            *t += v;
        }
    }
    total
}

/// Refines until two consecutive levels agree to `tol · max(1, ‖value‖)`,
/// with `tol` floored at a few ulps of the scalar type.
fn converged_words<S: Scalar>(
    k: usize,
    forms: &[Prepared<S>],
    order: &[usize],
    dim: usize,
    cfg: &ChenConfig,
) -> Result<(Vec<Mat<S>>, f64)> {
    let mut prev = integrate_words(k, forms, order, dim, cfg, 0);
    let mut last_err = f64::INFINITY;
    let tol = cfg.tol.max(64.0 * S::EPS.f64());
    for level in 1..=cfg.max_refinements {
        let cur = integrate_words(k, forms, order, dim, cfg, level);
        let mut err = 0.0f64;
        let mut scale = 1.0f64;
        for (a, b) in prev.iter().zip(&cur) {
            err = err.max(max_abs(&(a - b)).f64());
            scale = scale.max(max_abs(b).f64());
        }
        if err <= tol * scale {
            return Ok((cur, err));
        }
        last_err = err;
        prev = cur;
    }
    Err(Error::Accuracy {
        msg: format!("iterated integral on Δ_{k} did not converge after {} refinements", cfg.max_refinements),
        estimate: last_err,
    })
}

fn check_word<S: Scalar>(forms: &[PolyForm<S>]) -> Result<(usize, GradedVectorSpace)> {
    let first = forms
        .first()
        .ok_or_else(|| Error::Dimension("empty word".into()))?;
    let Domain::Simplex(k) = first.domain() else {
        return Err(Error::Domain("iterated integrals need forms on a simplex".into()));
    };
    for f in forms {
        if f.domain() != first.domain() || f.space() != first.space() {
            return Err(Error::Dimension("word mixes domains or value spaces".into()));
        }
    }
    Ok((k, first.space().clone()))
}

/// The top coefficient at `(t, x) ∈ Δ_n × I^{k-1}` whose integral is
/// `ψ_n(a_1 ⊗ … ⊗ a_n)`; values compose as `a_1 ∘ … ∘ a_n`.
pub fn chen_integrand<S: Scalar>(forms: &[PolyForm<S>], t: &[S], x: &[S]) -> Result<Mat<S>> {
    let (k, space) = check_word(forms)?;
    if k == 0 {
        return Err(Error::Domain("no integrand on Δ_0".into()));
    }
    if t.len() != forms.len() || x.len() + 1 != k {
        return Err(Error::Dimension("node does not match the word length or simplex".into()));
    }
    let dim = space.total_dim();
    let full: Mask = (1u32 << (k - 1)) - 1;
    let mut state: BTreeMap<(Mask, bool), Mat<S>> = BTreeMap::new();
    state.insert((0, false), Mat::identity(dim, dim));
    for (f, &ti) in forms.iter().zip(t).rev() {
        let jac = theta_jacobian(k, x, ti)?;
        let point = theta_branch(k, x, ti).eval(x, ti).0;
        let mut g = BTreeMap::new();
        Prepared::new(f, k).sample(&point, &jac, &mut g);
        let mut next: BTreeMap<(Mask, bool), Mat<S>> = BTreeMap::new();
        for (&(tm, to), w) in &state {
            for (&(sm, so), gv) in &g {
                if let Some(sign) = signs::prepend_sign::<S>(sm, tm, to) {
                    let v = gv * w * sign;
                    next.entry((sm | tm, to ^ so)).and_modify(|m| *m += &v).or_insert(v);
                }
            }
        }
        state = next;
    }
    let mut out = Mat::zeros(dim, dim);
    for par in [false, true] {
        if let Some(m) = state.get(&(full, par)) {
            out += m;
        }
    }
    Ok(out)
}

/// `ψ_n(s a_1 ⊗ … ⊗ s a_n)` on the fundamental simplex.
pub fn psi_n_eval<S: Scalar>(forms: &[PolyForm<S>], cfg: &ChenConfig) -> Result<CochainValue<S>> {
    cfg.validate()?;
    let (k, space) = check_word(forms)?;
    let dim = space.total_dim();
    if k == 0 {
        let matrix = if forms.len() == 1 {
            forms[0].evaluate(&[])?.remove(&0).unwrap_or_else(|| Mat::zeros(dim, dim))
        } else {
            Mat::zeros(dim, dim)
        };
        return Ok(CochainValue { k, space, matrix, error_estimate: 0.0 });
    }
    let prepared: Vec<Prepared<S>> = forms.iter().map(|f| Prepared::new(f, k)).collect();
    if prepared.iter().any(|p| p.is_empty()) {
        return Ok(CochainValue { k, space, matrix: Mat::zeros(dim, dim), error_estimate: 0.0 });
    }
    let order: Vec<usize> = (0..forms.len()).rev().collect();
    let (vals, err) = converged_words(k, &prepared, &order, dim, cfg)?;
    let matrix = vals.last().cloned().expect("non-empty word");
    Ok(CochainValue { k, space, matrix, error_estimate: err })
}

/// `ψ̄_n`, the sign-twisted component used for holonomies.
pub fn psi_bar_n_eval<S: Scalar>(forms: &[PolyForm<S>], cfg: &ChenConfig) -> Result<CochainValue<S>> {
    let mut v = psi_n_eval(forms, cfg)?;
    v.matrix *= signs::psi_bar_sign::<S>(v.k, forms.len());
    Ok(v)
}

/// Summary of a holonomy series evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue<S: Scalar> {
    /// Sum of the series as a dense matrix (unit included on 1-simplices).
    pub matrix: Mat<S>,
    /// `ψ̄_n(ω^{⊗n})` for `n = 1..=terms`.
    pub components: Vec<Mat<S>>,
    pub bound_constant: f64,
    pub tail: f64,
    pub error_estimate: f64,
}

/// Σ_n ψ̄_n((sω)^{⊗n}) on `[Δ_k]` for an arbitrary form, unit included for
/// `k = 1`. The number of terms is chosen from the `C^n/n!` tail bound.
pub fn series_dense<S: Scalar>(omega: &PolyForm<S>, cfg: &ChenConfig) -> Result<SeriesValue<S>> {
    cfg.validate()?;
    let Domain::Simplex(k) = omega.domain() else {
        return Err(Error::Domain("holonomy needs a form on a simplex".into()));
    };
    let dim = omega.dim();
    if k == 0 {
        let m = omega.evaluate(&[])?.remove(&0).unwrap_or_else(|| Mat::zeros(dim, dim));
        return Ok(SeriesValue {
            matrix: m.clone(),
            components: vec![m],
            bound_constant: 0.0,
            tail: 0.0,
            error_estimate: 0.0,
        });
    }
    let c = integrand_bound(omega, k);
    let mut n = 1;
    while tail_bound(c, n) >= cfg.tol {
        if n >= cfg.max_n {
            return Err(Error::Truncation { bound: tail_bound(c, n), n });
        }
        n += 1;
    }
    let prepared = [Prepared::new(omega, k)];
    let unit = if k == 1 { Mat::identity(dim, dim) } else { Mat::zeros(dim, dim) };
    if prepared[0].is_empty() {
        return Ok(SeriesValue {
            matrix: unit,
            components: vec![Mat::zeros(dim, dim); n],
            bound_constant: c,
            tail: 0.0,
            error_estimate: 0.0,
        });
    }
    let order = vec![0; n];
    let (raw, err) = converged_words(k, &prepared, &order, dim, cfg)?;
    let components: Vec<Mat<S>> = raw
        .into_iter()
        .enumerate()
        .map(|(i, m)| m * signs::psi_bar_sign::<S>(k, i + 1))
        .collect();
    let matrix = components.iter().fold(unit, |acc, m| acc + m);
    Ok(SeriesValue {
        matrix,
        components,
        bound_constant: c,
        tail: tail_bound(c, n),
        error_estimate: err,
    })
}

const MC_HARD: f64 = 1e-6;

/// Holonomy `E_{v_k} → E_{v_0}` of degree `1 - k`.
pub fn holonomy_series<S: Scalar>(omega: &SuperconnectionMC<S>, cfg: &ChenConfig) -> Result<GradedMap<S>> {
    if omega.residual().f64() > MC_HARD {
        return Err(Error::Invariant(format!(
            "Maurer-Cartan residual {:e} above {MC_HARD:e}",
            omega.residual().f64()
        )));
    }
    let v = series_dense(omega.form(), cfg)?;
    let space = omega.form().space();
    GradedMap::from_dense(space, space, 1 - omega.k() as i32, &v.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{GaugeElement, SuperconnectionMC};
    use crate::oracles::{brute_simplex_integral, expm, parallel_transport_ode, TransportProblem};
    use crate::simplex::degeneracy_map;
    use proptest::prelude::*;

    fn cfg() -> ChenConfig {
        ChenConfig { max_n: 64, ..ChenConfig::default() }
    }

    fn deg0(n: usize) -> GradedVectorSpace {
        GradedVectorSpace::concentrated(0, n)
    }

    fn two_term() -> GradedVectorSpace {
        GradedVectorSpace::new([(0, 1), (1, 1)]).unwrap()
    }

    fn term(k: usize, v: &GradedVectorSpace, idx: &[usize], d: i32, e: Vec<u32>, m: Mat<f64>) -> PolyForm<f64> {
        let g = GradedMap::from_dense(v, v, d, &m).unwrap();
        PolyForm::from_graded_term(Domain::Simplex(k), v, idx, d, &[(e, g)]).unwrap()
    }

    fn random_poly_form(rng: &mut ChaCha8Rng, k: usize, v: &GradedVectorSpace, p: usize, d: i32, deg: u32) -> PolyForm<f64> {
        let n = v.total_dim();
        let mut out = PolyForm::zero(Domain::Simplex(k), v);
        for idx in subsets(k, p) {
            for _ in 0..2 {
                let e: Vec<u32> = (0..k).map(|_| rng.random_range(0..=deg)).collect();
                let m = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                out = out.add(&term(k, v, &idx, d, e, m)).unwrap();
            }
        }
        out
    }

    #[test]
    fn sign_factors() {
        assert_eq!(signs::psi_bar_sign::<f64>(1, 1), -1.0);
        assert_eq!(signs::psi_bar_sign::<f64>(1, 2), 1.0);
        assert_eq!(signs::psi_bar_sign::<f64>(2, 1), -1.0);
        assert_eq!(signs::psi_bar_sign::<f64>(0, 1), 1.0);
        assert_eq!(signs::psi_bar_sign::<f64>(3, 1), 1.0);
        assert_eq!(signs::prepend_sign::<f64>(0b10, 0b01, false), Some(-1.0));
        assert_eq!(signs::prepend_sign::<f64>(0b01, 0b10, true), Some(-1.0));
        assert_eq!(signs::prepend_sign::<f64>(0, 0b11, true), Some(1.0));
        assert_eq!(signs::prepend_sign::<f64>(0b01, 0b01, false), None);
    }

    #[test]
    fn tail_bound_decreases_past_c() {
        let c = 5.0;
        let mut prev = tail_bound(c, 5);
        for n in 6..40 {
            let b = tail_bound(c, n);
            assert!(b < prev);
            prev = b;
        }
        assert!(tail_bound(10.0, 3).is_infinite());
    }

    #[test]
    fn integrand_examples() {
        let v = deg0(2);
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.5]);
        let fa = term(1, &v, &[1], 0, vec![0], a.clone());
        let fb = term(1, &v, &[1], 0, vec![0], b.clone());
        assert_eq!(chen_integrand(std::slice::from_ref(&fa), &[0.3], &[]).unwrap(), -&a);
        assert_eq!(chen_integrand(&[fa.clone(), fb.clone()], &[0.6, 0.3], &[]).unwrap(), &a * &b);
        let f0 = term(1, &v, &[], 0, vec![0], a.clone());
        assert_eq!(chen_integrand(&[fa, f0], &[0.6, 0.3], &[]).unwrap(), Mat::zeros(2, 2));
    }

    #[test]
    fn psi_examples() {
        let v = deg0(1);
        let one = Mat::identity(1, 1);
        let c = cfg();
        let dt = term(1, &v, &[1], 0, vec![0], one.clone());
        assert!((psi_n_eval(std::slice::from_ref(&dt), &c).unwrap().matrix[(0, 0)] + 1.0).abs() < 1e-12);
        let top = term(2, &v, &[1, 2], 0, vec![0, 0], one.clone() * 3.0);
        assert!((psi_n_eval(&[top], &c).unwrap().matrix[(0, 0)] - 1.5).abs() < 1e-12);
        let w = deg0(2);
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.5]);
        let fa = term(1, &w, &[1], 0, vec![0], a.clone());
        let fb = term(1, &w, &[1], 0, vec![0], b.clone());
        let p2 = psi_n_eval(&[fa.clone(), fb], &c).unwrap().matrix;
        assert!((p2 - &a * &b * 0.5).amax() < 1e-12);
        let pb = psi_bar_n_eval(std::slice::from_ref(&fa), &c).unwrap().matrix;
        assert!((pb - &a).amax() < 1e-12);
        // a 0-form anywhere in a longer word gives zero
        let f0 = term(1, &w, &[], 0, vec![1], a.clone());
        assert_eq!(psi_bar_n_eval(&[fa, f0], &c).unwrap().matrix, Mat::zeros(2, 2));
    }

    #[test]
    fn psi_bar_on_two_simplex() {
        let v = two_term();
        let phi = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = term(2, &v, &[1, 2], -1, vec![0, 0], phi.clone() * 3.0);
        let val = psi_bar_n_eval(std::slice::from_ref(&f), &cfg()).unwrap().matrix;
        assert!((val + &phi * 1.5).amax() < 1e-12);
        let omega = SuperconnectionMC::new(f).unwrap();
        let hol = holonomy_series(&omega, &cfg()).unwrap();
        assert!((hol.to_dense() + &phi * 1.5).amax() < 1e-12);
        assert_eq!(hol.degree(), -1);
    }

    #[test]
    fn holonomy_closed_forms() {
        let v = deg0(2);
        let n = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let omega = SuperconnectionMC::new(term(1, &v, &[1], 0, vec![0], n)).unwrap();
        let h = holonomy_series(&omega, &cfg()).unwrap().to_dense();
        assert!((h - Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).amax() < 1e-9);
        let zero = SuperconnectionMC::<f64>::zero(1, &v);
        assert_eq!(holonomy_series(&zero, &ChenConfig::default()).unwrap().to_dense(), Mat::identity(2, 2));
        let a = Mat::from_row_slice(2, 2, &[0.3, -0.2, 0.5, 0.1]);
        let omega = SuperconnectionMC::new(term(1, &v, &[1], 0, vec![0], a.clone())).unwrap();
        let h = holonomy_series(&omega, &cfg()).unwrap().to_dense();
        assert!((h - expm(&a)).amax() < 1e-9);
    }

    #[test]
    fn truncation_is_reported() {
        let v = deg0(2);
        let a = Mat::from_row_slice(2, 2, &[3.0, -2.0, 5.0, 1.0]);
        let omega = SuperconnectionMC::new(term(1, &v, &[1], 0, vec![0], a)).unwrap();
        let small = ChenConfig { max_n: 4, ..ChenConfig::default() };
        assert!(matches!(holonomy_series(&omega, &small), Err(Error::Truncation { .. })));
    }

    #[test]
    fn polynomial_connection_matches_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = deg0(3);
        let omega = random_poly_form(&mut rng, 1, &v, 1, 0, 3);
        let mc = SuperconnectionMC::new(omega.clone()).unwrap();
        let h = holonomy_series(&mc, &cfg()).unwrap().to_dense();
        let ode = parallel_transport_ode(&TransportProblem::from_connection(&omega).unwrap(), 200).unwrap();
        assert!((h - ode.value).amax() < 1e-8);
    }

    #[test]
    fn theta_degree_matches_simplex_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = deg0(1);
        for k in 1..=3 {
            let f = random_poly_form(&mut rng, k, &v, k, 0, 2);
            let lhs = psi_n_eval(std::slice::from_ref(&f), &cfg()).unwrap().matrix;
            let rhs = brute_simplex_integral(&f).unwrap() * sgn_s::<f64>(k as i64);
            assert!((lhs - rhs).amax() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn degenerate_pullbacks_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = deg0(2);
        let omega = random_poly_form(&mut rng, 1, &v, 1, 0, 2);
        for i in 1..=2 {
            let pb = omega.pullback_affine(&degeneracy_map(i, 2).unwrap()).map_err(|e| e.to_string()).unwrap();
            let s = series_dense(&pb, &cfg()).unwrap();
            for c in &s.components {
                assert!(c.amax() < 1e-9);
            }
        }
    }

    #[test]
    fn gauge_equivariance_on_interval() {
        let v = deg0(2);
        let a = Mat::from_row_slice(2, 2, &[0.2, 0.4, -0.3, 0.1]);
        let omega = SuperconnectionMC::new(term(1, &v, &[1], 0, vec![1], a)).unwrap();
        let nmat = Mat::from_row_slice(2, 2, &[0.0, 0.7, 0.0, 0.0]);
        let id = PolyForm::identity(Domain::Simplex(1), &v);
        let nt = term(1, &v, &[], 0, vec![2], nmat);
        let g = GaugeElement::new(id.add(&nt).unwrap(), id.sub(&nt).unwrap()).unwrap();
        let moved = crate::forms::gauge_act(&omega, &g).unwrap();
        let lhs = holonomy_series(&moved, &cfg()).unwrap().to_dense();
        let h = holonomy_series(&omega, &cfg()).unwrap().to_dense();
        // v_0 = (0) and v_1 = (1)
        let rhs = g.at(&[0.0]).unwrap().try_inverse().unwrap() * h * g.at(&[1.0]).unwrap();
        assert!((lhs - rhs).amax() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn worker_count_does_not_change_results(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = deg0(2);
            let f = random_poly_form(&mut rng, 2, &v, 1, 0, 1);
            let a = psi_n_eval(&[f.clone(), f.clone()], &cfg()).unwrap().matrix;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let b = pool.install(|| psi_n_eval(&[f.clone(), f], &cfg()).unwrap().matrix);
            prop_assert_eq!(a, b);
        }
    }
}
