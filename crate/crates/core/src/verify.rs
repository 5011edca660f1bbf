//! Residuals of the A∞ relations satisfied by the iterated-integral maps,
//! evaluated on affine simplices inside a fixed simplex.

use crate::chen::{psi_n_eval, ChenConfig};
use crate::error::{Error, Result};
use crate::forms::PolyForm;
use crate::graded::GradedVectorSpace;
use crate::scalar::{max_abs, sgn_s, Mat, Scalar};
use crate::simplex::AffineSimplexMap;

/// Splits a dense endomorphism into its even and odd degree parts.
pub fn parity_parts<S: Scalar>(space: &GradedVectorSpace, m: &Mat<S>) -> [Mat<S>; 2] {
    let deg = space.basis_degrees();
    let mut even = m.clone();
    let mut odd = m.clone();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if (deg[r] - deg[c]).rem_euclid(2) == 0 {
                odd[(r, c)] = S::zero();
            } else {
                even[(r, c)] = S::zero();
            }
        }
    }
    [even, odd]
}

/// `Σ_e sign(|e|) e` over the parity parts of `m`.
pub fn twist_parity<S: Scalar>(space: &GradedVectorSpace, m: &Mat<S>, odd_sign: S) -> Mat<S> {
    let [e, o] = parity_parts(space, m);
    e + o * odd_sign
}

/// `ψ_n` of the pulled-back word on the affine simplex with the given
/// vertices (points of the ambient simplex).
pub fn psi_on_simplex<S: Scalar>(forms: &[PolyForm<S>], vertices: &[Vec<S>], cfg: &ChenConfig) -> Result<Mat<S>> {
    let first = forms.first().ok_or_else(|| Error::Dimension("empty word".into()))?;
    let map = AffineSimplexMap::from_vertex_images(first.domain().dim(), vertices)?;
    let pulled: Vec<PolyForm<S>> = forms.iter().map(|f| f.pullback_affine(&map)).collect::<Result<_>>()?;
    Ok(psi_n_eval(&pulled, cfg)?.matrix)
}

fn suspended_degree<S: Scalar>(f: &PolyForm<S>) -> Result<i32> {
    if f.is_zero() {
        return Ok(0);
    }
    f.total_degree()
        .map(|d| d - 1)
        .ok_or_else(|| Error::Degree("A∞ residuals need homogeneous inputs".into()))
}

/// `δ` on `End V ⊗ C`: `(-1)^{|e|} Σ_j (-1)^j φ(d_j σ)`.
pub(crate) fn coboundary<S: Scalar, F>(space: &GradedVectorSpace, vertices: &[Vec<S>], mut phi: F) -> Result<Mat<S>>
where
    F: FnMut(&[Vec<S>]) -> Result<Mat<S>>,
{
    let n = space.total_dim();
    let mut acc = Mat::zeros(n, n);
    for j in 0..vertices.len() {
        let mut face = vertices.to_vec();
        face.remove(j);
        acc += phi(&face)? * sgn_s::<S>(j as i64);
    }
    Ok(twist_parity(space, &acc, -S::one()))
}

/// `(φ ∪ φ')(σ)` with `φ` of cochain degree `p`, including the sign
/// `(-1)^{p |e'|}`.
pub(crate) fn cup_value<S: Scalar>(space: &GradedVectorSpace, p: usize, left: &Mat<S>, right: &Mat<S>) -> Mat<S> {
    left * twist_parity(space, right, sgn_s::<S>(p as i64))
}

/// Largest violation of the A∞ morphism relations of `ψ` for the word
/// `x_1 … x_n`, as a cochain identity evaluated on the given affine
/// simplices.
///
/// Source algebra: `(End V ⊗ Ω, -d, ∧)`; target `(End V ⊗ C, δ, ∪)`.
pub fn psi_ainfty_residual<S: Scalar>(
    forms: &[PolyForm<S>],
    simplices: &[Vec<Vec<S>>],
    cfg: &ChenConfig,
) -> Result<S> {
    let n = forms.len();
    let space = forms
        .first()
        .ok_or_else(|| Error::Dimension("empty word".into()))?
        .space()
        .clone();
    let susp: Vec<i32> = forms.iter().map(suspended_degree).collect::<Result<_>>()?;
    let prefix = |i: usize| -> i32 { susp[..i].iter().sum() };
    let mut worst = S::zero();
    for sigma in simplices {
        if sigma.is_empty() {
            return Err(Error::Dimension("simplex without vertices".into()));
        }
        let d = sigma.len() - 1;
        // δ ψ_n(x)
        let mut lhs = coboundary(&space, sigma, |face| psi_on_simplex(forms, face, cfg))?;
        // Σ ± ψ_i ∪ ψ_{n-i}; only the split matching the cochain degree of
        // the left factor survives
        for i in 1..n {
            for p in 0..=d {
                let left = psi_on_simplex(&forms[..i], &sigma[..=p], cfg)?;
                if left.iter().all(|v| *v == S::zero()) {
                    continue;
                }
                let right = psi_on_simplex(&forms[i..], &sigma[p..], cfg)?;
                lhs += cup_value(&space, p, &left, &right) * sgn_s::<S>(prefix(i) as i64);
            }
        }
        let mut rhs = Mat::zeros(space.total_dim(), space.total_dim());
        for i in 0..n {
            let mut word = forms.to_vec();
            word[i] = forms[i].exterior_derivative().scale(-S::one());
            rhs += psi_on_simplex(&word, sigma, cfg)? * sgn_s::<S>(prefix(i) as i64);
        }
        for i in 1..n {
            let mut word: Vec<PolyForm<S>> = forms[..i - 1].to_vec();
            word.push(forms[i - 1].wedge(&forms[i])?);
            word.extend_from_slice(&forms[i + 1..]);
            rhs += psi_on_simplex(&word, sigma, cfg)? * sgn_s::<S>(prefix(i) as i64);
        }
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}

/// `ψ̄_n` of the pulled-back word on an affine simplex.
pub fn psi_bar_on_simplex<S: Scalar>(forms: &[PolyForm<S>], vertices: &[Vec<S>], cfg: &ChenConfig) -> Result<Mat<S>> {
    let k = vertices.len() - 1;
    Ok(psi_on_simplex(forms, vertices, cfg)? * crate::chen::signs::psi_bar_sign::<S>(k, forms.len()))
}

/// Largest violation of the A∞ morphism relations of `ψ̄` from
/// `(End V ⊗ Ω, d, ∧)` to `(End V ⊗ C, δ̄, ∪̄)`, where on `End^l ⊗ C^k`
/// `δ̄ = (-1)^{l+k} δ` and `(a ∪̄ b)(σ) = (-1)^{k(l'+k')} a(back) b(front)`.
pub fn psi_bar_ainfty_residual<S: Scalar>(
    forms: &[PolyForm<S>],
    simplices: &[Vec<Vec<S>>],
    cfg: &ChenConfig,
) -> Result<S> {
    let n = forms.len();
    let space = forms
        .first()
        .ok_or_else(|| Error::Dimension("empty word".into()))?
        .space()
        .clone();
    let susp: Vec<i32> = forms.iter().map(suspended_degree).collect::<Result<_>>()?;
    let prefix = |i: usize| -> i32 { susp[..i].iter().sum() };
    let mut worst = S::zero();
    for sigma in simplices {
        if sigma.len() < 2 {
            return Err(Error::Dimension("relations are checked on simplices of dimension ≥ 1".into()));
        }
        let d = sigma.len() - 1;
        // the input cochain has degree d - 1
        let mut plain = Mat::zeros(space.total_dim(), space.total_dim());
        for j in 0..=d {
            let mut face = sigma.clone();
            face.remove(j);
            plain += psi_bar_on_simplex(forms, &face, cfg)? * sgn_s::<S>(j as i64);
        }
        let mut lhs = twist_parity(&space, &plain, sgn_s::<S>(1)) * sgn_s::<S>(d as i64 - 1);
        for i in 1..n {
            for p in 0..=d {
                let left = psi_bar_on_simplex(&forms[..i], &sigma[..=p], cfg)?;
                if left.iter().all(|v| *v == S::zero()) {
                    continue;
                }
                let right = psi_bar_on_simplex(&forms[i..], &sigma[p..], cfg)?;
                let kk = (d - p) as i64;
                let pp = p as i64;
                let twisted = twist_parity(&space, &right, sgn_s::<S>(pp)) * sgn_s::<S>(pp * kk);
                lhs += left * twisted * sgn_s::<S>(prefix(i) as i64);
            }
        }
        let mut rhs = Mat::zeros(space.total_dim(), space.total_dim());
        for i in 0..n {
            let mut word = forms.to_vec();
            word[i] = forms[i].exterior_derivative();
            rhs += psi_bar_on_simplex(&word, sigma, cfg)? * sgn_s::<S>(prefix(i) as i64);
        }
        for i in 1..n {
            let mut word: Vec<PolyForm<S>> = forms[..i - 1].to_vec();
            word.push(forms[i - 1].wedge(&forms[i])?);
            word.extend_from_slice(&forms[i + 1..]);
            rhs += psi_bar_on_simplex(&word, sigma, cfg)? * sgn_s::<S>(prefix(i) as i64);
        }
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}
