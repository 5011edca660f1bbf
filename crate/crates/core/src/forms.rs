//! `End V`-valued differential forms with polynomial coefficients.
//!
//! Conventions: an element is a sum of `e ⊗ α` with `e ∈ End V` homogeneous
//! and `α` a scalar form. Products follow
//! `(e ⊗ α)(e' ⊗ α') = (-1)^{|α||e'|} e e' ⊗ α α'` and the differential is
//! `d(e ⊗ α) = (-1)^{|e|} e ⊗ dα`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graded::{op_norm, GradedMap, GradedVectorSpace};
use crate::poly::{Exponent, MatPoly, Poly};
use crate::quad::{duffy_simplex_rule, gauss_legendre};
use crate::scalar::{Mat, Scalar};
use crate::simplex::{in_simplex, AffineSimplexMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Simplex(usize),
    Cube(usize),
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Simplex(m) | Domain::Cube(m) => m,
        }
    }

    pub fn contains<S: Scalar>(self, p: &[S], tol: S) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Simplex(_) => in_simplex(p, tol),
            Domain::Cube(_) => p.iter().all(|&v| v >= -tol && v <= S::one() + tol),
        }
    }

    /// Order-`q` Gauss grid (Duffy-mapped for simplices) with weights.
    pub fn grid<S: Scalar>(self, q: usize) -> Vec<(Vec<S>, S)> {
        match self {
            Domain::Simplex(m) => duffy_simplex_rule(m, q),
            Domain::Cube(m) => {
                let (xs, ws) = gauss_legendre(q);
                let mut out = vec![(Vec::new(), S::one())];
                for _ in 0..m {
                    let mut next = Vec::with_capacity(out.len() * q);
                    for (p, w) in &out {
                        for (x, wx) in xs.iter().zip(&ws) {
                            let mut p2 = p.clone();
                            p2.push(S::of(*x));
                            next.push((p2, *w * S::of(*wx)));
                        }
                    }
                    out = next;
                }
                out
            }
        }
    }
}

/// Multi-index `I ⊆ {1..m}` as a bitmask, bit `i-1` for `dt_i`.
pub type Mask = u32;

pub fn mask_of(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << (i - 1)))
}

pub fn mask_indices(mask: Mask) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

pub fn mask_len(mask: Mask) -> usize {
    mask.count_ones() as usize
}

/// Sign of `dt_I ∧ dt_J = ± dt_{I∪J}`, `None` when they overlap.
pub fn wedge_mask_sign(a: Mask, b: Mask) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let bit = bb.trailing_zeros();
        bb &= bb - 1;
        inversions += (a >> (bit + 1)).count_ones();
    }
    Some(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

/// Polynomial `End V`-valued form; one matrix polynomial per
/// (multi-index, endomorphism degree).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyForm<S: Scalar> {
    domain: Domain,
    space: GradedVectorSpace,
    terms: BTreeMap<(Mask, i32), MatPoly<S>>,
}

impl<S: Scalar> PolyForm<S> {
    pub fn zero(domain: Domain, space: &GradedVectorSpace) -> Self {
        Self {
            domain,
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// A single term `Σ_e coeff_e t^e ⊗ dt_I` with coefficients given as
    /// degree-`degree` maps.
    pub fn from_graded_term(
        domain: Domain,
        space: &GradedVectorSpace,
        indices: &[usize],
        degree: i32,
        monomials: &[(Exponent, GradedMap<S>)],
    ) -> Result<Self> {
        let n = space.total_dim();
        let mut p = MatPoly::zero(domain.dim(), n, n);
        for (e, g) in monomials {
            if g.source() != space || g.target() != space || g.degree() != degree {
                return Err(Error::Dimension(
                    "term coefficient is not a degree-matching endomorphism of V".into(),
                ));
            }
            if e.len() != domain.dim() {
                return Err(Error::Dimension(format!(
                    "exponent {e:?} has wrong length for {domain:?}"
                )));
            }
            p.add_term(e.clone(), g.to_dense());
        }
        let mut f = Self::zero(domain, space);
        f.insert(mask_from_indices(domain, indices)?, degree, p);
        Ok(f)
    }

    /// A single term from a dense matrix polynomial; entries off the degree
    /// blocks must vanish.
    pub fn from_dense_term(
        domain: Domain,
        space: &GradedVectorSpace,
        indices: &[usize],
        degree: i32,
        coeff: MatPoly<S>,
    ) -> Result<Self> {
        let n = space.total_dim();
        if coeff.rows != n || coeff.cols != n || coeff.nvars != domain.dim() {
            return Err(Error::Dimension("coefficient polynomial shape mismatch".into()));
        }
        for m in coeff.terms.values() {
            if GradedMap::off_degree_mass(space, space, degree, m) != S::zero() {
                return Err(Error::Degree(format!(
                    "coefficient has entries outside endomorphism degree {degree}"
                )));
            }
        }
        let mut f = Self::zero(domain, space);
        f.insert(mask_from_indices(domain, indices)?, degree, coeff);
        Ok(f)
    }

    /// Constant 0-form `g`.
    pub fn constant_map(domain: Domain, g: &GradedMap<S>) -> Result<Self> {
        Self::from_graded_term(
            domain,
            g.source(),
            &[],
            g.degree(),
            &[(vec![0; domain.dim()], g.clone())],
        )
    }

    pub fn identity(domain: Domain, space: &GradedVectorSpace) -> Self {
        Self::constant_map(domain, &GradedMap::identity(space)).expect("identity is well formed")
    }

    fn insert(&mut self, mask: Mask, degree: i32, p: MatPoly<S>) {
        if p.is_zero() {
            return;
        }
        match self.terms.get_mut(&(mask, degree)) {
            Some(slot) => {
                *slot = slot.add(&p);
                if slot.is_zero() {
                    self.terms.remove(&(mask, degree));
                }
            }
            None => {
                self.terms.insert((mask, degree), p);
            }
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn space(&self) -> &GradedVectorSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Terms keyed by (multi-index mask, endomorphism degree).
    pub fn terms(&self) -> &BTreeMap<(Mask, i32), MatPoly<S>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree if every term has the same `|I| + deg(e)`.
    pub fn total_degree(&self) -> Option<i32> {
        let mut it = self
            .terms
            .keys()
            .map(|(m, d)| mask_len(*m) as i32 + d);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Part of form degree `p`.
    pub fn component(&self, p: usize) -> Self {
        let mut out = Self::zero(self.domain, &self.space);
        for ((m, d), c) in &self.terms {
            if mask_len(*m) == p {
                out.terms.insert((*m, *d), c.clone());
            }
        }
        out
    }

    /// Part of endomorphism degree `d`.
    pub fn endo_component(&self, d: i32) -> Self {
        let mut out = Self::zero(self.domain, &self.space);
        for ((m, dd), c) in &self.terms {
            if *dd == d {
                out.terms.insert((*m, *dd), c.clone());
            }
        }
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::Domain(format!(
                "forms live on {:?} and {:?}",
                self.domain, other.domain
            )));
        }
        if self.space != other.space {
            return Err(Error::Dimension("forms take values in different spaces".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for ((m, d), c) in &other.terms {
            out.insert(*m, *d, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = Self::zero(self.domain, &self.space);
        for ((m, d), p) in &self.terms {
            out.insert(*m, *d, p.scale(c));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-S::one()))
    }

    /// `a ∧ b` with coefficients composed as `a ∘ b`:
    /// `(A ⊗ α) ∧ (B ⊗ β) = (-1)^{|α||B|} AB ⊗ α ∧ β`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.domain, &self.space);
        for ((ma, da), pa) in &self.terms {
            for ((mb, db), pb) in &other.terms {
                let Some(s) = wedge_mask_sign(*ma, *mb) else {
                    continue;
                };
                let koszul = if (mask_len(*ma) as i64 * *db as i64).rem_euclid(2) == 0 { 1 } else { -1 };
                let prod = pa.mul(pb);
                out.insert(ma | mb, da + db, prod.scale(S::of((s * koszul) as f64)));
            }
        }
        Ok(out)
    }

    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(self.domain, &self.space);
        for ((m, d), p) in &self.terms {
            let esign = if d.rem_euclid(2) == 0 { S::one() } else { -S::one() };
            for j in 0..self.domain.dim() {
                let bit = 1 << j;
                let Some(s) = wedge_mask_sign(bit, *m) else {
                    continue;
                };
                let dp = p.derivative(j);
                if dp.is_zero() {
                    continue;
                }
                out.insert(m | bit, *d, dp.scale(esign * S::of(s as f64)));
            }
        }
        out
    }

    /// Exact pullback along an affine map `Δ_{m'} → Δ_m`.
    pub fn pullback_affine(&self, map: &AffineSimplexMap<S>) -> Result<Self> {
        let Domain::Simplex(m) = self.domain else {
            return Err(Error::Domain("affine pullback needs a simplex domain".into()));
        };
        if map.target_dim() != m {
            return Err(Error::Dimension(format!(
                "map lands in Δ_{}, form lives on Δ_{m}",
                map.target_dim()
            )));
        }
        let src = map.source_dim();
        let a = map.matrix();
        let b = map.offset();
        let subs: Vec<Poly<S>> = (0..m)
            .map(|i| {
                let lin: Vec<S> = (0..src).map(|j| a[(i, j)]).collect();
                Poly::affine(src, b[i], &lin)
            })
            .collect();
        let mut out = Self::zero(Domain::Simplex(src), &self.space);
        for ((mask, d), p) in &self.terms {
            let rows = mask_indices(*mask);
            let q = p.substitute(&subs, src);
            if q.is_zero() {
                continue;
            }
            for cols in subsets(src, rows.len()) {
                let minor = Mat::from_fn(rows.len(), rows.len(), |r, c| a[(rows[r] - 1, cols[c] - 1)]);
                let det = if rows.is_empty() { S::one() } else { minor.determinant() };
                if det == S::zero() {
                    continue;
                }
                out.insert(mask_of(&cols), *d, q.scale(det));
            }
        }
        Ok(out)
    }

    /// Coefficients at a point, one matrix per multi-index.
    pub fn evaluate(&self, p: &[S]) -> Result<BTreeMap<Mask, Mat<S>>> {
        if !self.domain.contains(p, S::of(1e-9)) {
            return Err(Error::Domain(format!("{p:?} is outside {:?}", self.domain)));
        }
        let mut out: BTreeMap<Mask, Mat<S>> = BTreeMap::new();
        for ((m, _), c) in &self.terms {
            let v = c.eval(p);
            match out.get_mut(m) {
                Some(slot) => *slot += v,
                None => {
                    out.insert(*m, v);
                }
            }
        }
        Ok(out)
    }

    /// Bound on the sup norm of the coefficients over the domain.
    pub fn coefficient_bound(&self) -> S {
        self.terms
            .values()
            .fold(S::zero(), |acc, p| acc + p.coefficient_bound())
    }

    /// Largest total polynomial degree among the coefficients.
    pub fn poly_degree(&self) -> u32 {
        self.terms.values().map(|p| p.total_degree()).max().unwrap_or(0)
    }

    /// Largest absolute coefficient of any monomial.
    pub fn max_coefficient(&self) -> S {
        self.terms
            .values()
            .flat_map(|p| p.terms.values())
            .fold(S::zero(), |acc, m| acc.max(m.amax()))
    }

    /// Sup over the order-5 evaluation grid of the largest operator norm
    /// among the multi-index coefficients.
    pub fn grid_sup_norm(&self) -> S {
        let mut worst = S::zero();
        let grid: Vec<(Vec<S>, S)> = if self.domain.dim() == 0 {
            vec![(Vec::new(), S::one())]
        } else {
            self.domain.grid(5)
        };
        for (p, _) in grid {
            for ((_, _), c) in &self.terms {
                worst = worst.max(op_norm(&c.eval(&p)));
            }
        }
        worst
    }

    /// Re-embeds the coefficients into a larger space through a block
    /// placement: rows/cols of this space go to `row_off`/`col_off` offsets of
    /// the total basis of `target` whose degree layout must match.
    pub fn embed_block(
        &self,
        target: &GradedVectorSpace,
        rows: &[usize],
        cols: &[usize],
    ) -> Self {
        let n = target.total_dim();
        let mut out = Self::zero(self.domain, target);
        for ((m, d), p) in &self.terms {
            let mut q = MatPoly::zero(p.nvars, n, n);
            for (e, c) in &p.terms {
                let mut big = Mat::zeros(n, n);
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &cc) in cols.iter().enumerate() {
                        big[(r, cc)] = c[(i, j)];
                    }
                }
                q.add_term(e.clone(), big);
            }
            out.insert(*m, *d, q);
        }
        out
    }
}

fn mask_from_indices(domain: Domain, indices: &[usize]) -> Result<Mask> {
    let m = domain.dim();
    if indices.iter().any(|&i| i == 0 || i > m) || indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Index(format!(
            "multi-index {indices:?} is not strictly increasing in 1..={m}"
        )));
    }
    Ok(mask_of(indices))
}

/// Strictly increasing `r`-subsets of `{1..n}`.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, r, &mut Vec::new(), &mut out);
    out
}

/// `sup_grid ‖(dω + ω∧ω)(p)‖`.
pub fn mc_residual<S: Scalar>(omega: &PolyForm<S>) -> S {
    let curv = omega
        .exterior_derivative()
        .add(&omega.wedge(omega).expect("same form"))
        .expect("same form");
    curv.grid_sup_norm()
}

const MC_STRICT: f64 = 1e-9;

/// Total-degree-1 form on a simplex satisfying the Maurer–Cartan equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperconnectionMC<S: Scalar> {
    form: PolyForm<S>,
    residual: S,
}

impl<S: Scalar> SuperconnectionMC<S> {
    /// Accepts `form` when its MC residual is at most `1e-9`.
    pub fn new(form: PolyForm<S>) -> Result<Self> {
        Self::with_tolerance(form, S::of(MC_STRICT))
    }

    pub fn with_tolerance(form: PolyForm<S>, tol: S) -> Result<Self> {
        if !matches!(form.domain(), Domain::Simplex(_)) {
            return Err(Error::Domain("superconnections live on simplices".into()));
        }
        if !form.is_zero() && form.total_degree() != Some(1) {
            return Err(Error::Degree("superconnection must have total degree 1".into()));
        }
        let residual = mc_residual(&form);
        if residual > tol {
            return Err(Error::Invariant(format!(
                "Maurer-Cartan residual {:e} exceeds {:e}",
                residual.f64(),
                tol.f64()
            )));
        }
        Ok(Self { form, residual })
    }

    pub fn zero(k: usize, space: &GradedVectorSpace) -> Self {
        Self {
            form: PolyForm::zero(Domain::Simplex(k), space),
            residual: S::zero(),
        }
    }

    pub fn form(&self) -> &PolyForm<S> {
        &self.form
    }

    pub fn residual(&self) -> S {
        self.residual
    }

    pub fn k(&self) -> usize {
        self.form.domain().dim()
    }

    /// Form-degree-`p` part `ω_p`.
    pub fn component(&self, p: usize) -> PolyForm<S> {
        self.form.component(p)
    }

    pub fn pullback_affine(&self, map: &AffineSimplexMap<S>) -> Result<Self> {
        let f = self.form.pullback_affine(map)?;
        let residual = mc_residual(&f);
        Ok(Self { form: f, residual })
    }
}

const COND_MAX: f64 = 1e8;

/// Invertible degree-0 function with a polynomial inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement<S: Scalar> {
    f: PolyForm<S>,
    finv: PolyForm<S>,
    condition: S,
}

impl<S: Scalar> GaugeElement<S> {
    pub fn new(f: PolyForm<S>, finv: PolyForm<S>) -> Result<Self> {
        f.check_compatible(&finv)?;
        for g in [&f, &finv] {
            if g.terms.keys().any(|(m, d)| *m != 0 || *d != 0) {
                return Err(Error::Gauge(
                    "gauge elements are functions with degree-0 values".into(),
                ));
            }
        }
        let id = PolyForm::identity(f.domain(), f.space());
        let scale = S::one().max(f.max_coefficient()).max(finv.max_coefficient());
        let tol = S::of(1e-12) * scale * scale;
        for prod in [f.wedge(&finv)?, finv.wedge(&f)?] {
            if prod.sub(&id)?.max_coefficient() > tol {
                return Err(Error::Gauge("supplied inverse does not invert f".into()));
            }
        }
        let mut condition = S::one();
        let grid: Vec<(Vec<S>, S)> = if f.domain().dim() == 0 {
            vec![(Vec::new(), S::one())]
        } else {
            f.domain().grid(5)
        };
        for (p, _) in grid {
            let m = f.evaluate(&p)?.remove(&0).unwrap_or_else(|| Mat::zeros(f.dim(), f.dim()));
            let sv = m.svd(false, false).singular_values;
            let (lo, hi) = sv
                .iter()
                .fold((S::max_value().expect("bounded"), S::zero()), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            let c = if lo == S::zero() { S::max_value().expect("bounded") } else { hi / lo };
            condition = condition.max(c);
        }
        if condition > S::of(COND_MAX) {
            return Err(Error::Gauge(format!(
                "condition number {:e} exceeds {COND_MAX:e}",
                condition.f64()
            )));
        }
        Ok(Self { f, finv, condition })
    }

    pub fn constant(domain: Domain, g: &GradedMap<S>, ginv: &GradedMap<S>) -> Result<Self> {
        Self::new(PolyForm::constant_map(domain, g)?, PolyForm::constant_map(domain, ginv)?)
    }

    pub fn f(&self) -> &PolyForm<S> {
        &self.f
    }

    pub fn inverse(&self) -> &PolyForm<S> {
        &self.finv
    }

    pub fn condition(&self) -> S {
        self.condition
    }

    /// Value at a point of the domain.
    pub fn at(&self, p: &[S]) -> Result<Mat<S>> {
        Ok(self
            .f
            .evaluate(p)?
            .remove(&0)
            .unwrap_or_else(|| Mat::zeros(self.f.dim(), self.f.dim())))
    }

    /// `f g` with inverse `g^{-1} f^{-1}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        Self::new(self.f.wedge(&other.f)?, other.finv.wedge(&self.finv)?)
    }

    /// `u_f = f^{-1} df`.
    pub fn maurer_cartan_form(&self) -> PolyForm<S> {
        self.finv
            .wedge(&self.f.exterior_derivative())
            .expect("same domain")
    }
}

/// `ω • f = f^{-1} ω f + f^{-1} df`.
pub fn gauge_act<S: Scalar>(
    omega: &SuperconnectionMC<S>,
    g: &GaugeElement<S>,
) -> Result<SuperconnectionMC<S>> {
    let conj = g.finv.wedge(omega.form())?.wedge(&g.f)?;
    let out = conj.add(&g.maurer_cartan_form())?;
    let residual = mc_residual(&out);
    if residual > omega.residual() + S::of(MC_STRICT) {
        return Err(Error::Invariant(format!(
            "gauge action raised the MC residual to {:e}",
            residual.f64()
        )));
    }
    Ok(SuperconnectionMC { form: out, residual })
}
