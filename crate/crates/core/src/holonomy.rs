//! Holonomies of flat superconnections on simplices and of chains of
//! morphisms between them, assembled into representations of finite
//! simplicial sets.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::chen::{series_dense, signs, holonomy_series, ChenConfig};
use crate::error::{Error, Result};
use crate::forms::{mask_indices, wedge_mask_sign, Domain, GaugeElement, Mask, PolyForm, SuperconnectionMC};
use crate::graded::{GradedMap, GradedVectorSpace};
use crate::poly::MatPoly;
use crate::scalar::{max_abs, sgn_s, Mat, Scalar};
use crate::simplex::{face_map, AffineSimplexMap};
use crate::simplicial::{FiniteSimplicialSet, Simplex, SimplicialRep};
use crate::verify::{coboundary, cup_value, psi_on_simplex};

/// `Hol(σ, E)` for the fundamental simplex: the holonomy series of `ω`.
/// On a 0-simplex this is the 0-form part of `ω` at the point.
pub fn hol_object<S: Scalar>(omega: &SuperconnectionMC<S>, cfg: &ChenConfig) -> Result<GradedMap<S>> {
    holonomy_series(omega, cfg)
}

/// A `Hom(V_source, V_target)`-valued form on `Δ_k` with polynomial
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkForm<S: Scalar> {
    domain: Domain,
    source: GradedVectorSpace,
    target: GradedVectorSpace,
    terms: BTreeMap<(Mask, i32), MatPoly<S>>,
}

impl<S: Scalar> LinkForm<S> {
    pub fn zero(k: usize, source: &GradedVectorSpace, target: &GradedVectorSpace) -> Self {
        Self {
            domain: Domain::Simplex(k),
            source: source.clone(),
            target: target.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// Adds `coeff ⊗ dt_I` with `coeff` a map of degree `degree`.
    pub fn add_term(&mut self, indices: &[usize], degree: i32, coeff: MatPoly<S>) -> Result<()> {
        let k = self.domain.dim();
        if coeff.nvars != k || coeff.rows != self.target.total_dim() || coeff.cols != self.source.total_dim() {
            return Err(Error::Dimension("link coefficient has the wrong shape".into()));
        }
        if indices.iter().any(|&i| i == 0 || i > k) || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Index(format!("multi-index {indices:?} not increasing in 1..={k}")));
        }
        for m in coeff.terms.values() {
            if GradedMap::off_degree_mass(&self.source, &self.target, degree, m) != S::zero() {
                return Err(Error::Degree(format!("link coefficient leaves degree {degree}")));
            }
        }
        let key = (crate::forms::mask_of(indices), degree);
        let slot = self.terms.entry(key).or_insert_with(|| MatPoly::zero(k, coeff.rows, coeff.cols));
        *slot = slot.add(&coeff);
        Ok(())
    }

    /// Constant 0-form.
    pub fn constant(k: usize, map: &GradedMap<S>) -> Self {
        let mut out = Self::zero(k, map.source(), map.target());
        out.add_term(&[], map.degree(), MatPoly::constant(k, map.to_dense()))
            .expect("well formed");
        out
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn source(&self) -> &GradedVectorSpace {
        &self.source
    }

    pub fn target(&self) -> &GradedVectorSpace {
        &self.target
    }

    /// Form degree plus map degree, if homogeneous.
    pub fn total_degree(&self) -> Option<i32> {
        let mut it = self
            .terms
            .iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|((m, d), _)| mask_indices(*m).len() as i32 + d);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn pullback_affine(&self, map: &AffineSimplexMap<S>) -> Result<Self> {
        // pull back through an endomorphism form on the direct sum
        let total = self.target.direct_sum(&self.source);
        let (rows, cols) = (
            block_positions(&[self.target.clone(), self.source.clone()])[0].clone(),
            block_positions(&[self.target.clone(), self.source.clone()])[1].clone(),
        );
        let embedded = self.embed(&total, &rows, &cols)?;
        let pulled = embedded.pullback_affine(map)?;
        let mut out = Self::zero(map.source_dim(), &self.source, &self.target);
        for ((m, d), p) in pulled.terms() {
            let mut q = MatPoly::zero(p.nvars, rows.len(), cols.len());
            for (e, c) in &p.terms {
                q.add_term(e.clone(), Mat::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])]));
            }
            out.add_term(&mask_indices(*m), *d, q)?;
        }
        Ok(out)
    }

    /// Places the form into the endomorphisms of `total` at the given row and
    /// column positions.
    pub fn embed(&self, total: &GradedVectorSpace, rows: &[usize], cols: &[usize]) -> Result<PolyForm<S>> {
        let n = total.total_dim();
        let mut out = PolyForm::zero(self.domain, total);
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
            out = out.add(&PolyForm::from_dense_term(self.domain, total, &mask_indices(*m), *d, q)?)?;
        }
        Ok(out)
    }
}

/// Position of each summand's basis inside the total basis of the direct
/// sum (which orders by degree, then by summand).
pub fn block_positions(spaces: &[GradedVectorSpace]) -> Vec<Vec<usize>> {
    let total = spaces
        .iter()
        .fold(GradedVectorSpace::zero(), |acc, v| acc.direct_sum(v));
    let mut used: BTreeMap<i32, usize> = BTreeMap::new();
    spaces
        .iter()
        .map(|v| {
            let mut pos = Vec::new();
            for d in v.degrees() {
                let start = total.offset(d) + used.get(&d).copied().unwrap_or(0);
                pos.extend(start..start + v.dim(d));
                *used.entry(d).or_insert(0) += v.dim(d);
            }
            pos
        })
        .collect()
}

/// Flat superconnections `ω⁰ … ωⁿ` on one simplex and connecting forms
/// `ηⁱ ∈ Hom(V_i, V_{i-1}) ⊗ Ω(Δ_k)`.
#[derive(Debug, Clone)]
pub struct MorphismChainDatum<S: Scalar> {
    reps: Vec<SuperconnectionMC<S>>,
    links: Vec<LinkForm<S>>,
    total: GradedVectorSpace,
    positions: Vec<Vec<usize>>,
}

impl<S: Scalar> MorphismChainDatum<S> {
    pub fn new(reps: Vec<SuperconnectionMC<S>>, links: Vec<LinkForm<S>>) -> Result<Self> {
        if reps.is_empty() || links.len() + 1 != reps.len() {
            return Err(Error::Dimension(format!(
                "{} representations need {} links, got {}",
                reps.len(),
                reps.len().saturating_sub(1),
                links.len()
            )));
        }
        let k = reps[0].k();
        for (i, l) in links.iter().enumerate() {
            if l.domain() != Domain::Simplex(k) || reps[i + 1].k() != k {
                return Err(Error::Domain("chain data must live on one simplex".into()));
            }
            if l.source() != reps[i + 1].form().space() || l.target() != reps[i].form().space() {
                return Err(Error::Dimension(format!("link {} does not map V_{} to V_{i}", i + 1, i + 1)));
            }
        }
        let spaces: Vec<GradedVectorSpace> = reps.iter().map(|r| r.form().space().clone()).collect();
        let total = spaces
            .iter()
            .fold(GradedVectorSpace::zero(), |acc, v| acc.direct_sum(v));
        let positions = block_positions(&spaces);
        Ok(Self { reps, links, total, positions })
    }

    pub fn k(&self) -> usize {
        self.reps[0].k()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn reps(&self) -> &[SuperconnectionMC<S>] {
        &self.reps
    }

    pub fn links(&self) -> &[LinkForm<S>] {
        &self.links
    }

    pub fn total_space(&self) -> &GradedVectorSpace {
        &self.total
    }

    pub fn positions(&self) -> &[Vec<usize>] {
        &self.positions
    }

    /// Embeds a `V_b → V_a` form into `End(V_0 ⊕ … ⊕ V_n)`.
    pub fn embed_link(&self, link: &LinkForm<S>, a: usize, b: usize) -> Result<PolyForm<S>> {
        link.embed(&self.total, &self.positions[a], &self.positions[b])
    }

    pub fn embed_rep(&self, i: usize) -> PolyForm<S> {
        self.reps[i]
            .form()
            .embed_block(&self.total, &self.positions[i], &self.positions[i])
    }

    /// `Ω = Σ ωⁱ + Σ ηⁱ`.
    pub fn assemble(&self) -> Result<PolyForm<S>> {
        let mut out = PolyForm::zero(Domain::Simplex(self.k()), &self.total);
        for i in 0..self.reps.len() {
            out = out.add(&self.embed_rep(i))?;
        }
        for (i, l) in self.links.iter().enumerate() {
            out = out.add(&self.embed_link(l, i, i + 1)?)?;
        }
        Ok(out)
    }

    /// `Σ ([ηⁱ]) - k + 1` with `[η] = |η| - 1`.
    pub fn hol_degree(&self) -> Result<i32> {
        let mut d = 1 - self.k() as i32;
        for (i, l) in self.links.iter().enumerate() {
            d += l
                .total_degree()
                .ok_or_else(|| Error::Degree(format!("link {} is not homogeneous", i + 1)))?
                - 1;
        }
        Ok(d)
    }

    pub fn pullback_affine(&self, map: &AffineSimplexMap<S>) -> Result<Self> {
        Self::new(
            self.reps.iter().map(|r| r.pullback_affine(map)).collect::<Result<_>>()?,
            self.links.iter().map(|l| l.pullback_affine(map)).collect::<Result<_>>()?,
        )
    }
}

fn block<S: Scalar>(m: &Mat<S>, rows: &[usize], cols: &[usize]) -> Mat<S> {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `Hol(σ, φ_1 … φ_n)`: the `V_n → V_0` block of the holonomy series of the
/// assembled form.
pub fn hol_morphism_chain<S: Scalar>(d: &MorphismChainDatum<S>, cfg: &ChenConfig) -> Result<GradedMap<S>> {
    let degree = d.hol_degree()?;
    let omega = d.assemble()?;
    let series = series_dense(&omega, cfg)?;
    let n = d.len();
    let m = block(&series.matrix, &d.positions[0], &d.positions[n]);
    let (src, tgt) = (d.reps[n].form().space(), d.reps[0].form().space());
    let slack = GradedMap::off_degree_mass(src, tgt, degree, &m);
    if slack.f64() > 1e3 * cfg.tol.max(series.error_estimate) {
        return Err(Error::Degree(format!(
            "holonomy block has {:e} mass outside degree {degree}",
            slack.f64()
        )));
    }
    GradedMap::from_dense(src, tgt, degree, &m)
}

/// `ψ`-convention series `Σ_N ψ_N(y^{⊗N})` on `[Δ_k]`, without the unit.
pub fn psi_series<S: Scalar>(y: &PolyForm<S>, cfg: &ChenConfig) -> Result<Mat<S>> {
    let Domain::Simplex(k) = y.domain() else {
        return Err(Error::Domain("series need a simplex".into()));
    };
    let v = series_dense(y, cfg)?;
    Ok(v
        .components
        .iter()
        .enumerate()
        .fold(Mat::zeros(y.dim(), y.dim()), |acc, (i, m)| acc + m * signs::psi_bar_sign::<S>(k, i + 1)))
}

fn vertex_point<S: Scalar>(i: usize, k: usize) -> Vec<S> {
    crate::simplex::vertex(i, k)
}

/// Largest violation of the A∞ functor equation for the chain `η¹ … ηⁿ`,
/// over all faces of `Δ_k`.
///
/// Works in the `ψ` conventions with `x = -Ω`: the `V_n → V_0` block of
/// `δA + A ∪ A` against the insertions of the twisted differential and of
/// products of neighbouring links, where `A` is the series of `x`.
pub fn functor_residual<S: Scalar>(d: &MorphismChainDatum<S>, cfg: &ChenConfig) -> Result<S> {
    let k = d.k();
    let n = d.len();
    let neg = -S::one();
    let xr: Vec<PolyForm<S>> = (0..=n).map(|i| d.embed_rep(i).scale(neg)).collect();
    let xl: Vec<PolyForm<S>> = (0..n)
        .map(|i| d.embed_link(&d.links[i], i, i + 1).map(|f| f.scale(neg)))
        .collect::<Result<_>>()?;
    let susp: Vec<i32> = (0..n)
        .map(|i| d.links[i].total_degree().map(|t| t - 1))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Degree("links must be homogeneous".into()))?;
    let prefix = |j: usize| -> i64 { susp[..j].iter().map(|&s| s as i64).sum() };
    let space = d.total.clone();
    let dim = space.total_dim();
    let sum = |links: &[PolyForm<S>]| -> Result<PolyForm<S>> {
        let mut acc = PolyForm::zero(Domain::Simplex(k), &space);
        for f in xr.iter().chain(links) {
            acc = acc.add(f)?;
        }
        Ok(acc)
    };
    let x = sum(&xl)?;
    // sign (-1)^{P_j} on the V_j rows of the middle factor
    let mut middle = Mat::zeros(dim, dim);
    for (j, pos) in d.positions.iter().enumerate() {
        for &p in pos {
            middle[(p, p)] = sgn_s::<S>(prefix(j));
        }
    }
    let on = |y: &PolyForm<S>, verts: &[Vec<S>]| -> Result<Mat<S>> {
        let map = AffineSimplexMap::from_vertex_images(k, verts)?;
        psi_series(&y.pullback_affine(&map)?, cfg)
    };
    let mut rhs_forms: Vec<(PolyForm<S>, S)> = Vec::new();
    for j in 0..n {
        let (a, b) = (&xr[j], &xr[j + 1]);
        let eta = &xl[j];
        let twisted = eta
            .exterior_derivative()
            .scale(neg)
            .add(&a.wedge(eta)?)?
            .add(&eta.wedge(b)?.scale(sgn_s::<S>(susp[j] as i64)))?;
        let mut links = xl.clone();
        links[j] = twisted;
        rhs_forms.push((sum(&links)?, sgn_s::<S>(prefix(j))));
    }
    for j in 0..n.saturating_sub(1) {
        // merge links j and j+1 and drop V_{j+1}
        let mut links = xl.clone();
        links[j] = xl[j].wedge(&xl[j + 1])?;
        links.remove(j + 1);
        let mut reps = xr.clone();
        reps.remove(j + 1);
        let mut acc = PolyForm::zero(Domain::Simplex(k), &space);
        for f in reps.iter().chain(&links) {
            acc = acc.add(f)?;
        }
        rhs_forms.push((acc, sgn_s::<S>(prefix(j + 1))));
    }
    let (rows, cols) = (&d.positions[0], &d.positions[n]);
    let set = FiniteSimplicialSet::standard(k);
    let mut worst = S::zero();
    for sigma in set.all_simplices() {
        let verts: Vec<Vec<S>> = sigma.iter().map(|&i| vertex_point(i, k)).collect();
        let p_max = verts.len() - 1;
        let mut lhs = if p_max == 0 {
            Mat::zeros(dim, dim)
        } else {
            coboundary(&space, &verts, |face| on(&x, face))?
        };
        for p in 0..=p_max {
            let left = on(&x, &verts[..=p])?;
            let right = on(&x, &verts[p..])?;
            lhs += cup_value(&space, p, &(left * &middle), &right);
        }
        let mut rhs = Mat::zeros(dim, dim);
        for (y, s) in &rhs_forms {
            rhs += on(y, &verts)? * *s;
        }
        worst = worst.max(max_abs(&block(&(lhs - rhs), rows, cols)));
    }
    Ok(worst)
}

fn vertex_value<S: Scalar>(f: &PolyForm<S>, p: &[S]) -> Result<Mat<S>> {
    Ok(f.evaluate(p)?.remove(&0).unwrap_or_else(|| Mat::zeros(f.dim(), f.dim())))
}

/// `max_v ‖ψ_1(f)ψ_1(f^{-1}) - 1‖` over the vertices, together with the
/// largest `ψ_2` value on words containing `f` next to a random 1-form
/// (which must vanish).
pub fn gauge_inverse_defect<S: Scalar>(g: &GaugeElement<S>, probe: &PolyForm<S>, cfg: &ChenConfig) -> Result<S> {
    let Domain::Simplex(k) = g.f().domain() else {
        return Err(Error::Domain("gauge elements live on simplices".into()));
    };
    let n = g.f().dim();
    let mut worst = S::zero();
    for i in 0..=k {
        let v = vertex_point::<S>(i, k);
        let a = psi_on_simplex(std::slice::from_ref(g.f()), std::slice::from_ref(&v), cfg)?;
        let b = psi_on_simplex(std::slice::from_ref(g.inverse()), std::slice::from_ref(&v), cfg)?;
        worst = worst.max(max_abs(&(a * b - Mat::identity(n, n))));
    }
    if k >= 1 {
        let edge: Vec<Vec<S>> = (0..2).map(|i| vertex_point::<S>(i, k)).collect();
        for word in [[g.f().clone(), probe.clone()], [probe.clone(), g.f().clone()]] {
            worst = worst.max(max_abs(&psi_on_simplex(&word, &edge, cfg)?));
        }
    }
    Ok(worst)
}

/// `‖ψ(u_f) - u_{ψ_1(f)}‖` on `Δ_1`.
///
/// In the `ψ` conventions the source differential is `-d`, so the
/// Maurer-Cartan element of `f` is `u_f = -f^{-1} df`; on the edge
/// `u_{ψ_1(f)} = f(v_0)^{-1}(f(v_1) - f(v_0))`.
pub fn gauge_pushforward_defect<S: Scalar>(g: &GaugeElement<S>, cfg: &ChenConfig) -> Result<S> {
    if g.f().domain() != Domain::Simplex(1) {
        return Err(Error::Domain("the pushforward identity is checked on Δ_1".into()));
    }
    let u = g.maurer_cartan_form().scale(-S::one());
    let pushed = psi_series(&u, cfg)?;
    let g0 = vertex_value(g.f(), &[S::zero()])?;
    let g1 = vertex_value(g.f(), &[S::one()])?;
    let g0inv = vertex_value(g.inverse(), &[S::zero()])?;
    Ok(max_abs(&(pushed - g0inv * (g1 - g0))))
}

/// `‖(ψ_{u_f})_n(φ_f a_1 … φ_f a_n) - φ_{ψ_1 f}(ψ_n(a_1 … a_n))‖` on `[Δ_k]`,
/// with `φ_f(a) = f^{-1} a f`.
///
/// The twisted component is the corner block of the series of the chain
/// form with `u_f` on the diagonal and `φ_f a_i` above it. The `a_i` are
/// expected to have endomorphism degree 0.
pub fn gauge_intertwining_defect<S: Scalar>(g: &GaugeElement<S>, forms: &[PolyForm<S>], cfg: &ChenConfig) -> Result<S> {
    let Domain::Simplex(k) = g.f().domain() else {
        return Err(Error::Domain("gauge elements live on simplices".into()));
    };
    if forms.is_empty() {
        return Err(Error::Dimension("need at least one form".into()));
    }
    let space = g.f().space().clone();
    let m = forms.len();
    let copies = vec![space.clone(); m + 1];
    let total = copies.iter().fold(GradedVectorSpace::zero(), |acc, v| acc.direct_sum(v));
    let pos = block_positions(&copies);
    let u = g.maurer_cartan_form().scale(-S::one());
    let mut chain = PolyForm::zero(Domain::Simplex(k), &total);
    for p in &pos {
        chain = chain.add(&u.embed_block(&total, p, p))?;
    }
    for (i, a) in forms.iter().enumerate() {
        let conj = g.inverse().wedge(a)?.wedge(g.f())?;
        chain = chain.add(&conj.embed_block(&total, &pos[i], &pos[i + 1]))?;
    }
    let series = psi_series(&chain, cfg)?;
    let lhs = Mat::from_fn(space.total_dim(), space.total_dim(), |r, c| series[(pos[0][r], pos[m][c])]);
    let verts: Vec<Vec<S>> = (0..=k).map(|i| vertex_point::<S>(i, k)).collect();
    let first = vertex_value(g.inverse(), &verts[0])?;
    let last = vertex_value(g.f(), &verts[k])?;
    let rhs = first * psi_on_simplex(forms, &verts, cfg)? * last;
    Ok(max_abs(&(lhs - rhs)))
}

/// Flat superconnections on every nondegenerate simplex of a finite
/// simplicial set, compatible under faces.
#[derive(Debug, Clone)]
pub struct FormValuedComplex<S: Scalar> {
    set: FiniteSimplicialSet,
    spaces: Vec<GradedVectorSpace>,
    forms: BTreeMap<Simplex, SuperconnectionMC<S>>,
    dim_cap: usize,
}

const FACE_TOL: f64 = 1e-12;

impl<S: Scalar> FormValuedComplex<S> {
    pub fn new(
        set: FiniteSimplicialSet,
        spaces: Vec<GradedVectorSpace>,
        forms: BTreeMap<Simplex, SuperconnectionMC<S>>,
    ) -> Result<Self> {
        if spaces.len() != set.n_vertices() {
            return Err(Error::Dimension("one space per vertex".into()));
        }
        for s in set.all_simplices() {
            let w = forms
                .get(s)
                .ok_or_else(|| Error::Index(format!("no superconnection on simplex {s:?}")))?;
            if w.k() != s.len() - 1 {
                return Err(Error::Dimension(format!("form on {s:?} lives on Δ_{}", w.k())));
            }
            if s.iter().any(|&v| w.form().space() != &spaces[v]) {
                return Err(Error::Dimension(format!("form on {s:?} has the wrong fibre")));
            }
        }
        let out = Self { set, spaces, forms, dim_cap: 3 };
        out.check_faces()?;
        Ok(out)
    }

    /// Builds the complex from forms on the maximal simplices, restricting
    /// them to every face.
    pub fn from_top_forms(
        set: FiniteSimplicialSet,
        spaces: Vec<GradedVectorSpace>,
        top: BTreeMap<Simplex, SuperconnectionMC<S>>,
    ) -> Result<Self> {
        let mut forms = top;
        for k in (1..=set.dim()).rev() {
            for s in set.simplices(k) {
                let Some(w) = forms.get(s).cloned() else { continue };
                for i in 0..=k {
                    let f = crate::simplicial::face(s, i);
                    if let std::collections::btree_map::Entry::Vacant(e) = forms.entry(f) {
                        e.insert(w.pullback_affine(&face_map(i, k - 1)?)?);
                    }
                }
            }
        }
        Self::new(set, spaces, forms)
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    pub fn set(&self) -> &FiniteSimplicialSet {
        &self.set
    }

    pub fn form(&self, sigma: &[usize]) -> Option<&SuperconnectionMC<S>> {
        self.forms.get(sigma)
    }

    /// Checks that the restriction of `ω_σ` to its `i`-th face is `ω_{d_i σ}`.
    pub fn check_faces(&self) -> Result<()> {
        for s in self.set.all_simplices() {
            let k = s.len() - 1;
            if k == 0 {
                continue;
            }
            let w = &self.forms[s];
            for i in 0..=k {
                let f = crate::simplicial::face(s, i);
                let pulled = w.form().pullback_affine(&face_map(i, k - 1)?)?;
                let other = self.forms[&f].form();
                let scale = S::one().max(pulled.max_coefficient()).max(other.max_coefficient());
                let diff = pulled.sub(other)?.max_coefficient();
                if diff > S::of(FACE_TOL) * scale {
                    return Err(Error::Invariant(format!(
                        "simplex {s:?}: restriction to face {i} ({f:?}) differs from its form by {:e}",
                        diff.f64()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `F_k(σ) = Hol(σ, E)` on every nondegenerate simplex up to the dimension
/// cap, unital on degenerate ones.
pub fn integrate_rep<S: Scalar>(x: &FormValuedComplex<S>, cfg: &ChenConfig) -> Result<SimplicialRep<S>> {
    let todo: Vec<&Simplex> = x
        .set
        .all_simplices()
        .filter(|s| s.len() - 1 <= x.dim_cap)
        .collect();
    let values: Vec<Result<GradedMap<S>>> = todo
        .par_iter()
        .map(|s| {
            hol_object(&x.forms[*s], cfg).map_err(|e| e.context(&format!("simplex {s:?}")))
        })
        .collect();
    let mut rep = SimplicialRep::new(&x.set, x.spaces.clone())?;
    for (s, v) in todo.into_iter().zip(values) {
        rep.set_value(s, v?)?;
    }
    Ok(rep)
}

/// Finite-dimensional Lie algebra given by structure constants
/// `[e_a, e_b] = Σ_c c[a][b][c] e_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra<S: Scalar> {
    structure: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> LieAlgebra<S> {
    pub fn new(structure: Vec<Vec<Vec<S>>>) -> Result<Self> {
        let n = structure.len();
        if structure.iter().any(|r| r.len() != n || r.iter().any(|c| c.len() != n)) {
            return Err(Error::Dimension("structure constants must be n × n × n".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if (structure[a][b][c] + structure[b][a][c]).abs() > S::of(1e-12) {
                        return Err(Error::Invariant("bracket is not antisymmetric".into()));
                    }
                }
            }
        }
        Ok(Self { structure })
    }

    pub fn abelian(n: usize) -> Self {
        Self { structure: vec![vec![vec![S::zero(); n]; n]; n] }
    }

    /// Basis `(e, f, h)`: `[h,e] = 2e`, `[h,f] = -2f`, `[e,f] = h`.
    pub fn sl2() -> Self {
        let mut c = vec![vec![vec![S::zero(); 3]; 3]; 3];
        let two = S::of(2.0);
        c[2][0][0] = two;
        c[0][2][0] = -two;
        c[2][1][1] = -two;
        c[1][2][1] = two;
        c[0][1][2] = S::one();
        c[1][0][2] = -S::one();
        Self { structure: c }
    }

    pub fn dim(&self) -> usize {
        self.structure.len()
    }

    pub fn bracket(&self, a: usize, b: usize) -> &[S] {
        &self.structure[a][b]
    }
}

/// Representation up to homotopy of a Lie algebra: `∂` of degree 1 and
/// `R_j(e_{a_1} ∧ … ∧ e_{a_j})` of degree `1 - j`, keyed by increasing
/// 0-based index lists.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraRep<S: Scalar> {
    pub space: GradedVectorSpace,
    pub differential: GradedMap<S>,
    pub operators: BTreeMap<Vec<usize>, GradedMap<S>>,
}

impl<S: Scalar> LieAlgebraRep<S> {
    /// An ordinary representation `ρ(e_a)` on a space in degree 0.
    pub fn ordinary(rho: &[Mat<S>]) -> Result<Self> {
        let n = rho.first().map(|m| m.nrows()).unwrap_or(0);
        let space = GradedVectorSpace::concentrated(0, n);
        let mut operators = BTreeMap::new();
        for (a, m) in rho.iter().enumerate() {
            operators.insert(vec![a], GradedMap::from_dense(&space, &space, 0, m)?);
        }
        Ok(Self {
            differential: GradedMap::zero(&space, &space, 1),
            space,
            operators,
        })
    }
}

/// Element of `End V ⊗ Λ𝔤*`, keyed by the bit mask of the `ξ` monomial.
type CeElement<S> = BTreeMap<Mask, Mat<S>>;

/// Residual of `d_CE X + X X = 0` for `X = ∂ ⊗ 1 + Σ R_j(e_I) ⊗ ξ^I`, using
/// `d(e ⊗ α) = (-1)^{|e|} e ⊗ dα` and
/// `(e ⊗ α)(e' ⊗ α') = (-1)^{|α||e'|} e e' ⊗ α α'`.
pub fn ce_mc_residual<S: Scalar>(lie: &LieAlgebra<S>, rep: &LieAlgebraRep<S>) -> Result<S> {
    let n = rep.space.total_dim();
    let g = lie.dim();
    let mut x: Vec<(Mask, i32, Mat<S>)> = vec![(0, 1, rep.differential.to_dense())];
    for (idx, r) in &rep.operators {
        if idx.iter().any(|&a| a >= g) || idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Index(format!("multivector {idx:?} outside Λ𝔤")));
        }
        if r.degree() != 1 - idx.len() as i32 {
            return Err(Error::Degree(format!("R on {idx:?} must have degree {}", 1 - idx.len() as i32)));
        }
        let mask = idx.iter().fold(0u32, |m, &a| m | (1 << a));
        x.push((mask, r.degree(), r.to_dense()));
    }
    let mut out: CeElement<S> = BTreeMap::new();
    let mut put = |mask: Mask, m: Mat<S>| {
        let slot = out.entry(mask).or_insert_with(|| Mat::zeros(n, n));
        *slot += m;
    };
    // dξ^c = -Σ_{a<b} c^c_{ab} ξ^a ξ^b
    for (mask, e_deg, m) in &x {
        let bits: Vec<usize> = (0..g).filter(|a| mask & (1 << a) != 0).collect();
        for (pos, &c) in bits.iter().enumerate() {
            let rest = mask & !(1 << c);
            for a in 0..g {
                for b in a + 1..g {
                    let coeff = lie.bracket(a, b)[c];
                    if coeff == S::zero() {
                        continue;
                    }
                    let pair = (1u32 << a) | (1u32 << b);
                    // ξ^{before} (ξ^a ξ^b) ξ^{after}: move the pair to the front
                    let before: Mask = bits[..pos].iter().fold(0, |m, &i| m | (1 << i));
                    let Some(s1) = wedge_mask_sign(before, pair) else { continue };
                    let Some(s2) = wedge_mask_sign(pair, rest) else { continue };
                    let sign = sgn_s::<S>(pos as i64) * S::of((s1 * s2) as f64) * sgn_s::<S>(*e_deg as i64);
                    put(pair | rest, m * (-coeff * sign));
                }
            }
        }
    }
    for (ma, _, a) in &x {
        for (mb, db, b) in &x {
            let Some(s) = wedge_mask_sign(*ma, *mb) else { continue };
            let koszul = sgn_s::<S>(ma.count_ones() as i64 * *db as i64);
            put(ma | mb, a * b * (S::of(s as f64) * koszul));
        }
    }
    Ok(out.values().fold(S::zero(), |acc, m| acc.max(max_abs(m))))
}

/// `ω = ∂ + Σ_j R_j(θ ∧ … ∧ θ)` for a flat `𝔤`-valued 1-form `θ` given by
/// its scalar components `θ^a` (forms on a 1-dimensional degree-0 space).
pub fn pullback_lie_algebra_simplex<S: Scalar>(
    lie: &LieAlgebra<S>,
    rep: &LieAlgebraRep<S>,
    theta: &[PolyForm<S>],
) -> Result<SuperconnectionMC<S>> {
    let g = lie.dim();
    if theta.len() != g {
        return Err(Error::Dimension(format!("θ has {} components for dim 𝔤 = {g}", theta.len())));
    }
    let dom = theta[0].domain();
    let line = GradedVectorSpace::concentrated(0, 1);
    for t in theta {
        if t.domain() != dom || t.space() != &line || !(t.is_zero() || t.total_degree() == Some(1)) {
            return Err(Error::Degree("θ components must be scalar 1-forms on one simplex".into()));
        }
    }
    // flatness dθ^c + Σ_{a<b} c^c_{ab} θ^a θ^b = 0
    for c in 0..g {
        let mut curv = theta[c].exterior_derivative();
        for a in 0..g {
            for b in a + 1..g {
                let coeff = lie.bracket(a, b)[c];
                if coeff != S::zero() {
                    curv = curv.add(&theta[a].wedge(&theta[b])?.scale(coeff))?;
                }
            }
        }
        if curv.max_coefficient().f64() > 1e-9 {
            return Err(Error::Invariant(format!(
                "θ is not flat: curvature component {c} has size {:e}",
                curv.max_coefficient().f64()
            )));
        }
    }
    let r = ce_mc_residual(lie, rep)?;
    if r.f64() > 1e-9 {
        return Err(Error::Invariant(format!("representation data violates the MC equation by {:e}", r.f64())));
    }
    let n = rep.space.total_dim();
    let mut omega = PolyForm::constant_map(dom, &rep.differential)?;
    for (idx, op) in &rep.operators {
        let mut scalar = PolyForm::identity(dom, &line);
        for &a in idx {
            scalar = scalar.wedge(&theta[a])?;
        }
        let m = op.to_dense();
        for ((mask, _), p) in scalar.terms() {
            let mut q = MatPoly::zero(p.nvars, n, n);
            for (e, c) in &p.terms {
                q.add_term(e.clone(), &m * c[(0, 0)]);
            }
            omega = omega.add(&PolyForm::from_dense_term(dom, &rep.space, &mask_indices(*mask), op.degree(), q)?)?;
        }
    }
    let out = SuperconnectionMC::with_tolerance(omega, S::of(1e-8))?;
    Ok(out)
}
