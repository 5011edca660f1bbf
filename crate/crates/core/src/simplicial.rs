//! Finite simplicial sets generated by ordered simplicial complexes,
//! cochains with values in linear maps, representations up to homotopy and
//! the dg-category of their morphisms.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graded::{op_norm, GradedMap, GradedVectorSpace};
use crate::scalar::{max_abs, sgn_s, Mat, Scalar};

/// A simplex as its vertex sequence; degenerate when a vertex repeats.
pub type Simplex = Vec<usize>;

/// `d_j σ`: drop the `j`-th vertex.
pub fn face(sigma: &[usize], j: usize) -> Simplex {
    let mut out = sigma.to_vec();
    out.remove(j);
    out
}

/// `s_i σ`: repeat the `i`-th vertex.
pub fn degeneracy(sigma: &[usize], i: usize) -> Simplex {
    let mut out = sigma.to_vec();
    out.insert(i, sigma[i]);
    out
}

pub fn is_degenerate(sigma: &[usize]) -> bool {
    sigma.windows(2).any(|w| w[0] == w[1])
}

/// Vertices `v_0 … v_i`; the back face `back_i`.
pub fn back(sigma: &[usize], i: usize) -> &[usize] {
    &sigma[..=i]
}

/// Vertices `v_{k-j} … v_k`; the front face `front_j`.
pub fn front(sigma: &[usize], j: usize) -> &[usize] {
    &sigma[sigma.len() - 1 - j..]
}

/// Nondegenerate simplices of an ordered simplicial complex, closed under
/// faces; degeneracies are formal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSimplicialSet {
    n_vertices: usize,
    simplices: Vec<Vec<Simplex>>,
}

impl FiniteSimplicialSet {
    /// Closure of the given strictly increasing vertex lists.
    pub fn from_maximal(n_vertices: usize, maximal: &[Vec<usize>]) -> Result<Self> {
        let mut by_dim: Vec<BTreeSet<Simplex>> = Vec::new();
        let mut stack: Vec<Simplex> = (0..n_vertices).map(|v| vec![v]).collect();
        for s in maximal {
            if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&v| v >= n_vertices) {
                return Err(Error::Index(format!(
                    "simplex {s:?} is not an increasing list of vertices below {n_vertices}"
                )));
            }
            stack.push(s.clone());
        }
        while let Some(s) = stack.pop() {
            let d = s.len() - 1;
            if by_dim.len() <= d {
                by_dim.resize(d + 1, BTreeSet::new());
            }
            if by_dim[d].insert(s.clone()) && d > 0 {
                for j in 0..=d {
                    stack.push(face(&s, j));
                }
            }
        }
        if by_dim.is_empty() {
            by_dim.push(BTreeSet::new());
        }
        Ok(Self {
            n_vertices,
            simplices: by_dim.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// The full simplex `Δ_k` on vertices `0..=k`.
    pub fn standard(k: usize) -> Self {
        Self::from_maximal(k + 1, &[(0..=k).collect()]).expect("valid simplex")
    }

    /// Boundary of the octahedron: vertices `±x, ±y, ±z` numbered
    /// `0..6` as `+x, -x, +y, -y, +z, -z`; one triangle per octant.
    pub fn octahedron() -> Self {
        let mut tri = Vec::new();
        for a in [0, 1] {
            for b in [2, 3] {
                for c in [4, 5] {
                    tri.push(vec![a, b, c]);
                }
            }
        }
        Self::from_maximal(6, &tri).expect("valid complex")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn dim(&self) -> usize {
        self.simplices.len() - 1
    }

    /// Nondegenerate `k`-simplices in lexicographic order.
    pub fn simplices(&self, k: usize) -> &[Simplex] {
        self.simplices.get(k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    pub fn all_simplices(&self) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter().flatten()
    }

    pub fn contains(&self, sigma: &[usize]) -> bool {
        self.simplices(sigma.len().saturating_sub(1))
            .binary_search_by(|s| s.as_slice().cmp(sigma))
            .is_ok()
    }

    /// Checks `d_i d_j = d_{j-1} d_i` for `i < j` and closure under faces.
    pub fn check_simplicial_identities(&self) -> Result<()> {
        for s in self.all_simplices() {
            let k = s.len() - 1;
            for j in 0..=k {
                if k > 0 && !self.contains(&face(s, j)) {
                    return Err(Error::Invariant(format!("face {j} of {s:?} missing")));
                }
                for i in 0..j {
                    if k >= 2 && face(&face(s, j), i) != face(&face(s, i), j - 1) {
                        return Err(Error::Invariant(format!("simplicial identity fails on {s:?}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Cochain of simplex-degree `degree` with dense matrix values; missing
/// simplices carry zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<S: Scalar> {
    pub degree: usize,
    pub values: BTreeMap<Simplex, Mat<S>>,
}

impl<S: Scalar> Cochain<S> {
    pub fn new(degree: usize) -> Self {
        Self { degree, values: BTreeMap::new() }
    }

    /// `𝟏`: the identity on every edge, for a constant fibre of dimension `n`.
    pub fn unit(set: &FiniteSimplicialSet, n: usize) -> Self {
        Self {
            degree: 1,
            values: set.simplices(1).iter().map(|s| (s.clone(), Mat::identity(n, n))).collect(),
        }
    }

    /// Value on a possibly degenerate simplex (normalized: zero there).
    pub fn at(&self, sigma: &[usize]) -> Option<&Mat<S>> {
        if is_degenerate(sigma) {
            return None;
        }
        self.values.get(sigma)
    }

    /// `d_j^* F` on the `(degree+1)`-simplices of `set`.
    pub fn face_pullback(&self, set: &FiniteSimplicialSet, j: usize) -> Self {
        let mut out = Self::new(self.degree + 1);
        for s in set.simplices(self.degree + 1) {
            if let Some(v) = self.at(&face(s, j)) {
                out.values.insert(s.clone(), v.clone());
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        let keys: BTreeSet<&Simplex> = self.values.keys().chain(other.values.keys()).collect();
        let mut worst = S::zero();
        for k in keys {
            let d = match (self.values.get(k), other.values.get(k)) {
                (Some(a), Some(b)) => max_abs(&(a - b)),
                (Some(a), None) | (None, Some(a)) => max_abs(a),
                (None, None) => S::zero(),
            };
            worst = worst.max(d);
        }
        worst
    }
}

/// `(F ∪ F')(σ) = F(back_i σ) F'(front_j σ)`.
pub fn cup<S: Scalar>(a: &Cochain<S>, b: &Cochain<S>, set: &FiniteSimplicialSet) -> Result<Cochain<S>> {
    let (i, j) = (a.degree, b.degree);
    let mut out = Cochain::new(i + j);
    for s in set.simplices(i + j) {
        let (Some(x), Some(y)) = (a.at(back(s, i)), b.at(front(s, j))) else {
            continue;
        };
        if x.ncols() != y.nrows() {
            return Err(Error::Dimension(format!(
                "cup on {s:?}: {:?} cannot follow {:?}",
                x.shape(),
                y.shape()
            )));
        }
        out.values.insert(s.clone(), x * y);
    }
    Ok(out)
}

/// Representation up to homotopy: graded spaces at vertices and the operators
/// `F_k(σ) ∈ Hom^{1-k}(E_{v_k}, E_{v_0})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialRep<S: Scalar> {
    set: FiniteSimplicialSet,
    spaces: Vec<GradedVectorSpace>,
    values: BTreeMap<Simplex, GradedMap<S>>,
    degenerate: BTreeMap<Simplex, GradedMap<S>>,
    unital: bool,
}

impl<S: Scalar> SimplicialRep<S> {
    /// All operators zero except `F_1 = id` on degenerate edges.
    pub fn new(set: &FiniteSimplicialSet, spaces: Vec<GradedVectorSpace>) -> Result<Self> {
        if spaces.len() != set.n_vertices() {
            return Err(Error::Dimension(format!(
                "{} vertex spaces for {} vertices",
                spaces.len(),
                set.n_vertices()
            )));
        }
        Ok(Self {
            set: set.clone(),
            spaces,
            values: BTreeMap::new(),
            degenerate: BTreeMap::new(),
            unital: true,
        })
    }

    /// The trivial representation on a constant space: `F_0 = 0`, `F_1 = id`.
    pub fn trivial(set: &FiniteSimplicialSet, space: &GradedVectorSpace) -> Self {
        let mut rep = Self::new(set, vec![space.clone(); set.n_vertices()]).expect("sizes match");
        for e in set.simplices(1) {
            rep.values.insert(e.clone(), GradedMap::identity(space));
        }
        rep
    }

    pub fn set(&self) -> &FiniteSimplicialSet {
        &self.set
    }

    pub fn space(&self, v: usize) -> &GradedVectorSpace {
        &self.spaces[v]
    }

    pub fn spaces(&self) -> &[GradedVectorSpace] {
        &self.spaces
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    fn check_value(&self, sigma: &[usize], f: &GradedMap<S>) -> Result<()> {
        let k = sigma.len() as i32 - 1;
        let (v0, vk) = (sigma[0], *sigma.last().expect("non-empty"));
        if f.degree() != 1 - k || f.source() != &self.spaces[vk] || f.target() != &self.spaces[v0] {
            return Err(Error::Degree(format!(
                "value on {sigma:?} must be a degree {} map E_{vk} → E_{v0}",
                1 - k
            )));
        }
        Ok(())
    }

    /// Sets `F_k(σ)` for a nondegenerate simplex of the set.
    pub fn set_value(&mut self, sigma: &[usize], f: GradedMap<S>) -> Result<()> {
        if !self.set.contains(sigma) || is_degenerate(sigma) {
            return Err(Error::Index(format!("{sigma:?} is not a nondegenerate simplex of the set")));
        }
        self.check_value(sigma, &f)?;
        self.values.insert(sigma.to_vec(), f);
        Ok(())
    }

    /// Replaces the value on a degenerate simplex; the result is no longer
    /// unital by construction.
    pub fn override_degenerate(&mut self, sigma: &[usize], f: GradedMap<S>) -> Result<()> {
        if !is_degenerate(sigma) {
            return Err(Error::Index(format!("{sigma:?} is not degenerate")));
        }
        self.check_value(sigma, &f)?;
        self.degenerate.insert(sigma.to_vec(), f);
        self.unital = false;
        Ok(())
    }

    /// `F(σ)` for any simplex, degenerate ones included.
    pub fn value(&self, sigma: &[usize]) -> GradedMap<S> {
        let k = sigma.len() as i32 - 1;
        let (v0, vk) = (sigma[0], *sigma.last().expect("non-empty"));
        if is_degenerate(sigma) {
            if let Some(f) = self.degenerate.get(sigma) {
                return f.clone();
            }
            if k == 1 {
                return GradedMap::identity(&self.spaces[v0]);
            }
        } else if let Some(f) = self.values.get(sigma) {
            return f.clone();
        }
        GradedMap::zero(&self.spaces[vk], &self.spaces[v0], 1 - k)
    }

    /// `F_k` as a dense cochain.
    pub fn component(&self, k: usize) -> Cochain<S> {
        Cochain {
            degree: k,
            values: self
                .set
                .simplices(k)
                .iter()
                .map(|s| (s.clone(), self.value(s).to_dense()))
                .collect(),
        }
    }

    /// Left-hand side of the structure equation on `σ`.
    pub fn structure_defect(&self, sigma: &[usize]) -> Mat<S> {
        let k = sigma.len() - 1;
        let rows = self.spaces[sigma[0]].total_dim();
        let cols = self.spaces[sigma[k]].total_dim();
        let mut acc = Mat::zeros(rows, cols);
        for j in 1..k {
            acc += self.value(&face(sigma, j)).to_dense() * sgn_s::<S>(j as i64);
        }
        for j in 0..=k {
            let left = self.value(back(sigma, j)).to_dense();
            let right = self.value(front(sigma, k - j)).to_dense();
            acc += left * right * sgn_s::<S>(j as i64 + 1);
        }
        acc
    }

    /// Largest operator norm of the structure equations over all
    /// nondegenerate simplices.
    pub fn structure_residual(&self) -> S {
        self.set
            .all_simplices()
            .map(|s| op_norm(&self.structure_defect(s)))
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// `F_k(σ) ↦ g_{v_0} F_k(σ) g_{v_k}^{-1}` for degree-0 vertex maps
    /// `g_v: E_v → E'_v` with inverses `ginv`.
    pub fn conjugate(&self, g: &[GradedMap<S>], ginv: &[GradedMap<S>]) -> Result<Self> {
        let n = self.set.n_vertices();
        if g.len() != n || ginv.len() != n {
            return Err(Error::Dimension("one gauge map per vertex".into()));
        }
        let spaces: Vec<GradedVectorSpace> = g.iter().map(|m| m.target().clone()).collect();
        for v in 0..n {
            if g[v].degree() != 0 || g[v].source() != &self.spaces[v] || ginv[v].source() != &spaces[v] {
                return Err(Error::Degree(format!("gauge map at vertex {v} has the wrong type")));
            }
        }
        let twist = |s: &[usize], f: &GradedMap<S>| -> Result<GradedMap<S>> {
            let m = g[s[0]].to_dense() * f.to_dense() * ginv[*s.last().expect("non-empty")].to_dense();
            GradedMap::from_dense(ginv[*s.last().expect("non-empty")].source(), g[s[0]].target(), f.degree(), &m)
        };
        let mut out = Self::new(&self.set, spaces)?;
        for s in self.set.all_simplices() {
            out.values.insert(s.clone(), twist(s, &self.value(s))?);
        }
        for (s, f) in &self.degenerate {
            out.degenerate.insert(s.clone(), twist(s, f)?);
        }
        out.unital = self.unital;
        Ok(out)
    }

    /// Identity morphism of degree 0.
    pub fn identity_morphism(&self) -> MorphismCochain<S> {
        let mut phi = MorphismCochain::new(0);
        for v in 0..self.set.n_vertices() {
            phi.values.insert(vec![v], GradedMap::identity(&self.spaces[v]));
        }
        phi
    }
}

/// `F_1(s_0 x) = id` and `F_k(s_i σ) = 0` on the degenerate simplices
/// obtained by one degeneracy from nondegenerate ones, plus every override.
pub fn unitality_check<S: Scalar>(rep: &SimplicialRep<S>) -> (bool, f64) {
    let mut worst = 0.0f64;
    let mut check = |sigma: &[usize]| {
        let k = sigma.len() - 1;
        let v = rep.value(sigma).to_dense();
        let want = if k == 1 {
            Mat::identity(v.nrows(), v.ncols())
        } else {
            Mat::zeros(v.nrows(), v.ncols())
        };
        worst = worst.max(op_norm(&(v - want)).f64());
    };
    for s in rep.set.all_simplices() {
        for i in 0..s.len() {
            check(&degeneracy(s, i));
        }
    }
    for s in rep.degenerate.keys() {
        check(s);
    }
    (worst == 0.0, worst)
}

/// Degree-`n` morphism: `φ_k(σ) ∈ Hom^{n-k}(E_{v_k}, E'_{v_0})`, normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphismCochain<S: Scalar> {
    pub degree: i32,
    pub values: BTreeMap<Simplex, GradedMap<S>>,
}

impl<S: Scalar> MorphismCochain<S> {
    pub fn new(degree: i32) -> Self {
        Self { degree, values: BTreeMap::new() }
    }

    fn dense(&self, sigma: &[usize], src: &[GradedVectorSpace], tgt: &[GradedVectorSpace]) -> Mat<S> {
        let (v0, vk) = (sigma[0], *sigma.last().expect("non-empty"));
        match self.values.get(sigma) {
            Some(f) if !is_degenerate(sigma) => f.to_dense(),
            _ => Mat::zeros(tgt[v0].total_dim(), src[vk].total_dim()),
        }
    }

    /// Checks the component degrees against the given vertex spaces.
    pub fn validate(&self, src: &SimplicialRep<S>, tgt: &SimplicialRep<S>) -> Result<()> {
        for (s, f) in &self.values {
            let k = s.len() as i32 - 1;
            let (v0, vk) = (s[0], *s.last().expect("non-empty"));
            if f.degree() != self.degree - k || f.source() != src.space(vk) || f.target() != tgt.space(v0) {
                return Err(Error::Degree(format!("component on {s:?} has the wrong type")));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: BTreeSet<&Simplex> = self.values.keys().chain(other.values.keys()).collect();
        let mut worst = 0.0f64;
        for k in keys {
            let d = match (self.values.get(k), other.values.get(k)) {
                (Some(a), Some(b)) => max_abs(&(a.to_dense() - b.to_dense())).f64(),
                (Some(a), None) | (None, Some(a)) => max_abs(&a.to_dense()).f64(),
                (None, None) => 0.0,
            };
            worst = worst.max(d);
        }
        worst
    }
}

fn graded_or_zero<S: Scalar>(
    m: Mat<S>,
    src: &GradedVectorSpace,
    tgt: &GradedVectorSpace,
    degree: i32,
) -> GradedMap<S> {
    GradedMap::from_dense(src, tgt, degree, &m).expect("shapes come from the spaces")
}

/// The differential `𝔇` on `RHom(E, E')`.
pub fn morphism_differential<S: Scalar>(
    phi: &MorphismCochain<S>,
    src: &SimplicialRep<S>,
    tgt: &SimplicialRep<S>,
) -> Result<MorphismCochain<S>> {
    if src.set() != tgt.set() {
        return Err(Error::Dimension("representations live on different simplicial sets".into()));
    }
    phi.validate(src, tgt)?;
    let n = phi.degree;
    let (es, et) = (src.spaces(), tgt.spaces());
    let mut out = MorphismCochain::new(n + 1);
    for s in src.set().all_simplices() {
        let k = s.len() - 1;
        let mut acc = Mat::zeros(et[s[0]].total_dim(), es[s[k]].total_dim());
        for j in 0..=k {
            let i = k - j;
            // F'_j ∪ φ_i
            let a = tgt.value(back(s, j)).to_dense() * phi.dense(front(s, i), es, et);
            acc += a * sgn_s::<S>(j as i64 * n as i64);
            // φ_j ∪ F_i
            let b = phi.dense(back(s, j), es, et) * src.value(front(s, i)).to_dense();
            acc += b * sgn_s::<S>(n as i64 + j as i64 + 1);
        }
        for j in 1..k {
            acc += phi.dense(&face(s, j), es, et) * sgn_s::<S>(j as i64 + n as i64);
        }
        if max_abs(&acc) != S::zero() {
            out.values.insert(s.clone(), graded_or_zero(acc, &es[s[k]], &et[s[0]], n + 1 - k as i32));
        }
    }
    Ok(out)
}

/// `(φ' ∘ φ)_k = Σ_{i+j=k} (-1)^{jn} φ'_j ∪ φ_i` for `φ: E → E'` of degree
/// `n` and `φ': E' → E''`.
pub fn compose_morphisms<S: Scalar>(
    phi2: &MorphismCochain<S>,
    phi: &MorphismCochain<S>,
    e: &SimplicialRep<S>,
    e1: &SimplicialRep<S>,
    e2: &SimplicialRep<S>,
) -> Result<MorphismCochain<S>> {
    phi.validate(e, e1)?;
    phi2.validate(e1, e2)?;
    let n = phi.degree;
    let mut out = MorphismCochain::new(phi2.degree + n);
    for s in e.set().all_simplices() {
        let k = s.len() - 1;
        let mut acc = Mat::zeros(e2.space(s[0]).total_dim(), e.space(s[k]).total_dim());
        for j in 0..=k {
            let i = k - j;
            let a = phi2.dense(back(s, j), e1.spaces(), e2.spaces());
            let b = phi.dense(front(s, i), e.spaces(), e1.spaces());
            acc += a * b * sgn_s::<S>(j as i64 * n as i64);
        }
        if max_abs(&acc) != S::zero() {
            out.values.insert(
                s.clone(),
                graded_or_zero(acc, e.space(s[k]), e2.space(s[0]), out.degree - k as i32),
            );
        }
    }
    Ok(out)
}

/// Maurer–Cartan data `α = Σ α_k`, `α_k(σ) ∈ End^{1-k} V`, on normalized
/// cochains of a simplicial set with constant fibre `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct McCochain<S: Scalar> {
    pub space: GradedVectorSpace,
    pub values: BTreeMap<Simplex, GradedMap<S>>,
}

impl<S: Scalar> McCochain<S> {
    pub fn zero(space: &GradedVectorSpace) -> Self {
        Self { space: space.clone(), values: BTreeMap::new() }
    }

    fn dense(&self, sigma: &[usize]) -> Mat<S> {
        match self.values.get(sigma) {
            Some(f) if !is_degenerate(sigma) => f.to_dense(),
            _ => {
                let n = self.space.total_dim();
                Mat::zeros(n, n)
            }
        }
    }

    /// `δ̄α + α ∪̄ α` on `σ`, with `δ̄ = (-1)^{l+k} δ` on `End^l ⊗ C^k` and
    /// `(a ∪̄ b)(σ) = (-1)^{k(l'+k')} a(back) b(front)`.
    pub fn mc_defect(&self, sigma: &[usize]) -> Mat<S> {
        let k = sigma.len() - 1;
        let n = self.space.total_dim();
        let mut acc = Mat::zeros(n, n);
        if k >= 1 {
            // α_{k-1} has l = 2 - k, cochain degree k - 1
            let sign = sgn_s::<S>((2 - k as i64) + (k as i64 - 1));
            for j in 0..=k {
                acc += self.dense(&face(sigma, j)) * (sign * sgn_s::<S>(j as i64));
            }
        }
        for j in 0..=k {
            // right factor has total degree 1
            let a = self.dense(back(sigma, j));
            let b = self.dense(front(sigma, k - j));
            acc += a * b * sgn_s::<S>(j as i64);
        }
        acc
    }

    pub fn mc_residual(&self, set: &FiniteSimplicialSet) -> S {
        set.all_simplices()
            .map(|s| op_norm(&self.mc_defect(s)))
            .fold(S::zero(), |a, b| a.max(b))
    }
}

/// `F = 𝟏 + α`.
pub fn mc_to_rep<S: Scalar>(alpha: &McCochain<S>, set: &FiniteSimplicialSet) -> Result<SimplicialRep<S>> {
    let mut rep = SimplicialRep::trivial(set, &alpha.space);
    for (s, a) in &alpha.values {
        if is_degenerate(s) {
            continue;
        }
        let f = if s.len() == 2 { a.add(&GradedMap::identity(&alpha.space))? } else { a.clone() };
        rep.set_value(s, f)?;
    }
    Ok(rep)
}

/// `α = F - 𝟏`; needs one fibre for all vertices.
pub fn rep_to_mc<S: Scalar>(rep: &SimplicialRep<S>) -> Result<McCochain<S>> {
    let space = rep.space(0).clone();
    if rep.spaces().iter().any(|v| v != &space) {
        return Err(Error::Dimension("MC dictionary needs a constant fibre".into()));
    }
    let mut alpha = McCochain::zero(&space);
    for s in rep.set().all_simplices() {
        let mut f = rep.value(s);
        if s.len() == 2 {
            f = f.sub(&GradedMap::identity(&space))?;
        }
        if !f.is_zero() {
            alpha.values.insert(s.clone(), f);
        }
    }
    Ok(alpha)
}

/// Betti numbers of `RHom(ℝ, E)` and the dimensions of the cochain spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyReport {
    pub betti: BTreeMap<i32, usize>,
    pub cochain_dims: BTreeMap<i32, usize>,
}

impl CohomologyReport {
    pub fn betti_in(&self, lo: i32, hi: i32) -> Vec<usize> {
        (lo..=hi).map(|d| self.betti.get(&d).copied().unwrap_or(0)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.betti.iter().map(|(d, b)| if d % 2 == 0 { *b as i64 } else { -(*b as i64) }).sum()
    }

    pub fn cochain_euler_characteristic(&self) -> i64 {
        self.cochain_dims.iter().map(|(d, b)| if d % 2 == 0 { *b as i64 } else { -(*b as i64) }).sum()
    }
}

/// Basis slot of a normalized `Hom(ℝ, E)`-cochain: simplex and component of
/// `E_{v_0}` in degree `n - k`.
fn hom_basis<S: Scalar>(rep: &SimplicialRep<S>, n: i32) -> Vec<(Simplex, usize)> {
    let mut out = Vec::new();
    for s in rep.set().all_simplices() {
        let k = s.len() as i32 - 1;
        let space = rep.space(s[0]);
        let d = n - k;
        let off = space.offset(d);
        for c in 0..space.dim(d) {
            out.push((s.clone(), off + c));
        }
    }
    out
}

/// Matrix of `𝔇: RHom^n(ℝ, E) → RHom^{n+1}(ℝ, E)` in the slot bases.
fn differential_matrix<S: Scalar>(rep: &SimplicialRep<S>, unit: &SimplicialRep<S>, n: i32) -> Result<Mat<S>> {
    let src = hom_basis(rep, n);
    let tgt = hom_basis(rep, n + 1);
    let index: BTreeMap<(Simplex, usize), usize> = tgt.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let line = GradedVectorSpace::concentrated(0, 1);
    let mut m = Mat::zeros(tgt.len(), src.len());
    for (col, (s, row)) in src.iter().enumerate() {
        let k = s.len() as i32 - 1;
        let target = rep.space(s[0]);
        let mut dense = Mat::zeros(target.total_dim(), 1);
        dense[(*row, 0)] = S::one();
        let mut phi = MorphismCochain::new(n);
        phi.values.insert(s.clone(), GradedMap::from_dense(&line, target, n - k, &dense)?);
        let dphi = morphism_differential(&phi, unit, rep)?;
        for (t, f) in &dphi.values {
            let v = f.to_dense();
            for r in 0..v.nrows() {
                if v[(r, 0)] != S::zero() {
                    let i = index[&(t.clone(), r)];
                    m[(i, col)] = v[(r, 0)];
                }
            }
        }
    }
    Ok(m)
}

fn numerical_rank<S: Scalar>(m: &Mat<S>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(S::zero(), |a, b| a.max(*b));
    if top == S::zero() {
        return 0;
    }
    let cut = top * S::of(1e-8);
    sv.iter().filter(|v| **v > cut).count()
}

/// Cohomology of the simplicial set with values in `rep`, in every degree
/// where cochains exist, capped at `max_degree`.
pub fn twisted_cohomology<S: Scalar>(rep: &SimplicialRep<S>, max_degree: i32) -> Result<CohomologyReport> {
    let unit = SimplicialRep::trivial(rep.set(), &GradedVectorSpace::concentrated(0, 1));
    let degs: Vec<i32> = rep.spaces().iter().flat_map(|v| v.degrees().collect::<Vec<_>>()).collect();
    let lo = degs.iter().copied().min().unwrap_or(0);
    let hi = (degs.iter().copied().max().unwrap_or(0) + rep.set().dim() as i32).min(max_degree);
    let mut cochain_dims = BTreeMap::new();
    let mut ranks = BTreeMap::new();
    for n in lo..=hi {
        cochain_dims.insert(n, hom_basis(rep, n).len());
        ranks.insert(n, numerical_rank(&differential_matrix(rep, &unit, n)?));
    }
    let mut betti = BTreeMap::new();
    for n in lo..=hi {
        let before = if n > lo { ranks[&(n - 1)] } else { numerical_rank(&differential_matrix(rep, &unit, n - 1)?) };
        betti.insert(n, cochain_dims[&n] - ranks[&n] - before);
    }
    Ok(CohomologyReport { betti, cochain_dims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_term() -> GradedVectorSpace {
        GradedVectorSpace::new([(0, 1), (1, 1)]).unwrap()
    }

    fn phi_map(c: f64) -> GradedMap<f64> {
        let v = two_term();
        GradedMap::from_dense(&v, &v, -1, &Mat::from_row_slice(2, 2, &[0.0, c, 0.0, 0.0])).unwrap()
    }

    #[test]
    fn octahedron_combinatorics() {
        let s = FiniteSimplicialSet::octahedron();
        assert_eq!((s.count(0), s.count(1), s.count(2)), (6, 12, 8));
        s.check_simplicial_identities().unwrap();
        let d3 = FiniteSimplicialSet::standard(3);
        assert_eq!((d3.count(0), d3.count(1), d3.count(2), d3.count(3)), (4, 6, 4, 1));
        assert!(FiniteSimplicialSet::from_maximal(3, &[vec![0, 0, 1]]).is_err());
    }

    #[test]
    fn face_helpers() {
        let s = vec![3, 5, 7];
        assert_eq!(face(&s, 1), vec![3, 7]);
        assert_eq!(degeneracy(&s, 0), vec![3, 3, 5, 7]);
        assert_eq!(back(&s, 1), &[3, 5]);
        assert_eq!(front(&s, 1), &[5, 7]);
        assert!(is_degenerate(&[1, 1]));
    }

    fn random_cochain(rng: &mut ChaCha8Rng, set: &FiniteSimplicialSet, k: usize, n: usize) -> Cochain<f64> {
        Cochain {
            degree: k,
            values: set
                .simplices(k)
                .iter()
                .map(|s| (s.clone(), Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))))
                .collect(),
        }
    }

    #[test]
    fn cup_examples() {
        let set = FiniteSimplicialSet::standard(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cochain(&mut rng, &set, 0, 2);
        let b = random_cochain(&mut rng, &set, 0, 2);
        let c = cup(&a, &b, &set).unwrap();
        assert_eq!(c.values[&vec![1]], &a.values[&vec![1]] * &b.values[&vec![1]]);
        let e = random_cochain(&mut rng, &set, 1, 2);
        let f = random_cochain(&mut rng, &set, 1, 2);
        let ef = cup(&e, &f, &set).unwrap();
        assert_eq!(ef.values[&vec![0, 1, 2]], &e.values[&vec![0, 1]] * &f.values[&vec![1, 2]]);
        // 𝟏 ∪ F = d_0^* F and F ∪ 𝟏 = d_k^* F
        let set3 = FiniteSimplicialSet::standard(3);
        let one = Cochain::unit(&set3, 2);
        for k in 0..3 {
            let g = random_cochain(&mut rng, &set3, k, 2);
            assert_eq!(cup(&one, &g, &set3).unwrap(), g.face_pullback(&set3, 0));
            assert_eq!(cup(&g, &one, &set3).unwrap(), g.face_pullback(&set3, k + 1));
        }
        let bad = random_cochain(&mut rng, &set, 0, 3);
        assert!(cup(&a, &bad, &set).is_err());
    }

    #[test]
    fn cup_is_associative() {
        let set = FiniteSimplicialSet::standard(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (i, j, k) in [(0, 1, 2), (1, 1, 1), (1, 2, 0), (0, 0, 3)] {
            let a = random_cochain(&mut rng, &set, i, 2);
            let b = random_cochain(&mut rng, &set, j, 2);
            let c = random_cochain(&mut rng, &set, k, 2);
            let l = cup(&cup(&a, &b, &set).unwrap(), &c, &set).unwrap();
            let r = cup(&a, &cup(&b, &c, &set).unwrap(), &set).unwrap();
            assert!(l.max_abs_diff(&r) < 1e-14);
        }
    }

    #[test]
    fn trivial_rep_and_perturbation() {
        let set = FiniteSimplicialSet::standard(3);
        let v = two_term();
        let mut rep = SimplicialRep::trivial(&set, &v);
        assert_eq!(rep.structure_residual(), 0.0);
        // a constant degree-1 differential: F_0 = ∂
        let del = GradedMap::from_dense(&v, &v, 1, &Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])).unwrap();
        for x in 0..4 {
            rep.set_value(&[x], del.clone()).unwrap();
        }
        assert_eq!(rep.structure_residual(), 0.0);
        let eps = 1e-3;
        rep.set_value(&[0, 1, 2], phi_map(eps)).unwrap();
        let r = rep.structure_residual();
        assert!(r >= eps / 2.0 && r <= 2.0 * eps, "{r}");
    }

    #[test]
    fn unitality() {
        let set = FiniteSimplicialSet::standard(2);
        let mut rep = SimplicialRep::trivial(&set, &two_term());
        assert_eq!(unitality_check(&rep), (true, 0.0));
        rep.override_degenerate(&[1, 1], GradedMap::identity(&two_term()).scale(2.0)).unwrap();
        assert_eq!(unitality_check(&rep), (false, 1.0));
        assert!(!rep.is_unital());
    }

    fn random_map(rng: &mut ChaCha8Rng, s: &GradedVectorSpace, t: &GradedVectorSpace, d: i32) -> GradedMap<f64> {
        let m = Mat::from_fn(t.total_dim(), s.total_dim(), |_, _| rng.random_range(-1.0..1.0));
        GradedMap::from_dense(s, t, d, &m).unwrap()
    }

    fn random_morphism(
        rng: &mut ChaCha8Rng,
        n: i32,
        src: &SimplicialRep<f64>,
        tgt: &SimplicialRep<f64>,
    ) -> MorphismCochain<f64> {
        let mut phi = MorphismCochain::new(n);
        for s in src.set().all_simplices() {
            let k = s.len() as i32 - 1;
            phi.values.insert(
                s.clone(),
                random_map(rng, src.space(*s.last().unwrap()), tgt.space(s[0]), n - k),
            );
        }
        phi
    }

    /// `F_2 = (δβ) φ` for a random scalar 1-cochain `β`, conjugated by random
    /// invertible diagonal vertex maps.
    fn random_rep(rng: &mut ChaCha8Rng, set: &FiniteSimplicialSet) -> SimplicialRep<f64> {
        let v = two_term();
        let beta: BTreeMap<Simplex, f64> =
            set.simplices(1).iter().map(|s| (s.clone(), rng.random_range(-1.0..1.0))).collect();
        let mut alpha = McCochain::zero(&v);
        for s in set.simplices(2) {
            let c = beta[&face(s, 0)] - beta[&face(s, 1)] + beta[&face(s, 2)];
            alpha.values.insert(s.clone(), phi_map(c));
        }
        let rep = mc_to_rep(&alpha, set).unwrap();
        assert!(rep.structure_residual() < 1e-14);
        let mut g = Vec::new();
        let mut ginv = Vec::new();
        for _ in 0..set.n_vertices() {
            let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            let diag = |x: f64, y: f64| {
                GradedMap::from_dense(&v, &v, 0, &Mat::from_row_slice(2, 2, &[x, 0.0, 0.0, y])).unwrap()
            };
            g.push(diag(a, b));
            ginv.push(diag(1.0 / a, 1.0 / b));
        }
        let rep = rep.conjugate(&g, &ginv).unwrap();
        assert!(rep.structure_residual() < 1e-13);
        rep
    }

    #[test]
    fn identity_morphism_is_closed() {
        let set = FiniteSimplicialSet::standard(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = random_rep(&mut rng, &set);
        let d = morphism_differential(&rep.identity_morphism(), &rep, &rep).unwrap();
        assert!(d.values.values().all(|f| f.max_abs() < 1e-15));
    }

    #[test]
    fn trivial_reps_give_simplicial_coboundary() {
        let set = FiniteSimplicialSet::standard(2);
        let line = GradedVectorSpace::concentrated(0, 1);
        let r = SimplicialRep::<f64>::trivial(&set, &line);
        let mut phi = MorphismCochain::new(1);
        let one = |c: f64| GradedMap::from_dense(&line, &line, 0, &Mat::from_element(1, 1, c)).unwrap();
        phi.values.insert(vec![0, 1], one(1.0));
        phi.values.insert(vec![1, 2], one(2.0));
        phi.values.insert(vec![0, 2], one(5.0));
        let d = morphism_differential(&phi, &r, &r).unwrap();
        // δφ(012) = φ(12) - φ(02) + φ(01) = -2, up to the overall sign (-1)^{n+1}
        let v = d.values[&vec![0, 1, 2]].to_dense()[(0, 0)];
        assert_eq!(v.abs(), 2.0);
    }

    #[test]
    fn mc_dictionary() {
        let set = FiniteSimplicialSet::standard(2);
        let v = two_term();
        let rep = mc_to_rep(&McCochain::<f64>::zero(&v), &set).unwrap();
        assert_eq!(rep, SimplicialRep::trivial(&set, &v));
        let mut alpha = McCochain::zero(&v);
        alpha.values.insert(vec![0, 1, 2], phi_map(0.7));
        let rep = mc_to_rep(&alpha, &set).unwrap();
        assert_eq!(rep.value(&[0, 1, 2]), phi_map(0.7));
        assert_eq!(rep.value(&[0, 1]), GradedMap::identity(&v));
        assert_eq!(rep_to_mc(&rep).unwrap(), alpha);
    }

    fn random_mc_input(rng: &mut ChaCha8Rng, set: &FiniteSimplicialSet, v: &GradedVectorSpace) -> McCochain<f64> {
        let mut alpha = McCochain::zero(v);
        for s in set.all_simplices() {
            let k = s.len() as i32 - 1;
            let f = random_map(rng, v, v, 1 - k);
            if !f.is_zero() {
                alpha.values.insert(s.clone(), f);
            }
        }
        alpha
    }

    #[test]
    fn sphere_cohomology() {
        let set = FiniteSimplicialSet::octahedron();
        let line = GradedVectorSpace::concentrated(0, 1);
        let triv = SimplicialRep::<f64>::trivial(&set, &line);
        let h = twisted_cohomology(&triv, 6).unwrap();
        assert_eq!(h.betti_in(0, 2), vec![1, 0, 1]);
        let v = two_term();
        let plain = SimplicialRep::<f64>::trivial(&set, &v);
        let h = twisted_cohomology(&plain, 6).unwrap();
        assert_eq!(h.betti_in(0, 3), vec![1, 1, 1, 1]);
        assert_eq!(h.euler_characteristic(), h.cochain_euler_characteristic());
        let mut twisted = plain.clone();
        for s in set.simplices(2) {
            let sign = [s[0] == 0, s[1] == 2, s[2] == 4].iter().filter(|b| !**b).count();
            let eps = if sign % 2 == 0 { 1.0 } else { -1.0 };
            twisted.set_value(s, phi_map(eps * std::f64::consts::FRAC_PI_2)).unwrap();
        }
        assert!(twisted.structure_residual() < 1e-15);
        let h = twisted_cohomology(&twisted, 6).unwrap();
        assert_eq!(h.betti_in(0, 3), vec![1, 0, 0, 1]);
        assert_eq!(h.euler_characteristic(), h.cochain_euler_characteristic());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn differential_squares_to_zero(seed in 0u64..10_000, n in -2i32..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = FiniteSimplicialSet::standard(3);
            let src = random_rep(&mut rng, &set);
            let tgt = random_rep(&mut rng, &set);
            let phi = random_morphism(&mut rng, n, &src, &tgt);
            let dd = morphism_differential(&morphism_differential(&phi, &src, &tgt).unwrap(), &src, &tgt).unwrap();
            let worst = dd.values.values().fold(0.0f64, |a, f| a.max(f.max_abs()));
            prop_assert!(worst < 1e-12, "{}", worst);
        }

        #[test]
        fn leibniz_for_composition(seed in 0u64..10_000, n in -1i32..2, m in -1i32..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = FiniteSimplicialSet::standard(3);
            let e = random_rep(&mut rng, &set);
            let e1 = random_rep(&mut rng, &set);
            let e2 = random_rep(&mut rng, &set);
            let phi = random_morphism(&mut rng, n, &e, &e1);
            let phi2 = random_morphism(&mut rng, m, &e1, &e2);
            let lhs = morphism_differential(&compose_morphisms(&phi2, &phi, &e, &e1, &e2).unwrap(), &e, &e2).unwrap();
            let a = compose_morphisms(&morphism_differential(&phi2, &e1, &e2).unwrap(), &phi, &e, &e1, &e2).unwrap();
            let b = compose_morphisms(&phi2, &morphism_differential(&phi, &e, &e1).unwrap(), &e, &e1, &e2).unwrap();
            let mut rhs = a.clone();
            for (s, f) in b.values {
                let f = f.scale(if m % 2 == 0 { 1.0 } else { -1.0 });
                let entry = rhs.values.remove(&s);
                rhs.values.insert(s, match entry { Some(g) => g.add(&f).unwrap(), None => f });
            }
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn identity_is_neutral(seed in 0u64..10_000, n in -1i32..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = FiniteSimplicialSet::standard(2);
            let e = random_rep(&mut rng, &set);
            let e1 = random_rep(&mut rng, &set);
            let phi = random_morphism(&mut rng, n, &e, &e1);
            let left = compose_morphisms(&e1.identity_morphism(), &phi, &e, &e1, &e1).unwrap();
            let right = compose_morphisms(&phi, &e.identity_morphism(), &e, &e, &e1).unwrap();
            prop_assert!(left.max_abs_diff(&phi) < 1e-15);
            prop_assert!(right.max_abs_diff(&phi) < 1e-15);
        }

        #[test]
        fn mc_residual_is_structure_residual(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = FiniteSimplicialSet::standard(3);
            let alpha = random_mc_input(&mut rng, &set, &two_term());
            let rep = mc_to_rep(&alpha, &set).unwrap();
            for s in set.all_simplices() {
                let a = alpha.mc_defect(s);
                let b = rep.structure_defect(s);
                prop_assert!((a + b).amax() < 1e-12);
            }
            prop_assert!((alpha.mc_residual(&set) - rep.structure_residual()).abs() < 1e-12);
            prop_assert_eq!(rep_to_mc(&rep).unwrap(), alpha);
        }
    }
}
