//! Finite graded vector spaces, homogeneous maps between them and Koszul signs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Mat, Scalar};

/// Degrees outside this window are rejected unless a space is built with
/// [`GradedVectorSpace::with_window`].
pub const DEFAULT_WINDOW: (i32, i32) = (-4, 4);

/// `V = ⊕_k V^k` with finitely many nonzero pieces.
///
/// The total basis is ordered by increasing degree, so dense matrices
/// of maps between spaces use that block order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GradedVectorSpace {
    dims: BTreeMap<i32, usize>,
}

impl GradedVectorSpace {
    pub fn new<I: IntoIterator<Item = (i32, usize)>>(dims: I) -> Result<Self> {
        Self::with_window(dims, DEFAULT_WINDOW)
    }

    pub fn with_window<I: IntoIterator<Item = (i32, usize)>>(
        dims: I,
        window: (i32, i32),
    ) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (d, n) in dims {
            if n == 0 {
                continue;
            }
            if d < window.0 || d > window.1 {
                return Err(Error::Degree(format!(
                    "degree {d} outside window {}..{}",
                    window.0, window.1
                )));
            }
            *out.entry(d).or_insert(0) += n;
        }
        Ok(Self { dims: out })
    }

    /// `ℝ^n` placed in a single degree.
    pub fn concentrated(degree: i32, n: usize) -> Self {
        let mut dims = BTreeMap::new();
        if n > 0 {
            dims.insert(degree, n);
        }
        Self { dims }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dim(&self, degree: i32) -> usize {
        self.dims.get(&degree).copied().unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.dims.keys().copied()
    }

    pub fn dims(&self) -> &BTreeMap<i32, usize> {
        &self.dims
    }

    /// Position of the first basis vector of degree `degree` in the total basis.
    pub fn offset(&self, degree: i32) -> usize {
        self.dims.range(..degree).map(|(_, n)| n).sum()
    }

    /// Degree of every total-basis vector, in basis order.
    pub fn basis_degrees(&self) -> Vec<i32> {
        self.dims
            .iter()
            .flat_map(|(&d, &n)| std::iter::repeat_n(d, n))
            .collect()
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        for (&d, &n) in &other.dims {
            *dims.entry(d).or_insert(0) += n;
        }
        Self { dims }
    }

    /// `s^n V` with `(s^n V)^k = V^{k+n}`.
    pub fn shifted(&self, n: i32) -> Self {
        Self {
            dims: self.dims.iter().map(|(&d, &m)| (d - n, m)).collect(),
        }
    }
}

/// Iterated suspension tag: `Suspension(n)` acts as `s^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suspension(pub i32);

impl Suspension {
    pub fn apply(self, v: &GradedVectorSpace) -> GradedVectorSpace {
        v.shifted(self.0)
    }

    pub fn then(self, other: Suspension) -> Suspension {
        Suspension(self.0 + other.0)
    }

    /// Degree of `s^n x` for `x` of degree `d`.
    pub fn degree_of(self, d: i32) -> i32 {
        d - self.0
    }
}

/// Homogeneous linear map of fixed degree, stored as one block per source degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMap<S: Scalar> {
    source: GradedVectorSpace,
    target: GradedVectorSpace,
    degree: i32,
    blocks: BTreeMap<i32, Mat<S>>,
}

impl<S: Scalar> GradedMap<S> {
    pub fn zero(source: &GradedVectorSpace, target: &GradedVectorSpace, degree: i32) -> Self {
        let blocks = source
            .dims()
            .iter()
            .map(|(&k, &n)| (k, Mat::zeros(target.dim(k + degree), n)))
            .collect();
        Self {
            source: source.clone(),
            target: target.clone(),
            degree,
            blocks,
        }
    }

    pub fn identity(space: &GradedVectorSpace) -> Self {
        let blocks = space
            .dims()
            .iter()
            .map(|(&k, &n)| (k, Mat::identity(n, n)))
            .collect();
        Self {
            source: space.clone(),
            target: space.clone(),
            degree: 0,
            blocks,
        }
    }

    /// Builds a map from explicit blocks; absent blocks are zero.
    pub fn from_blocks(
        source: &GradedVectorSpace,
        target: &GradedVectorSpace,
        degree: i32,
        blocks: BTreeMap<i32, Mat<S>>,
    ) -> Result<Self> {
        let mut out = Self::zero(source, target, degree);
        for (k, b) in blocks {
            let slot = out.blocks.get_mut(&k).ok_or_else(|| {
                Error::Dimension(format!("source has no degree {k} component"))
            })?;
            if slot.shape() != b.shape() {
                return Err(Error::Dimension(format!(
                    "block at source degree {k} has shape {:?}, expected {:?}",
                    b.shape(),
                    slot.shape()
                )));
            }
            *slot = b;
        }
        Ok(out)
    }

    /// Extracts the degree-`degree` part of a dense matrix in total-basis order.
    /// Entries outside the homogeneous blocks are dropped.
    pub fn from_dense(
        source: &GradedVectorSpace,
        target: &GradedVectorSpace,
        degree: i32,
        m: &Mat<S>,
    ) -> Result<Self> {
        if m.nrows() != target.total_dim() || m.ncols() != source.total_dim() {
            return Err(Error::Dimension(format!(
                "dense matrix {:?} does not match {}x{}",
                m.shape(),
                target.total_dim(),
                source.total_dim()
            )));
        }
        let mut out = Self::zero(source, target, degree);
        for (&k, b) in out.blocks.iter_mut() {
            let (r, c) = b.shape();
            if r == 0 {
                continue;
            }
            let ro = target.offset(k + degree);
            let co = source.offset(k);
            *b = m.view((ro, co), (r, c)).into_owned();
        }
        Ok(out)
    }

    /// Largest absolute dense entry lying outside the degree-`degree` blocks.
    pub fn off_degree_mass(
        source: &GradedVectorSpace,
        target: &GradedVectorSpace,
        degree: i32,
        m: &Mat<S>,
    ) -> S {
        let sd = source.basis_degrees();
        let td = target.basis_degrees();
        let mut worst = S::zero();
        for (i, &ti) in td.iter().enumerate() {
            for (j, &sj) in sd.iter().enumerate() {
                if ti != sj + degree {
                    worst = worst.max(m[(i, j)].abs());
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Mat<S> {
        let mut m = Mat::zeros(self.target.total_dim(), self.source.total_dim());
        for (&k, b) in &self.blocks {
            let (r, c) = b.shape();
            if r == 0 || c == 0 {
                continue;
            }
            let ro = self.target.offset(k + self.degree);
            let co = self.source.offset(k);
            m.view_mut((ro, co), (r, c)).copy_from(b);
        }
        m
    }

    pub fn source(&self) -> &GradedVectorSpace {
        &self.source
    }

    pub fn target(&self) -> &GradedVectorSpace {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    /// Block acting on the degree-`k` part of the source.
    pub fn block(&self, k: i32) -> Option<&Mat<S>> {
        self.blocks.get(&k)
    }

    pub fn blocks(&self) -> &BTreeMap<i32, Mat<S>> {
        &self.blocks
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, b) in out.blocks.iter_mut() {
            *b += &other.blocks[k];
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-S::one()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.source != other.source || self.target != other.target || self.degree != other.degree
        {
            return Err(Error::Dimension(
                "maps differ in source, target or degree".into(),
            ));
        }
        Ok(())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> S {
        self.blocks
            .values()
            .fold(S::zero(), |acc, b| acc.max(max_abs(b)))
    }

    /// Operator 2-norm, the maximum over blocks of their spectral norms.
    pub fn op_norm(&self) -> S {
        self.blocks
            .values()
            .filter(|b| b.nrows() > 0 && b.ncols() > 0)
            .fold(S::zero(), |acc, b| acc.max(op_norm(b)))
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|b| b.iter().all(|v| *v == S::zero()))
    }
}

/// Spectral norm of a dense matrix.
pub fn op_norm<S: Scalar>(m: &Mat<S>) -> S {
    if m.nrows() == 0 || m.ncols() == 0 {
        return S::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(S::zero(), |a, v| a.max(*v))
}

/// `g ∘ f`.
pub fn compose_graded<S: Scalar>(g: &GradedMap<S>, f: &GradedMap<S>) -> Result<GradedMap<S>> {
    if f.target != g.source {
        return Err(Error::Dimension(
            "composition: target of f differs from source of g".into(),
        ));
    }
    let degree = f.degree + g.degree;
    let mut out = GradedMap::zero(&f.source, &g.target, degree);
    for (&k, fb) in &f.blocks {
        let mid = k + f.degree;
        if let Some(gb) = g.blocks.get(&mid) {
            out.blocks.insert(k, gb * fb);
        }
    }
    Ok(out)
}

/// Sign of moving a block of symbols of degrees `b` past a block of degrees `a`.
pub fn koszul_sign(a: &[i32], b: &[i32]) -> i32 {
    let sa: i64 = a.iter().map(|&x| x as i64).sum();
    let sb: i64 = b.iter().map(|&x| x as i64).sum();
    if (sa * sb).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign acquired by reordering homogeneous symbols: position `i` of the
/// output holds input symbol `perm[i]`.
pub fn permutation_koszul_sign(degrees: &[i32], perm: &[usize]) -> i32 {
    let mut odd = 0i64;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                odd += (degrees[perm[i]] as i64) * (degrees[perm[j]] as i64);
            }
        }
    }
    if odd.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// `(-1)^{Σ d_i (n-i)}` for shifted degrees `d_1..d_n`.
pub fn desuspension_sign(shifted: &[i32]) -> i32 {
    let n = shifted.len() as i64;
    let e: i64 = shifted
        .iter()
        .enumerate()
        .map(|(i, &d)| d as i64 * (n - 1 - i as i64))
        .sum();
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}
