//! Geometry of `Δ_k = {1 ≥ t_1 ≥ … ≥ t_k ≥ 0}` and of the cube families that
//! sweep it: structure maps, the projection `π_k`, the path family `Θ_(k)` and
//! the concatenation `μ_i`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{Mat, Scalar};

const ORDER_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-10;
const ENDPOINT_TOL: f64 = 1e-9;

/// Largest dimension accepted by the geometry routines unless overridden.
pub const DEFAULT_DIM_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<S: Scalar> {
    pub t: Vec<S>,
}

impl<S: Scalar> SimplexPoint<S> {
    pub fn new(t: Vec<S>) -> Result<Self> {
        if !in_simplex(&t, S::of(ORDER_TOL)) {
            return Err(Error::Domain(format!("{t:?} is not an ordered point of Δ_{}", t.len())));
        }
        Ok(Self { t })
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }
}

/// Whether `1 ≥ t_1 ≥ … ≥ t_k ≥ 0` holds up to `tol`.
pub fn in_simplex<S: Scalar>(t: &[S], tol: S) -> bool {
    let mut prev = S::one();
    for &v in t {
        if v > prev + tol {
            return false;
        }
        prev = v;
    }
    prev >= -tol
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubePoint<S: Scalar> {
    pub x: Vec<S>,
}

impl<S: Scalar> CubePoint<S> {
    pub fn new(x: Vec<S>) -> Result<Self> {
        if x.iter().any(|&v| v < S::zero() || v > S::one()) {
            return Err(Error::Domain(format!("{x:?} is not in the unit cube")));
        }
        Ok(Self { x })
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }
}

/// Vertex `v_i = (1,…,1,0,…,0)` of `Δ_k` with `i` leading ones.
pub fn vertex<S: Scalar>(i: usize, k: usize) -> Vec<S> {
    (0..k).map(|j| if j < i { S::one() } else { S::zero() }).collect()
}

/// Affine map `Δ_m → Δ_n`, `t ↦ A t + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSimplexMap<S: Scalar> {
    src: usize,
    tgt: usize,
    a: Mat<S>,
    b: DVector<S>,
}

impl<S: Scalar> AffineSimplexMap<S> {
    /// Checks that every vertex of the source lands in the target simplex.
    pub fn new(a: Mat<S>, b: DVector<S>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "matrix has {} rows, offset has {}",
                a.nrows(),
                b.len()
            )));
        }
        let m = Self {
            src: a.ncols(),
            tgt: a.nrows(),
            a,
            b,
        };
        for p in m.vertex_images() {
            if !in_simplex(&p, S::of(1e-9)) {
                return Err(Error::Domain(format!(
                    "vertex image {p:?} lies outside Δ_{}",
                    m.tgt
                )));
            }
        }
        Ok(m)
    }

    /// The affine map sending `v_j` to `images[j]`, `j = 0..=m`.
    pub fn from_vertex_images(tgt: usize, images: &[Vec<S>]) -> Result<Self> {
        if images.is_empty() || images.iter().any(|p| p.len() != tgt) {
            return Err(Error::Dimension("vertex images have the wrong length".into()));
        }
        let src = images.len() - 1;
        let b = DVector::from_column_slice(&images[0]);
        let a = Mat::from_fn(tgt, src, |r, c| images[c + 1][r] - images[c][r]);
        Self::new(a, b)
    }

    pub fn identity(k: usize) -> Self {
        Self {
            src: k,
            tgt: k,
            a: Mat::identity(k, k),
            b: DVector::zeros(k),
        }
    }

    pub fn source_dim(&self) -> usize {
        self.src
    }

    pub fn target_dim(&self) -> usize {
        self.tgt
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.a
    }

    pub fn offset(&self) -> &DVector<S> {
        &self.b
    }

    pub fn apply(&self, t: &[S]) -> Vec<S> {
        let v = &self.a * DVector::from_column_slice(t) + &self.b;
        v.iter().copied().collect()
    }

    pub fn vertex_images(&self) -> Vec<Vec<S>> {
        (0..=self.src).map(|j| self.apply(&vertex(j, self.src))).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.tgt != self.src {
            return Err(Error::Dimension("affine maps are not composable".into()));
        }
        Ok(Self {
            src: inner.src,
            tgt: self.tgt,
            a: &self.a * &inner.a,
            b: &self.a * &inner.b + &self.b,
        })
    }
}

/// `∂_i : Δ_k → Δ_{k+1}`.
pub fn face_map<S: Scalar>(i: usize, k: usize) -> Result<AffineSimplexMap<S>> {
    if i > k + 1 {
        return Err(Error::Index(format!("face index {i} for Δ_{k} → Δ_{}", k + 1)));
    }
    let mut a = Mat::zeros(k + 1, k);
    let mut b = DVector::zeros(k + 1);
    if i == 0 {
        b[0] = S::one();
        for r in 1..=k {
            a[(r, r - 1)] = S::one();
        }
    } else {
        // output coordinate r (0-based) reads input coordinate r, except the
        // duplicated slot i (1-based) and the appended zero for i = k+1
        for r in 0..=k {
            let src = if r < i { r } else { r - 1 };
            if src < k && !(i == k + 1 && r == k) {
                a[(r, src)] = S::one();
            }
        }
    }
    AffineSimplexMap::new(a, b)
}

/// `ε_i : Δ_k → Δ_{k-1}`, dropping `t_i`.
pub fn degeneracy_map<S: Scalar>(i: usize, k: usize) -> Result<AffineSimplexMap<S>> {
    if i == 0 || i > k {
        return Err(Error::Index(format!("degeneracy index {i} for Δ_{k}")));
    }
    let mut a = Mat::zeros(k - 1, k);
    for r in 0..k - 1 {
        let src = if r + 1 < i { r } else { r + 1 };
        a[(r, src)] = S::one();
    }
    AffineSimplexMap::new(a, DVector::zeros(k - 1))
}

/// `V_i : Δ_i → Δ_k`, `t ↦ (t, 0, …, 0)`; the image spans `v_0 … v_i`.
pub fn back_face<S: Scalar>(i: usize, k: usize) -> Result<AffineSimplexMap<S>> {
    if i > k {
        return Err(Error::Index(format!("back face {i} of Δ_{k}")));
    }
    let a = Mat::from_fn(k, i, |r, c| if r == c { S::one() } else { S::zero() });
    AffineSimplexMap::new(a, DVector::zeros(k))
}

/// `U_i : Δ_i → Δ_k`, `t ↦ (1, …, 1, t)`; the image spans `v_{k-i} … v_k`.
pub fn front_face<S: Scalar>(i: usize, k: usize) -> Result<AffineSimplexMap<S>> {
    if i > k {
        return Err(Error::Index(format!("front face {i} of Δ_{k}")));
    }
    let off = k - i;
    let a = Mat::from_fn(k, i, |r, c| if r == c + off { S::one() } else { S::zero() });
    let b = DVector::from_fn(k, |r, _| if r < off { S::one() } else { S::zero() });
    AffineSimplexMap::new(a, b)
}

/// `π_k(x)_i = max{x_i, …, x_k}`.
pub fn pi_cube_to_simplex<S: Scalar>(x: &[S]) -> SimplexPoint<S> {
    let mut t = x.to_vec();
    for i in (0..t.len().saturating_sub(1)).rev() {
        t[i] = t[i].max(t[i + 1]);
    }
    SimplexPoint { t }
}

/// Where each output coordinate of `Θ_(k)(x)(t)` comes from on a smooth piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Zero,
    /// Cube coordinate `x_l` (1-based, `l < k`).
    X(usize),
    /// The moving coordinate `c_j(t) = x_j (k-j+1-kt)`.
    Moving,
}

/// Smooth piece of the path family: segment index and the source of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaBranch {
    pub k: usize,
    pub segment: usize,
    pub rows: Vec<Source>,
}

fn extended<S: Scalar>(x: &[S]) -> Vec<S> {
    let mut xs = x.to_vec();
    xs.push(S::one());
    xs
}

fn segment_of<S: Scalar>(k: usize, t: S) -> usize {
    let kt = (S::of_usize(k) * t).floor().f64().max(0.0) as usize;
    k.saturating_sub(kt).clamp(1, k)
}

fn moving<S: Scalar>(k: usize, j: usize, xs: &[S], t: S) -> S {
    xs[j - 1] * (S::of_usize(k - j + 1) - S::of_usize(k) * t)
}

fn check_theta_args<S: Scalar>(k: usize, x: &[S], t: S) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("Θ_(k) needs k ≥ 1".into()));
    }
    if x.len() + 1 != k {
        return Err(Error::Dimension(format!(
            "Θ_({k}) takes {} cube coordinates, got {}",
            k - 1,
            x.len()
        )));
    }
    if t < S::zero() || t > S::one() || x.iter().any(|&v| v < S::zero() || v > S::one()) {
        return Err(Error::Domain("time or cube point outside [0,1]".into()));
    }
    Ok(())
}

/// `Θ_(k)(x)(t)`: runs from `v_k` at `t = 0` to `v_0` at `t = 1`, linear on
/// each `[(k-j)/k, (k-j+1)/k]`.
pub fn theta_path<S: Scalar>(k: usize, x: &[S], t: S) -> Result<SimplexPoint<S>> {
    check_theta_args(k, x, t)?;
    let xs = extended(x);
    let j = segment_of(k, t);
    let c = moving(k, j, &xs, t);
    let mut out = vec![S::zero(); k];
    out[j - 1] = c;
    let mut run = c;
    for i in (0..j - 1).rev() {
        run = run.max(xs[i]);
        out[i] = run;
    }
    Ok(SimplexPoint { t: out })
}

/// Branch pattern at `(x, t)`; ties are resolved towards the cube coordinate
/// with the smallest index.
pub fn theta_branch<S: Scalar>(k: usize, x: &[S], t: S) -> ThetaBranch {
    let xs = extended(x);
    let j = segment_of(k, t);
    let c = moving(k, j, &xs, t);
    let mut rows = vec![Source::Zero; k];
    rows[j - 1] = Source::Moving;
    let (mut best, mut src) = (c, Source::Moving);
    for i in (0..j - 1).rev() {
        if xs[i] >= best {
            best = xs[i];
            src = Source::X(i + 1);
        }
        rows[i] = src;
    }
    ThetaBranch { k, segment: j, rows }
}

impl ThetaBranch {
    /// Point and Jacobian (columns `t, x_1, …, x_{k-1}`) on this branch.
    pub fn eval<S: Scalar>(&self, x: &[S], t: S) -> (Vec<S>, Mat<S>) {
        let k = self.k;
        let j = self.segment;
        let xs = extended(x);
        let c = moving(k, j, &xs, t);
        let dc_dt = -S::of_usize(k) * xs[j - 1];
        let dc_dxj = S::of_usize(k - j + 1) - S::of_usize(k) * t;
        let mut p = vec![S::zero(); k];
        let mut jac = Mat::zeros(k, k);
        for (r, s) in self.rows.iter().enumerate() {
            match *s {
                Source::Zero => {}
                Source::X(l) => {
                    p[r] = xs[l - 1];
                    jac[(r, l)] = S::one();
                }
                Source::Moving => {
                    p[r] = c;
                    jac[(r, 0)] = dc_dt;
                    if j < k {
                        jac[(r, j)] = dc_dxj;
                    }
                }
            }
        }
        (p, jac)
    }
}

/// Jacobian `∂(t_1..t_k)/∂(t, x_1..x_{k-1})` of `Θ_(k)` away from its
/// non-smooth locus.
pub fn theta_jacobian<S: Scalar>(k: usize, x: &[S], t: S) -> Result<Mat<S>> {
    check_theta_args(k, x, t)?;
    let tol = S::of(TIE_TOL);
    let kt = S::of_usize(k) * t;
    if (1..k).any(|j| (kt - S::of_usize(j)).abs() < tol) {
        return Err(Error::NonSmooth(format!("t = {t:?} is a segment boundary")));
    }
    let xs = extended(x);
    let j = segment_of(k, t);
    let c = moving(k, j, &xs, t);
    // a row is ambiguous when its maximum is attained twice
    let mut cands = vec![c];
    for i in (0..j - 1).rev() {
        cands.push(xs[i]);
        let mut sorted = cands.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        if sorted.len() > 1 && (sorted[0] - sorted[1]).abs() < tol {
            return Err(Error::NonSmooth(format!(
                "maximum tie in row {} at x = {x:?}, t = {t:?}",
                i + 1
            )));
        }
    }
    Ok(theta_branch(k, x, t).eval(x, t).1)
}

/// Times in `[0,1]` where `Θ_(k)(x)` may fail to be smooth, sorted, with the
/// endpoints included.
pub fn theta_breakpoints<S: Scalar>(k: usize, x: &[S]) -> Vec<S> {
    let xs = extended(x);
    let ks = S::of_usize(k);
    let mut out = vec![S::zero(), S::one()];
    for j in 1..k {
        out.push(S::of_usize(j) / ks);
    }
    for j in 2..=k {
        let xj = xs[j - 1];
        if xj <= S::zero() {
            continue;
        }
        let mut m = S::zero();
        for i in (0..j - 1).rev() {
            m = m.max(xs[i]);
            if m < xj && m > S::zero() {
                // c_j(t) = m
                out.push((S::of_usize(k - j + 1) - m / xj) / ks);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out.dedup_by(|a, b| (*a - *b).abs() <= S::EPS * S::of(16.0));
    out
}

/// `x ↦ (x_1, …, x_{i-1}, v, x_i, …)`, used for the cube faces `∂_i^∓`.
pub fn insert_coordinate<S: Scalar>(x: &[S], i: usize, v: S) -> Vec<S> {
    let mut out = x.to_vec();
    out.insert(i - 1, v);
    out
}

pub type PathFn<'a, S> = Box<dyn Fn(S) -> Vec<S> + Send + Sync + 'a>;

/// `μ_i(α, β)`: first `β` through `U_{k-i}` on `[0, (k-i)/k]`, then `α`
/// through `V_i`.
pub fn mu_concat<'a, S: Scalar>(
    i: usize,
    k: usize,
    alpha: PathFn<'a, S>,
    beta: PathFn<'a, S>,
) -> Result<PathFn<'a, S>> {
    if i == 0 || i >= k {
        return Err(Error::Index(format!("μ_{i} needs 1 ≤ i ≤ k-1, k = {k}")));
    }
    let tol = ENDPOINT_TOL;
    let close = |p: &[S], q: &[S]| p.len() == q.len() && p.iter().zip(q).all(|(a, b)| (*a - *b).abs().f64() <= tol);
    if !close(&alpha(S::zero()), &vertex(i, i)) || !close(&alpha(S::one()), &vertex(0, i)) {
        return Err(Error::Endpoint(format!("α must run from v_{i} to v_0 in Δ_{i}")));
    }
    if !close(&beta(S::zero()), &vertex(k - i, k - i)) || !close(&beta(S::one()), &vertex(0, k - i)) {
        return Err(Error::Endpoint(format!("β must run from v_{} to v_0 in Δ_{}", k - i, k - i)));
    }
    let u = front_face::<S>(k - i, k)?;
    let v = back_face::<S>(i, k)?;
    let ks = S::of_usize(k);
    let split = S::of_usize(k - i) / ks;
    Ok(Box::new(move |t: S| {
        if t <= split {
            u.apply(&beta((ks * t / S::of_usize(k - i)).clamp(S::zero(), S::one())))
        } else {
            v.apply(&alpha((ks / S::of_usize(i) * (t - split)).clamp(S::zero(), S::one())))
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn face_examples() {
        let d0 = face_map::<f64>(0, 1).unwrap();
        assert_eq!(d0.apply(&[0.3]), vec![1.0, 0.3]);
        let d1 = face_map::<f64>(1, 1).unwrap();
        assert_eq!(d1.apply(&[0.3]), vec![0.3, 0.3]);
        let d2 = face_map::<f64>(2, 1).unwrap();
        assert_eq!(d2.apply(&[0.3]), vec![0.3, 0.0]);
        let f = face_map::<f64>(2, 2).unwrap();
        assert_eq!(f.apply(&[0.7, 0.2]), vec![0.7, 0.2, 0.2]);
        assert!(face_map::<f64>(3, 1).is_err());
    }

    #[test]
    fn degeneracy_and_faces_of_points() {
        let e1 = degeneracy_map::<f64>(1, 2).unwrap();
        assert_eq!(e1.apply(&[0.8, 0.3]), vec![0.3]);
        let e2 = degeneracy_map::<f64>(2, 2).unwrap();
        assert_eq!(e2.apply(&[0.8, 0.3]), vec![0.8]);
        assert!(degeneracy_map::<f64>(0, 2).is_err());
        assert!(degeneracy_map::<f64>(3, 2).is_err());
        // faces of Δ_0 are the two vertices of Δ_1
        assert_eq!(face_map::<f64>(0, 0).unwrap().apply(&[]), vec![1.0]);
        assert_eq!(face_map::<f64>(1, 0).unwrap().apply(&[]), vec![0.0]);
    }

    #[test]
    fn back_and_front_faces() {
        let v1 = back_face::<f64>(1, 2).unwrap();
        assert_eq!(v1.apply(&[0.4]), vec![0.4, 0.0]);
        let u1 = front_face::<f64>(1, 2).unwrap();
        assert_eq!(u1.apply(&[0.4]), vec![1.0, 0.4]);
        for i in 0..=3 {
            let v = back_face::<f64>(i, 3)
                .unwrap()
                .compose(&front_face(0, i).unwrap())
                .unwrap();
            assert_eq!(v.apply(&[]), vertex::<f64>(i, 3));
        }
        assert!(back_face::<f64>(4, 3).is_err());
    }

    #[test]
    fn cosimplicial_identities() {
        for k in 0..4 {
            for j in 0..=k + 2 {
                for i in 0..j {
                    let lhs = face_map::<f64>(j, k + 1).unwrap().compose(&face_map(i, k).unwrap()).unwrap();
                    let rhs = face_map::<f64>(i, k + 1).unwrap().compose(&face_map(j - 1, k).unwrap()).unwrap();
                    assert_eq!(lhs, rhs, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn vertex_image_construction() {
        let imgs = vec![vec![1.0, 0.5], vec![0.5, 0.5], vec![0.2, 0.0]];
        let m = AffineSimplexMap::from_vertex_images(2, &imgs).unwrap();
        for (a, b) in m.vertex_images().iter().zip(&imgs) {
            assert!(close(a, b, 1e-15));
        }
        assert!(AffineSimplexMap::from_vertex_images(2, &[vec![0.2, 0.5], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn pi_examples() {
        assert_eq!(pi_cube_to_simplex(&[0.3, 0.8]).t, vec![0.8, 0.8]);
        assert_eq!(pi_cube_to_simplex(&[0.8, 0.3]).t, vec![0.8, 0.3]);
        assert_eq!(pi_cube_to_simplex(&[0.0, 0.0, 0.0]).t, vec![0.0; 3]);
    }

    #[test]
    fn theta_examples() {
        assert!(close(&theta_path(1, &[], 0.3).unwrap().t, &[0.7], 1e-15));
        assert!(close(&theta_path(2, &[0.5], 0.25).unwrap().t, &[0.5, 0.5], 1e-15));
        assert!(close(&theta_path(2, &[0.5], 0.75).unwrap().t, &[0.25, 0.0], 1e-15));
        assert!(theta_path(0, &[], 0.3f64).is_err());
    }

    #[test]
    fn theta_jacobian_examples() {
        for t in [0.1, 0.5, 0.9] {
            let j = theta_jacobian(1, &[], t).unwrap();
            assert_eq!(j[(0, 0)], -1.0);
        }
        let j = theta_jacobian(2, &[0.9], 0.75).unwrap();
        assert!((j[(0, 0)] + 1.8f64).abs() < 1e-14 && j[(1, 0)] == 0.0);
        // (0.5, 0.25) is a tie of x_1 with the moving coordinate
        assert!(matches!(theta_jacobian(2, &[0.5], 0.25), Err(Error::NonSmooth(_))));
        let j = theta_jacobian(2, &[0.5], 0.25 + 1e-3).unwrap();
        assert_eq!(j, Mat::from_row_slice(2, 2, &[0.0, 1.0, -2.0, 0.0]));
        assert!(matches!(theta_jacobian(2, &[0.3], 0.5), Err(Error::NonSmooth(_))));
    }

    fn finite_difference(k: usize, x: &[f64], t: f64) -> Mat<f64> {
        let h = 1e-7;
        let mut out = Mat::zeros(k, k);
        for c in 0..k {
            let (mut xp, mut xm, mut tp, mut tm) = (x.to_vec(), x.to_vec(), t, t);
            if c == 0 {
                tp += h;
                tm -= h;
            } else {
                xp[c - 1] += h;
                xm[c - 1] -= h;
            }
            let p = theta_path(k, &xp, tp).unwrap().t;
            let m = theta_path(k, &xm, tm).unwrap().t;
            for r in 0..k {
                out[(r, c)] = (p[r] - m[r]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 200 {
            let k = rng.random_range(1..=4);
            let x: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.05..0.95)).collect();
            let t = rng.random_range(0.01..0.99);
            let Ok(j) = theta_jacobian(k, &x, t) else { continue };
            // stay clear of kinks for the central differences
            let bps = theta_breakpoints(k, &x);
            if bps.iter().any(|b| (b - t).abs() < 1e-5) {
                continue;
            }
            let fd = finite_difference(k, &x, t);
            assert!((j - fd).abs().max() < 1e-6);
            checked += 1;
        }
    }

    #[test]
    fn endpoint_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for k in 1..=4 {
            for _ in 0..50 {
                let x: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.0..1.0)).collect();
                assert_eq!(theta_path(k, &x, 0.0).unwrap().t, vertex::<f64>(k, k));
                assert_eq!(theta_path(k, &x, 1.0).unwrap().t, vertex::<f64>(0, k));
            }
        }
    }

    #[test]
    fn breakpoints_separate_smooth_pieces() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let k = rng.random_range(1..=4);
            let x: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.0..1.0)).collect();
            let bps = theta_breakpoints(k, &x);
            for w in bps.windows(2) {
                let (a, b) = (w[0], w[1]);
                let br = theta_branch(k, &x, 0.5 * (a + b));
                // the branch formula reproduces the path on the whole piece
                for s in [0.0, 0.3, 0.7, 1.0] {
                    let t = a + s * (b - a);
                    let (p, _) = br.eval(&x, t);
                    assert!(close(&p, &theta_path(k, &x, t).unwrap().t, 1e-12));
                }
            }
        }
    }

    /// Piecewise-linear path sampled at its breakpoints with constant pieces
    /// and collinear joints removed.
    fn reduced_polyline(pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for p in pts {
            if out.last().is_some_and(|q| close(q, &p, 1e-12)) {
                continue;
            }
            if out.len() >= 2 {
                let a = &out[out.len() - 2];
                let b = &out[out.len() - 1];
                let d1: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                let d2: Vec<f64> = p.iter().zip(b).map(|(x, y)| x - y).collect();
                let n1 = d1.iter().map(|v| v * v).sum::<f64>().sqrt();
                let n2 = d2.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot = d1.iter().zip(&d2).map(|(x, y)| x * y).sum::<f64>();
                if (dot - n1 * n2).abs() < 1e-12 {
                    out.pop();
                }
            }
            out.push(p);
        }
        out
    }

    fn polyline<F: Fn(f64) -> Vec<f64>>(f: F, times: &[f64]) -> Vec<Vec<f64>> {
        reduced_polyline(times.iter().map(|&t| f(t)).collect())
    }

    #[test]
    fn face_family_is_a_reparametrization() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for k in 2..=4 {
            for i in 1..k {
                for _ in 0..20 {
                    let x: Vec<f64> = (0..k - 2).map(|_| rng.random_range(0.0..1.0)).collect();
                    let big = insert_coordinate(&x, i, 0.0);
                    let face = face_map::<f64>(i, k - 1).unwrap();
                    let mut times = theta_breakpoints(k, &big);
                    times.extend(theta_breakpoints(k - 1, &x));
                    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let lhs = polyline(|t| theta_path(k, &big, t).unwrap().t, &times);
                    let rhs = polyline(|t| face.apply(&theta_path(k - 1, &x, t).unwrap().t), &times);
                    assert_eq!(lhs.len(), rhs.len());
                    for (a, b) in lhs.iter().zip(&rhs) {
                        assert!(close(a, b, 1e-9));
                    }
                }
            }
        }
    }

    #[test]
    fn concatenation_examples() {
        let th1 = || -> PathFn<'static, f64> { Box::new(|t| theta_path(1, &[], t).unwrap().t) };
        let mu = mu_concat(1, 2, th1(), th1()).unwrap();
        assert_eq!(mu(0.0), vertex::<f64>(2, 2));
        assert_eq!(mu(1.0), vertex::<f64>(0, 2));
        assert_eq!(mu(0.5), vec![1.0, 0.0]);
        let bad: PathFn<'static, f64> = Box::new(|t| vec![t]);
        assert!(matches!(mu_concat(1, 2, bad, th1()), Err(Error::Endpoint(_))));
    }

    proptest! {
        #[test]
        fn concatenation_matches_plus_face(seed in 0u64..10_000, k in 2usize..=4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let i = rng.random_range(1..k);
            let x: Vec<f64> = (0..k - 2).map(|_| rng.random_range(0.0..1.0)).collect();
            let (xa, xb) = (x[..i - 1].to_vec(), x[i - 1..].to_vec());
            let big = insert_coordinate(&x, i, 1.0);
            let alpha: PathFn<f64> = Box::new(move |t| theta_path(i, &xa, t).unwrap().t);
            let beta: PathFn<f64> = Box::new(move |t| theta_path(k - i, &xb, t).unwrap().t);
            let mu = mu_concat(i, k, alpha, beta).unwrap();
            for _ in 0..5 {
                let t: f64 = rng.random_range(0.0..1.0);
                let lhs = theta_path(k, &big, t).unwrap().t;
                prop_assert!(close(&lhs, &mu(t), 1e-9));
            }
        }

        #[test]
        fn theta_lands_in_simplex(seed in 0u64..10_000, k in 1usize..=4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.0..1.0)).collect();
            let t: f64 = rng.random_range(0.0..1.0);
            let p = theta_path(k, &x, t).unwrap();
            prop_assert!(in_simplex(&p.t, 1e-12));
        }
    }
}
