//! Multivariate polynomials with scalar or matrix coefficients.

use std::collections::BTreeMap;

use crate::scalar::{Mat, Scalar};

pub type Exponent = Vec<u32>;

/// Scalar polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<S: Scalar> {
    pub nvars: usize,
    pub terms: BTreeMap<Exponent, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// `c_0 + Σ_j c_j s_j`.
    pub fn affine(nvars: usize, c0: S, lin: &[S]) -> Self {
        let mut p = Self::constant(nvars, c0);
        for (j, &c) in lin.iter().enumerate() {
            let mut e = vec![0; nvars];
            e[j] = 1;
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, e: Exponent, c: S) {
        if c == S::zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert(S::zero());
        *slot += c;
        if *slot == S::zero() {
            self.terms.remove(&e);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, *ca * *cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(self.nvars, S::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }
}

/// `x^e` for an exponent vector.
pub fn monomial<S: Scalar>(e: &[u32], x: &[S]) -> S {
    e.iter()
        .zip(x)
        .fold(S::one(), |acc, (&p, &v)| acc * v.powi(p as i32))
}

/// Polynomial with dense matrix coefficients of a fixed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly<S: Scalar> {
    pub nvars: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<Exponent, Mat<S>>,
}

impl<S: Scalar> MatPoly<S> {
    pub fn zero(nvars: usize, rows: usize, cols: usize) -> Self {
        Self {
            nvars,
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, m: Mat<S>) -> Self {
        let mut p = Self::zero(nvars, m.nrows(), m.ncols());
        p.add_term(vec![0; nvars], m);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Exponent, m: Mat<S>) {
        debug_assert_eq!(e.len(), self.nvars);
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        match self.terms.get_mut(&e) {
            Some(slot) => {
                *slot += m;
                if slot.iter().all(|v| *v == S::zero()) {
                    self.terms.remove(&e);
                }
            }
            None => {
                if m.iter().any(|v| *v != S::zero()) {
                    self.terms.insert(e, m);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, m) in &other.terms {
            out.add_term(e.clone(), m.clone());
        }
        out
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, self.cols);
        if c == S::zero() {
            return out;
        }
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m * c);
        }
        out
    }

    /// Coefficientwise matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, other.cols);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ma * mb);
            }
        }
        out
    }

    /// `∂/∂x_j` (0-based variable index).
    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[j] -= 1;
            out.add_term(e2, m * S::of(e[j] as f64));
        }
        out
    }

    pub fn eval(&self, x: &[S]) -> Mat<S> {
        let mut out = Mat::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            out += m * monomial(e, x);
        }
        out
    }

    /// Substitutes `x_i = subs[i]`, polynomials in a new set of variables.
    pub fn substitute(&self, subs: &[Poly<S>], new_nvars: usize) -> Self {
        let mut cache: BTreeMap<(usize, u32), Poly<S>> = BTreeMap::new();
        let mut out = Self::zero(new_nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            let mut p = Poly::constant(new_nvars, S::one());
            for (i, &pw) in e.iter().enumerate() {
                if pw == 0 {
                    continue;
                }
                let f = cache
                    .entry((i, pw))
                    .or_insert_with(|| subs[i].pow(pw))
                    .clone();
                p = p.mul(&f);
            }
            for (e2, c) in &p.terms {
                out.add_term(e2.clone(), m * *c);
            }
        }
        out
    }

    /// Highest total degree of a monomial, 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// `Σ ‖M‖_F` over monomials, a bound for the sup norm on `[0,1]^n`.
    pub fn coefficient_bound(&self) -> S {
        self.terms
            .values()
            .fold(S::zero(), |acc, m| acc + m.norm())
    }

    /// Drops monomials whose coefficients are below `tol` in absolute value.
    pub fn pruned(&self, tol: S) -> Self {
        let mut out = Self::zero(self.nvars, self.rows, self.cols);
        for (e, m) in &self.terms {
            if m.iter().any(|v| v.abs() > tol) {
                out.terms.insert(e.clone(), m.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_arithmetic() {
        // (1 + s)^2 = 1 + 2s + s^2
        let p = Poly::<f64>::affine(1, 1.0, &[1.0]).pow(2);
        assert_eq!(p.terms[&vec![0]], 1.0);
        assert_eq!(p.terms[&vec![1]], 2.0);
        assert_eq!(p.terms[&vec![2]], 1.0);
        assert_eq!(monomial(&[2, 1], &[3.0, 2.0]), 18.0);
    }

    #[test]
    fn matrix_polynomial_ops() {
        let a = Mat::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let mut p = MatPoly::zero(2, 2, 2);
        p.add_term(vec![1, 0], a.clone());
        p.add_term(vec![0, 2], Mat::identity(2, 2));
        let x = [0.5, 2.0];
        assert_eq!(p.eval(&x), &a * 0.5 + Mat::identity(2, 2) * 4.0);
        let dp = p.derivative(1);
        assert_eq!(dp.eval(&x), Mat::identity(2, 2) * 4.0);
        let sq = p.mul(&p);
        assert_eq!(sq.eval(&x), p.eval(&x) * p.eval(&x));
        // cancellation removes the monomial
        let z = p.add(&p.scale(-1.0));
        assert!(z.is_zero());
        assert_eq!(p.total_degree(), 2);
    }

    #[test]
    fn substitution_matches_composition() {
        let mut p = MatPoly::<f64>::zero(2, 1, 1);
        p.add_term(vec![2, 1], Mat::from_element(1, 1, 3.0));
        p.add_term(vec![0, 1], Mat::from_element(1, 1, -1.0));
        // x0 = 1 - s, x1 = 0.5 s
        let subs = [Poly::affine(1, 1.0, &[-1.0]), Poly::affine(1, 0.0, &[0.5])];
        let q = p.substitute(&subs, 1);
        for s in [0.0, 0.3, 1.0] {
            let direct = p.eval(&[1.0 - s, 0.5 * s]);
            assert!((q.eval(&[s])[(0, 0)] - direct[(0, 0)]).abs() < 1e-14);
        }
    }
}
