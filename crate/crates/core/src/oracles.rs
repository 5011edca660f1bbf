//! Ground truth computed without the iterated-integral machinery: RK4
//! transport, closed-form monomial integrals over ordered simplices and the
//! matrix exponential.

use crate::error::{Error, Result};
use crate::forms::{Domain, PolyForm};
use crate::poly::MatPoly;
use crate::scalar::{Mat, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `dH/dt = a(t) H`.
    Forward,
    /// `dH/dt = a(1-t) H`, the orientation matching simplex holonomies.
    Reversed,
}

/// Linear matrix ODE on `[0,1]` with polynomial coefficient.
#[derive(Debug, Clone)]
pub struct TransportProblem<S: Scalar> {
    pub a: MatPoly<S>,
    pub direction: Direction,
}

impl<S: Scalar> TransportProblem<S> {
    pub fn new(a: MatPoly<S>, direction: Direction) -> Result<Self> {
        if a.nvars != 1 || a.rows != a.cols {
            return Err(Error::Dimension(
                "transport needs a square matrix polynomial in one variable".into(),
            ));
        }
        Ok(Self { a, direction })
    }

    /// Reads `ω = a(t) dt` on `Δ_1` and sets up the reversed problem.
    pub fn from_connection(omega: &PolyForm<S>) -> Result<Self> {
        if omega.domain() != Domain::Simplex(1) {
            return Err(Error::Domain("transport oracle needs a form on Δ_1".into()));
        }
        let n = omega.dim();
        let mut a = MatPoly::zero(1, n, n);
        for ((mask, _), p) in omega.terms() {
            if *mask == 1 {
                a = a.add(p);
            }
        }
        Self::new(a, Direction::Reversed)
    }

    fn coeff(&self, t: S) -> Mat<S> {
        let s = match self.direction {
            Direction::Forward => t,
            Direction::Reversed => S::one() - t,
        };
        self.a.eval(&[s])
    }

    fn rk4(&self, steps: usize) -> Mat<S> {
        let n = self.a.rows;
        let h = S::one() / S::of_usize(steps);
        let two = S::of(2.0);
        let six = S::of(6.0);
        let mut y = Mat::identity(n, n);
        for i in 0..steps {
            let t = S::of_usize(i) * h;
            let a0 = self.coeff(t);
            let am = self.coeff(t + h / two);
            let a1 = self.coeff(t + h);
            let k1 = &a0 * &y;
            let k2 = &am * (&y + &k1 * (h / two));
            let k3 = &am * (&y + &k2 * (h / two));
            let k4 = &a1 * (&y + &k3 * h);
            y += (k1 + (k2 + k3) * two + k4) * (h / six);
        }
        y
    }
}

/// Transport solution with an error estimate.
#[derive(Debug, Clone)]
pub struct OdeSolution<S: Scalar> {
    pub value: Mat<S>,
    /// Richardson estimate `‖H_{2N} - H_N‖ / 15` of the error of `H_{2N}`.
    pub error_estimate: S,
}

/// Classic RK4 with `steps` and `2·steps` steps; returns the Richardson
/// extrapolation and the estimate.
pub fn parallel_transport_ode<S: Scalar>(p: &TransportProblem<S>, steps: usize) -> Result<OdeSolution<S>> {
    if steps < 16 {
        return Err(Error::Domain(format!("need at least 16 steps, got {steps}")));
    }
    let coarse = p.rk4(steps);
    let fine = p.rk4(2 * steps);
    let diff = &fine - &coarse;
    let fifteen = S::of(15.0);
    let error_estimate = diff.iter().fold(S::zero(), |m, v| m.max(v.abs())) / fifteen;
    let value = &fine + diff / fifteen;
    Ok(OdeSolution { value, error_estimate })
}

/// `∫_{1 ≥ t_1 ≥ … ≥ t_k ≥ 0} t^α = Π_i 1 / Σ_{m ≥ i} (α_m + 1)`.
pub fn ordered_monomial_integral(alpha: &[u32]) -> f64 {
    let mut acc = 1.0;
    let mut tail = 0.0;
    for &a in alpha.iter().rev() {
        tail += a as f64 + 1.0;
        acc /= tail;
    }
    acc
}

/// Exact integral of a top form over `Δ_k`, `k ≤ 3`, with the standard
/// orientation `dt_1 ∧ … ∧ dt_k`.
pub fn brute_simplex_integral<S: Scalar>(form: &PolyForm<S>) -> Result<Mat<S>> {
    let Domain::Simplex(k) = form.domain() else {
        return Err(Error::Domain("brute integral runs over simplices".into()));
    };
    if k > 3 {
        return Err(Error::Dimension(format!("brute integral supports k ≤ 3, got {k}")));
    }
    let top: u32 = (1u32 << k) - 1;
    let n = form.dim();
    let mut out = Mat::zeros(n, n);
    for ((mask, _), p) in form.terms() {
        if *mask != top {
            continue;
        }
        for (e, m) in &p.terms {
            out += m * S::of(ordered_monomial_integral(e));
        }
    }
    Ok(out)
}

/// Matrix exponential (Padé with scaling and squaring).
pub fn expm<S: Scalar>(a: &Mat<S>) -> Mat<S> {
    a.clone().exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{GradedMap, GradedVectorSpace};

    fn constant(m: Mat<f64>) -> MatPoly<f64> {
        MatPoly::constant(1, m)
    }

    #[test]
    fn zero_connection_is_identity() {
        let p = TransportProblem::new(MatPoly::<f64>::zero(1, 3, 3), Direction::Reversed).unwrap();
        let h = parallel_transport_ode(&p, 16).unwrap();
        assert_eq!(h.value, Mat::identity(3, 3));
    }

    #[test]
    fn nilpotent_constant_connection() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let p = TransportProblem::new(constant(a.clone()), Direction::Reversed).unwrap();
        let h = parallel_transport_ode(&p, 16).unwrap().value;
        let want = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((&h - &want).amax() < 1e-14);
        assert!((expm(&a) - want).amax() < 1e-14);
    }

    #[test]
    fn diagonal_linear_connection() {
        let mut a = MatPoly::zero(1, 2, 2);
        a.add_term(vec![1], Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
        let p = TransportProblem::new(a, Direction::Forward).unwrap();
        let h = parallel_transport_ode(&p, 64).unwrap();
        assert!((h.value[(0, 0)] - 0.5f64.exp()).abs() < 1e-12);
        assert!((h.value[(1, 1)] - 1f64.exp()).abs() < 1e-12);
        assert!(h.error_estimate < 1e-9);
    }

    #[test]
    fn halving_steps_is_stable() {
        let mut a = MatPoly::zero(1, 2, 2);
        a.add_term(vec![0], Mat::from_row_slice(2, 2, &[0.1, -0.7, 0.4, 0.3]));
        a.add_term(vec![2], Mat::from_row_slice(2, 2, &[-0.5, 0.2, 0.9, -0.1]));
        let p = TransportProblem::new(a, Direction::Reversed).unwrap();
        let h1 = parallel_transport_ode(&p, 64).unwrap().value;
        let h2 = parallel_transport_ode(&p, 128).unwrap().value;
        assert!((h1 - h2).amax() < 1e-9);
    }

    #[test]
    fn too_few_steps_rejected() {
        let p = TransportProblem::new(MatPoly::<f64>::zero(1, 1, 1), Direction::Forward).unwrap();
        assert!(parallel_transport_ode(&p, 8).is_err());
    }

    #[test]
    fn simplex_monomials() {
        assert_eq!(ordered_monomial_integral(&[0, 0]), 0.5);
        assert!((ordered_monomial_integral(&[1, 0]) - 1.0 / 3.0).abs() < 1e-16);
        assert!((ordered_monomial_integral(&[0, 0, 0]) - 1.0 / 6.0).abs() < 1e-16);
        let v = GradedVectorSpace::concentrated(0, 1);
        let one = GradedMap::<f64>::identity(&v);
        let f = PolyForm::from_graded_term(Domain::Simplex(2), &v, &[1, 2], 0, &[(vec![1, 0], one)]).unwrap();
        assert!((brute_simplex_integral(&f).unwrap()[(0, 0)] - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn brute_matches_duffy_quadrature() {
        let rule = crate::quad::duffy_simplex_rule::<f64>(3, 6);
        for alpha in [[0, 0, 0], [2, 1, 0], [1, 3, 2], [0, 0, 5]] {
            let q: f64 = rule
                .iter()
                .map(|(t, w)| w * crate::poly::monomial(&alpha, t))
                .sum();
            assert!((q - ordered_monomial_integral(&alpha)).abs() < 1e-12);
        }
    }
}
