//! Gauss–Legendre rules on `[0,1]`, their simplex versions and the
//! spectral antiderivative matrix used by the nested ordered integrals.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on `[0,1]`, nodes increasing.
///
/// Golub–Welsch: eigenvalues of the Jacobi matrix, weights from the first
/// eigenvector components; nodes are then polished by Newton steps on `P_q`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "Gauss order must be positive");
    let mut jac = DMatrix::<f64>::zeros(q, q);
    for i in 1..q {
        let b = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let mut x = eig.eigenvalues[i];
            for _ in 0..3 {
                let (p, dp) = legendre(q, x);
                x -= p / dp;
            }
            let (_, dp) = legendre(q, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (x, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    let nodes = pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect();
    let weights = pairs.iter().map(|p| 0.5 * p.1).collect();
    (nodes, weights)
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for n in 2..=q {
        let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor Gauss rule pulled to the ordered simplex `1 ≥ t_1 ≥ … ≥ t_m ≥ 0`
/// via `t_1 = u_1`, `t_i = t_{i-1} u_i`.
pub fn duffy_simplex_rule<S: Scalar>(m: usize, q: usize) -> Vec<(Vec<S>, S)> {
    let (xs, ws) = gauss_legendre(q);
    let mut out = Vec::with_capacity(q.pow(m as u32));
    let mut idx = vec![0usize; m];
    loop {
        let mut t = Vec::with_capacity(m);
        let mut w = 1.0;
        let mut prev = 1.0;
        for &j in idx.iter() {
            let u = xs[j];
            w *= ws[j] * prev;
            prev *= u;
            t.push(prev);
        }
        out.push((t.into_iter().map(S::of).collect(), S::of(w)));
        // odometer
        let mut p = 0;
        loop {
            if p == m {
                return out;
            }
            idx[p] += 1;
            if idx[p] < q {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Duffy rule on the triangle `{0 ≤ y ≤ x ≤ 1}` written as points `(x, y)`.
pub fn triangle_rule(q: usize) -> Vec<([f64; 2], f64)> {
    let (xs, ws) = gauss_legendre(q);
    let mut out = Vec::with_capacity(q * q);
    for (i, &u) in xs.iter().enumerate() {
        for (j, &v) in xs.iter().enumerate() {
            out.push(([u, u * v], ws[i] * ws[j] * u));
        }
    }
    out
}

/// Reference panel data: nodes, weights and `Q[i][j] = ∫_0^{x_i} L_j`,
/// the exact antiderivative of the degree-`q-1` interpolant at the nodes.
#[derive(Debug, Clone)]
pub struct Panel<S: Scalar> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
    pub antideriv: Vec<Vec<S>>,
}

impl<S: Scalar> Panel<S> {
    pub fn new(q: usize) -> Self {
        let (xs, ws) = gauss_legendre(q);
        let lagrange = |j: usize, s: f64| -> f64 {
            let mut v = 1.0;
            for (m, &xm) in xs.iter().enumerate() {
                if m != j {
                    v *= (s - xm) / (xs[j] - xm);
                }
            }
            v
        };
        let antideriv = xs
            .iter()
            .map(|&xi| {
                (0..q)
                    .map(|j| {
                        let v: f64 = xs
                            .iter()
                            .zip(&ws)
                            .map(|(&y, &w)| w * lagrange(j, xi * y))
                            .sum();
                        S::of(xi * v)
                    })
                    .collect()
            })
            .collect();
        Self {
            nodes: xs.into_iter().map(S::of).collect(),
            weights: ws.into_iter().map(S::of).collect(),
            antideriv,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}
