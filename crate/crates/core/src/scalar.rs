use nalgebra as na;
use num_traits as nt;

/// Real scalar the whole crate is generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Copy
    + nt::FloatConst
    + nt::FromPrimitive
    + nt::ToPrimitive
    + na::RealField
    + na::Scalar
    + Send
    + Sync
    + std::fmt::Debug
{
    /// Machine epsilon of the type.
    const EPS: Self;

    fn of(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("finite f64")
    }

    fn f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).expect("representable as f64")
    }

    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

macro_rules! impl_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            const EPS: Self = <$f>::EPSILON;
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Dense matrix over the scalar type.
pub type Mat<S> = na::DMatrix<S>;

/// Sign helper: `(-1)^e`.
#[inline]
pub fn sgn(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[inline]
pub fn sgn_s<S: Scalar>(e: i64) -> S {
    if e.rem_euclid(2) == 0 {
        S::one()
    } else {
        -S::one()
    }
}

/// Largest absolute entry, zero for empty matrices.
pub fn max_abs<S: Scalar>(m: &Mat<S>) -> S {
    m.iter().fold(S::zero(), |acc, v| acc.max(v.abs()))
}
