//! Scalar abstraction for the linear algebra layer.
//!
//! Sparse/dense storage, factorizations and GMRES are written once against
//! [`Scalar`] and used with `f64` (reference-element algebra, real FE
//! matrices) and `Complex64` (the Morse-Ingard system).

use std::fmt::Debug;
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, NumAssign, Zero};

pub trait Scalar:
    Copy + Debug + PartialEq + Send + Sync + NumAssign + std::ops::Neg<Output = Self> + Sum + 'static
{
    type Real: Float + NumAssign + Debug + Send + Sync + Sum + 'static;

    fn conj(self) -> Self;
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn from_f64(v: f64) -> Self;
    fn is_finite(self) -> bool;

    fn modulus_sqr(self) -> Self::Real {
        let m = self.modulus();
        m * m
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn modulus(self) -> Self::Real {
                self.abs()
            }
            #[inline]
            fn from_real(r: Self::Real) -> Self {
                r
            }
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

macro_rules! impl_complex {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            type Real = $t;
            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn modulus(self) -> Self::Real {
                self.norm()
            }
            #[inline]
            fn modulus_sqr(self) -> Self::Real {
                self.norm_sqr()
            }
            #[inline]
            fn from_real(r: Self::Real) -> Self {
                Complex::new(r, <$t>::zero())
            }
            #[inline]
            fn from_f64(v: f64) -> Self {
                Complex::new(v as $t, <$t>::zero())
            }
            #[inline]
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
impl_complex!(f32);
impl_complex!(f64);

/// Hermitian inner product `sum conj(a_i) b_i`.
pub fn dot_conj<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T::Real {
    a.iter().map(|x| x.modulus_sqr()).sum::<T::Real>().sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn complex_dot_conjugates_first_argument() {
        let a = [Complex64::new(0.0, 1.0)];
        let b = [Complex64::new(0.0, 1.0)];
        assert_eq!(dot_conj(&a, &b), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn real_and_single_precision_share_the_interface() {
        assert_eq!(norm2(&[3.0f32, 4.0]), 5.0);
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        assert_eq!(Complex::<f32>::from_f64(2.0), Complex::new(2.0f32, 0.0));
    }
}
