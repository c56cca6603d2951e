//! Seeded samplers for algebra elements.

use crate::algebra::{AlgebraTag, AlgebraValue};
use crate::numerics::{Rational, Real, Scalar};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic random source.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Rational with numerator in `[-9, 9]` and denominator in `[1, 9]`.
    pub fn small_rational(&mut self) -> Rational {
        let n: i64 = self.rng.gen_range(-9..=9);
        let d: i64 = self.rng.gen_range(1..=9);
        Rational::from_ratio(n, d)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Nonzero element with small rational coordinates.
    pub fn rational_value(&mut self, tag: AlgebraTag) -> AlgebraValue<Rational> {
        loop {
            let v = AlgebraValue::new(tag, (0..tag.dim()).map(|_| self.small_rational()).collect());
            if !v.is_zero() {
                return v;
            }
        }
    }

    /// Imaginary element with small rational coordinates (possibly zero).
    pub fn rational_im(&mut self, tag: AlgebraTag) -> AlgebraValue<Rational> {
        let im: Vec<Rational> = (0..tag.im_dim()).map(|_| self.small_rational()).collect();
        AlgebraValue::from_im(tag, &im)
    }

    /// Exact unit element by inverse stereographic projection of a rational point.
    pub fn rational_unit(&mut self, tag: AlgebraTag) -> AlgebraValue<Rational> {
        let v: Vec<Rational> = (0..tag.im_dim()).map(|_| self.small_rational()).collect();
        let n2 = v.iter().fold(<Rational as Zero>::zero(), |a, x| a + x.clone() * x.clone());
        let den = <Rational as One>::one() + n2.clone();
        let mut coords = vec![(<Rational as One>::one() - n2) / den.clone()];
        coords.extend(v.into_iter().map(|x| Rational::from_i64(2) * x / den.clone()));
        AlgebraValue::new(tag, coords)
    }

    /// Gaussian element.
    pub fn float_value<S: Real>(&mut self, tag: AlgebraTag) -> AlgebraValue<S> {
        AlgebraValue::new(tag, (0..tag.dim()).map(|_| S::from_f64(self.normal())).collect())
    }

    /// Gaussian imaginary element scaled by `scale`.
    pub fn float_im<S: Real>(&mut self, tag: AlgebraTag, scale: f64) -> AlgebraValue<S> {
        let im: Vec<S> = (0..tag.im_dim()).map(|_| S::from_f64(scale * self.normal())).collect();
        AlgebraValue::from_im(tag, &im)
    }

    /// Uniformly distributed unit element.
    pub fn unit<S: Real>(&mut self, tag: AlgebraTag) -> AlgebraValue<S> {
        loop {
            let v: Vec<f64> = (0..tag.dim()).map(|_| self.normal()).collect();
            let n = crate::numerics::norm2(&v);
            if n > 1e-3 {
                return AlgebraValue::new(tag, v.iter().map(|x| S::from_f64(x / n)).collect());
            }
        }
    }

    pub fn coords(&mut self, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| scale * self.normal()).collect()
    }
}
