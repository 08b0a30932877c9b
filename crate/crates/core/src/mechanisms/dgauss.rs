//! The discrete Gaussian distribution over the integers.
//!
//! Sampling is exact: the variance is taken as the exact rational value of its
//! `f64` representation, and every random decision is a Bernoulli trial with a
//! rational (or `exp(-rational)`) success probability resolved with uniform
//! integers. No floating-point arithmetic touches a sample.

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use super::MechanismError;

/// Largest supported variance; keeps the Laplace scale within `u64`.
pub const MAX_SIGMA_SQ: f64 = 1e30;

/// Summation stops once a term falls below this fraction of the running sum.
const NORMALIZER_REL_TOL: f64 = 1e-17;

/// `N_Z(sigma_sq)`: `Pr[X = x] ∝ exp(-x² / 2σ²)` for integer `x`.
#[derive(Debug, Clone)]
pub struct DiscreteGaussian {
    sigma_sq: f64,
    ln_normalizer: f64,
    // sigma_sq == num / den exactly
    num: BigUint,
    den: BigUint,
    // Laplace scale floor(sigma) + 1
    scale: u64,
}

impl DiscreteGaussian {
    pub fn new(sigma_sq: f64) -> Result<Self, MechanismError> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(MechanismError::NonPositiveVariance(sigma_sq));
        }
        if sigma_sq > MAX_SIGMA_SQ {
            return Err(MechanismError::VarianceTooLarge(sigma_sq));
        }
        let exact = BigRational::from_float(sigma_sq).expect("finite float");
        let num = exact.numer().to_biguint().expect("positive");
        let den = exact.denom().to_biguint().expect("positive");
        let floor_sigma = (&num / &den).sqrt();
        let scale = floor_sigma.to_u64().expect("bounded by MAX_SIGMA_SQ") + 1;
        Ok(Self {
            sigma_sq,
            ln_normalizer: normalizer(sigma_sq).ln(),
            num,
            den,
            scale,
        })
    }

    /// The distribution a mechanism with privacy parameter `rho` draws from.
    pub fn for_rho(rho: f64) -> Result<Self, MechanismError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(MechanismError::NonPositiveRho(rho));
        }
        Self::new(1.0 / (2.0 * rho))
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn pmf(&self, x: i64) -> f64 {
        self.ln_pmf(x).exp()
    }

    pub fn ln_pmf(&self, x: i64) -> f64 {
        let x = x as f64;
        -x * x / (2.0 * self.sigma_sq) - self.ln_normalizer
    }

    /// Draws one exact sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        loop {
            let y = discrete_laplace(self.scale, rng);
            // gamma = (|y| - σ²/t)² / (2σ²) with σ² = a/b
            //       = (|y|·t·b - a)² / (2·a·b·t²)
            let t = BigUint::from(self.scale);
            let lhs = BigUint::from(y.unsigned_abs()) * &t * &self.den;
            let diff = if lhs >= self.num {
                lhs - &self.num
            } else {
                &self.num - lhs
            };
            let gamma_num = &diff * &diff;
            let gamma_den = BigUint::from(2u8) * &self.num * &self.den * &t * &t;
            if bernoulli_exp_big(&gamma_num, &gamma_den, rng) {
                return y;
            }
        }
    }
}

/// `Σ_{y∈Z} exp(-y²/2σ²)` by symmetric summation from the centre.
fn normalizer(sigma_sq: f64) -> f64 {
    let mut sum = 1.0;
    let mut y = 1.0f64;
    loop {
        let term = (-y * y / (2.0 * sigma_sq)).exp();
        sum += 2.0 * term;
        if term < NORMALIZER_REL_TOL * sum {
            return sum;
        }
        y += 1.0;
    }
}

/// Bernoulli(num / den) for `num <= den`.
fn bernoulli_small<R: Rng + ?Sized>(num: u128, den: u128, rng: &mut R) -> bool {
    rng.gen_range(0..den) < num
}

/// Bernoulli(exp(-num/den)) with small integer parameters.
fn bernoulli_exp_small<R: Rng + ?Sized>(num: u64, den: u64, rng: &mut R) -> bool {
    let (mut num, den) = (u128::from(num), u128::from(den));
    while num > den {
        if !bernoulli_exp_unit_small(1, 1, rng) {
            return false;
        }
        num -= den;
    }
    bernoulli_exp_unit_small(num, den, rng)
}

/// Bernoulli(exp(-γ)) for γ = num/den in [0, 1]: the parity of the first
/// failure index of Bernoulli(γ/k) trials.
fn bernoulli_exp_unit_small<R: Rng + ?Sized>(num: u128, den: u128, rng: &mut R) -> bool {
    let mut k: u128 = 1;
    while bernoulli_small(num, den * k, rng) {
        k += 1;
    }
    k % 2 == 1
}

fn bernoulli_exp_big<R: Rng + ?Sized>(num: &BigUint, den: &BigUint, rng: &mut R) -> bool {
    let whole = num / den;
    let frac = num - &whole * den;
    let mut i = BigUint::zero();
    while i < whole {
        if !bernoulli_exp_unit_small(1, 1, rng) {
            return false;
        }
        i += 1u8;
    }
    let mut k = BigUint::one();
    loop {
        let d = den * &k;
        if rng.gen_biguint_below(&d) < frac {
            k += 1u8;
        } else {
            break;
        }
    }
    k.bit(0)
}

/// Exact discrete Laplace with integer scale `t`: `Pr[Y = y] ∝ exp(-|y|/t)`.
fn discrete_laplace<R: Rng + ?Sized>(t: u64, rng: &mut R) -> i64 {
    loop {
        let u = rng.gen_range(0..t);
        if !bernoulli_exp_small(u, t, rng) {
            continue;
        }
        let mut v: u64 = 0;
        while bernoulli_exp_small(1, 1, rng) {
            v += 1;
        }
        let x = u + t * v;
        let negative = rng.gen::<bool>();
        if negative && x == 0 {
            continue;
        }
        let x = x as i64;
        return if negative { -x } else { x };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::rng::seeded;

    #[test]
    fn pmf_matches_high_precision_sums() {
        // 1/Σ exp(-y²/2σ²) and exp(-1/2σ²)/Σ, evaluated at 40 digits
        let cases = [
            (1.0, 0, 0.398_942_278_266_861_7),
            (1.0, 1, 0.241_970_723_224_460_6),
            (0.25, 0, 0.786_570_707_041_947_9),
            (0.25, 1, 0.106_450_769_423_144_7),
            (2.34375, 0, 0.260_588_006_348_223_96),
            (2.34375, 1, 0.210_525_609_714_921_26),
        ];
        for (s2, x, want) in cases {
            let d = DiscreteGaussian::new(s2).unwrap();
            assert!((d.pmf(x) - want).abs() < 1e-15, "σ²={s2} x={x}: {}", d.pmf(x));
        }
    }

    #[test]
    fn pmf_symmetric_and_normalized() {
        for s2 in [0.25, 1.0, 2.34375, 652.17] {
            let d = DiscreteGaussian::new(s2).unwrap();
            for x in 0..30 {
                assert_eq!(d.pmf(x), d.pmf(-x));
            }
            let k = (20.0 * s2.sqrt()).ceil() as i64;
            let total: f64 = (-k..=k).map(|x| d.pmf(x)).sum();
            assert!((total - 1.0).abs() <= 1e-12, "{s2}: {total}");
        }
    }

    #[test]
    fn rejects_bad_variance() {
        assert!(DiscreteGaussian::new(0.0).is_err());
        assert!(DiscreteGaussian::new(-1.0).is_err());
        assert!(DiscreteGaussian::new(f64::NAN).is_err());
        assert!(DiscreteGaussian::new(f64::INFINITY).is_err());
        assert!(DiscreteGaussian::for_rho(0.0).is_err());
    }

    #[test]
    fn scale_is_floor_sigma_plus_one() {
        assert_eq!(DiscreteGaussian::new(0.25).unwrap().scale, 1);
        assert_eq!(DiscreteGaussian::new(2.34375).unwrap().scale, 2);
        assert_eq!(DiscreteGaussian::new(4.0).unwrap().scale, 3);
        assert_eq!(DiscreteGaussian::new(652.17).unwrap().scale, 26);
    }

    #[test]
    fn bernoulli_exp_frequencies() {
        let mut rng = seeded(11);
        for (num, den) in [(1u64, 2u64), (1, 1), (3, 2), (5, 1)] {
            let n = 200_000;
            let hits = (0..n).filter(|_| bernoulli_exp_small(num, den, &mut rng)).count();
            let p = (-(num as f64) / den as f64).exp();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let got = hits as f64 / n as f64;
            assert!((got - p).abs() < 5.0 * se, "{num}/{den}: {got} vs {p}");

            let hits = (0..n)
                .filter(|_| bernoulli_exp_big(&BigUint::from(num), &BigUint::from(den), &mut rng))
                .count();
            let got = hits as f64 / n as f64;
            assert!((got - p).abs() < 5.0 * se, "big {num}/{den}: {got} vs {p}");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let d = DiscreteGaussian::new(2.34375).unwrap();
        let a: Vec<i64> = {
            let mut r = seeded(5);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        let b: Vec<i64> = {
            let mut r = seeded(5);
            (0..100).map(|_| d.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn small_sample_moments() {
        let d = DiscreteGaussian::new(2.34375).unwrap();
        let mut r = seeded(99);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut r) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
        assert!(mean.abs() < 5.0 * (2.34375f64 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 2.34375).abs() < 0.1, "var {var}");
    }
}
