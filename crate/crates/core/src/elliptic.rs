//! Complete elliptic integrals, Jacobi theta functions `H` and `Θ` of modulus
//! `k`, and the theta-function parameterization of symmetric weights.
//!
//! Conventions: `K = K(k)`, `K′ = K(k′)` with `k′ = √(1−k²)`, nome
//! `q = exp(−πK′/K)`, and
//!
//! ```text
//! H(u) = 2 q^{1/4} sin(πu/2K) ∏_{n≥1} (1 − 2q^{2n} cos(πu/K) + q^{4n})(1 − q^{2n})
//! Θ(u) =                      ∏_{n≥1} (1 − 2q^{2n−1} cos(πu/K) + q^{4n−2})(1 − q^{2n})
//! ```
//!
//! so that `sn(u) = H(u) / (√k Θ(u))`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::thresholds;
use crate::weights::{Parity, WeightsSym};

const AGM_MAX_ITER: usize = 64;
const PRODUCT_TOL: f64 = 1e-17;
const PRODUCT_MAX_FACTORS: usize = 10_000;

/// Fraction of `K′` inside which theta products are evaluated.
pub const STRIP_FRACTION: f64 = 0.95;

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        if (an - bn).abs() <= f64::EPSILON * an {
            return an;
        }
        a = an;
        b = bn;
    }
    0.5 * (a + b)
}

/// `K(k) = ∫₀^{π/2} dθ / √(1 − k² sin²θ)` by the arithmetic-geometric mean.
pub fn complete_elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!("modulus {k} not in [0,1)")));
    }
    let k_prime = ((1.0 - k) * (1.0 + k)).sqrt();
    Ok(PI / (2.0 * agm(1.0, k_prime)))
}

/// `K′(k) = K(√(1−k²))`, evaluated as `π / 2·AGM(1, k)` so small moduli do
/// not lose the complementary modulus to rounding.
pub fn complementary_elliptic_k(k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus {k} not in (0,1)")));
    }
    Ok(PI / (2.0 * agm(1.0, k)))
}

/// Quarter periods and nome for a fixed modulus. Cheap to copy and safe to
/// share across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaParams {
    pub k: f64,
    pub quarter_period: f64,
    pub complementary_quarter_period: f64,
    pub nome: f64,
}

impl ThetaParams {
    pub fn new(k: f64) -> Result<Self> {
        let quarter_period = complete_elliptic_k(k)?;
        let complementary_quarter_period = complementary_elliptic_k(k)?;
        let nome = (-PI * complementary_quarter_period / quarter_period).exp();
        Ok(Self { k, quarter_period, complementary_quarter_period, nome })
    }

    /// Half-width of the strip `|Im u|` in which products are evaluated.
    pub fn strip_bound(&self) -> f64 {
        STRIP_FRACTION * self.complementary_quarter_period
    }

    fn check_strip(&self, u: C64) -> Result<()> {
        let bound = self.strip_bound();
        if u.im.is_nan() || u.im.abs() >= bound || !u.re.is_finite() {
            return Err(Error::ConvergenceGuard { imag: u.im, bound });
        }
        Ok(())
    }

    /// `∏ (1 − 2 q^{m} cos(πu/K) + q^{2m})(1 − q^{2n})` with `m = 2n + offset`.
    fn product(&self, u: C64, offset: i32) -> Result<C64> {
        let q = self.nome;
        let cos = (u * (PI / self.quarter_period)).cos();
        let mut acc = C64::new(1.0, 0.0);
        for n in 1..=PRODUCT_MAX_FACTORS {
            let m = 2 * n as i32 + offset;
            let qm = q.powi(m);
            let q2n = q.powi(2 * n as i32);
            let factor = (C64::new(1.0 + qm * qm, 0.0) - cos * (2.0 * qm)) * (1.0 - q2n);
            acc *= factor;
            if (factor - 1.0).norm() < PRODUCT_TOL {
                return Ok(acc);
            }
        }
        Err(Error::TruncationCap(PRODUCT_MAX_FACTORS))
    }

    /// Jacobi `H(u)`, odd with `H(u + 2K) = −H(u)`.
    pub fn h(&self, u: C64) -> Result<C64> {
        self.check_strip(u)?;
        let prefactor = 2.0 * self.nome.powf(0.25);
        let sin = (u * (PI / (2.0 * self.quarter_period))).sin();
        Ok(sin * prefactor * self.product(u, 0)?)
    }

    /// Jacobi `Θ(u)`, even with period `2K`.
    pub fn theta(&self, u: C64) -> Result<C64> {
        self.check_strip(u)?;
        self.product(u, -1)
    }

    /// `sn(u) = H(u) / (√k Θ(u))`.
    pub fn sn(&self, u: C64) -> Result<C64> {
        Ok(self.h(u)? / (self.k.sqrt() * self.theta(u)?))
    }
}

pub fn theta_h(u: C64, params: &ThetaParams) -> Result<C64> {
    params.h(u)
}

pub fn theta_theta(u: C64, params: &ThetaParams) -> Result<C64> {
    params.theta(u)
}

/// A point `(k, λ, μ)` on the elliptic weight curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPoint {
    pub k: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl EllipticPoint {
    pub fn new(k: f64, lambda: f64, mu: f64) -> Result<Self> {
        let params = ThetaParams::new(k)?;
        check_curve_arguments(&params, lambda, mu)?;
        Ok(Self { k, lambda, mu })
    }
}

fn check_curve_arguments(params: &ThetaParams, lambda: f64, mu: f64) -> Result<()> {
    if lambda.is_nan() || lambda <= 0.0 || !mu.is_finite() {
        return Err(Error::Domain(format!("curve parameter λ={lambda} must be positive, μ={mu} finite")));
    }
    let bound = params.strip_bound();
    for imag in [lambda, 0.5 * (lambda - mu), 0.5 * (lambda + mu)] {
        if imag.is_nan() || imag.abs() >= bound {
            return Err(Error::ConvergenceGuard { imag, bound });
        }
    }
    Ok(())
}

fn real_part(z: C64, name: &str) -> Result<f64> {
    if z.im.abs() > thresholds::REALNESS * z.norm().max(1.0) {
        return Err(Error::InvalidInput(format!("weight {name} = {z} is not real")));
    }
    Ok(z.re)
}

/// Weights `(a, b, c, d)` at spectral variable `μ`:
///
/// ```text
/// a = −i Θ(iλ) H(i(λ−μ)/2) Θ(i(λ+μ)/2)
/// b = −i Θ(iλ) Θ(i(λ−μ)/2) H(i(λ+μ)/2)
/// c = −i H(iλ) Θ(i(λ−μ)/2) Θ(i(λ+μ)/2)
/// d =  i H(iλ) H(i(λ−μ)/2) H(i(λ+μ)/2)
/// ```
///
/// Returned with even parity; callers relabel as needed.
pub fn baxter_weights(pt: &EllipticPoint) -> Result<WeightsSym> {
    baxter_weights_with(&ThetaParams::new(pt.k)?, pt.lambda, pt.mu)
}

/// Same as [`baxter_weights`] with precomputed theta parameters.
pub fn baxter_weights_with(params: &ThetaParams, lambda: f64, mu: f64) -> Result<WeightsSym> {
    check_curve_arguments(params, lambda, mu)?;
    let i = C64::i();
    let minus = i * (0.5 * (lambda - mu));
    let plus = i * (0.5 * (lambda + mu));
    let theta_lambda = params.theta(i * lambda)?;
    let h_lambda = params.h(i * lambda)?;
    let (h_minus, theta_minus) = (params.h(minus)?, params.theta(minus)?);
    let (h_plus, theta_plus) = (params.h(plus)?, params.theta(plus)?);

    let a = -i * theta_lambda * h_minus * theta_plus;
    let b = -i * theta_lambda * theta_minus * h_plus;
    let c = -i * h_lambda * theta_minus * theta_plus;
    let d = i * h_lambda * h_minus * h_plus;
    Ok(WeightsSym::new(
        real_part(a, "a")?,
        real_part(b, "b")?,
        real_part(c, "c")?,
        real_part(d, "d")?,
        Parity::Even,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ThetaParams {
        ThetaParams::new(0.5).unwrap()
    }

    #[test]
    fn k_at_zero_is_half_pi() {
        assert_eq!(complete_elliptic_k(0.0).unwrap(), PI / 2.0);
    }

    #[test]
    fn k_rejects_unit_and_negative_modulus() {
        assert!(matches!(complete_elliptic_k(1.0), Err(Error::Domain(_))));
        assert!(matches!(complete_elliptic_k(-0.1), Err(Error::Domain(_))));
        assert!(complete_elliptic_k(0.999999).unwrap() > 7.0);
    }

    #[test]
    fn nome_is_consistent() {
        let p = params();
        assert!(p.nome > 0.0 && p.nome < 1.0);
        let expected = (-PI * p.complementary_quarter_period / p.quarter_period).exp();
        assert_eq!(p.nome, expected);
        // K′(k) computed two ways.
        let kp = complete_elliptic_k((0.75f64).sqrt()).unwrap();
        assert!((kp - p.complementary_quarter_period).abs() < 1e-14);
    }

    #[test]
    fn h_vanishes_at_origin() {
        assert_eq!(params().h(C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn parity_of_theta_functions() {
        let p = params();
        for u in [C64::new(0.37, 0.0), C64::new(-0.2, 0.8), C64::new(1.1, -1.3)] {
            assert!((p.theta(-u).unwrap() - p.theta(u).unwrap()).norm() < 1e-14);
            assert!((p.h(-u).unwrap() + p.h(u).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn sn_at_quarter_period_is_one() {
        let p = params();
        let sn = p.sn(C64::new(p.quarter_period, 0.0)).unwrap();
        assert!((sn - 1.0).norm() < 1e-12, "{sn}");
    }

    #[test]
    fn strip_guard_is_enforced() {
        let p = params();
        let u = C64::new(0.0, p.complementary_quarter_period);
        assert!(matches!(p.h(u), Err(Error::ConvergenceGuard { .. })));
        assert!(matches!(p.theta(u), Err(Error::ConvergenceGuard { .. })));
    }

    #[test]
    fn weights_vanish_at_mu_equal_lambda() {
        let w = baxter_weights(&EllipticPoint::new(0.5, 0.7, 0.7).unwrap()).unwrap();
        assert_eq!(w.a, 0.0);
        assert_eq!(w.d, 0.0);
        assert!(w.b.abs() > 0.1 && w.c.abs() > 0.1);
    }

    #[test]
    fn weights_under_mu_reflection() {
        let w = baxter_weights(&EllipticPoint::new(0.5, 0.7, 0.3).unwrap()).unwrap();
        let r = baxter_weights(&EllipticPoint::new(0.5, 0.7, -0.3).unwrap()).unwrap();
        assert!((w.a - r.b).abs() < 1e-15 && (w.b - r.a).abs() < 1e-15);
        assert!((w.c - r.c).abs() < 1e-15 && (w.d - r.d).abs() < 1e-15);
    }

    #[test]
    fn elliptic_point_guards() {
        assert!(EllipticPoint::new(1.0, 0.7, 0.3).is_err());
        assert!(EllipticPoint::new(0.5, -0.7, 0.3).is_err());
        assert!(matches!(EllipticPoint::new(0.5, 0.7, 5.0), Err(Error::ConvergenceGuard { .. })));
        assert!(matches!(EllipticPoint::new(0.5, 2.1, 0.0), Err(Error::ConvergenceGuard { .. })));
    }

    #[test]
    fn small_modulus_suppresses_d() {
        let w = baxter_weights(&EllipticPoint::new(1e-8, 0.7, 0.3).unwrap()).unwrap();
        assert!((w.d / w.a).abs() < 1e-3);
    }
}
