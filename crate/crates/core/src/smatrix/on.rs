//! O(N) amplitudes σ₁, σ₂, σ₃ as Gamma quotients.

use super::{pole, POLE_TOL};
use crate::error::Result;
use crate::num::{gamma, gamma_pole_distance, rgamma};
use crate::C;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sigma {
    pub s1: C,
    pub s2: C,
    pub s3: C,
}

/// Richardson steps for removable 0/0 points.
const H: [f64; 2] = [1e-4, 1e-5];

fn numerator_gamma(arg: C, z: C) -> Result<C> {
    if gamma_pole_distance(arg) < POLE_TOL {
        return Err(pole(z, "o(n) Gamma numerator"));
    }
    Ok(gamma(arg))
}

/// σ₂ via the Gamma quotient; denominators through the entire 1/Γ.
pub fn sigma2(n: usize, z: C) -> Result<C> {
    let nu = 1.0 / (n as f64 - 2.0);
    let u = -C::i() * z / (2.0 * PI);
    let num = numerator_gamma(nu + u, z)? * numerator_gamma(0.5 + u, z)? * numerator_gamma(0.5 + nu - u, z)? * numerator_gamma(1.0 - u, z)?;
    Ok(num * rgamma(0.5 + nu + u) * rgamma(u) * rgamma(1.0 + nu - u) * rgamma(0.5 - u))
}

/// σ₂ rewritten with Γ(u)Γ(1−u) = π/sin πu and Γ(½+u)Γ(½−u) = π/cos πu;
/// an independent route for cross-checking [`sigma2`].
pub fn sigma2_reflected(n: usize, z: C) -> Result<C> {
    let nu = 1.0 / (n as f64 - 2.0);
    let u = -C::i() * z / (2.0 * PI);
    let a = numerator_gamma(nu + u, z)? * numerator_gamma(0.5 + nu - u, z)? / (numerator_gamma(0.5 + nu + u, z)? * numerator_gamma(1.0 + nu - u, z)?);
    let g1 = numerator_gamma(1.0 - u, z)?;
    let gh = numerator_gamma(0.5 + u, z)?;
    Ok(a * g1 * g1 * (PI * u).sin() * gh * gh * (PI * u).cos() / (PI * PI))
}

/// σ₁(ζ) = −(2πi/(N−2))·σ₂(ζ)/(iπ−ζ), removable at ζ = iπ.
fn sigma1(n: usize, z: C) -> Result<C> {
    let ipi = C::new(0.0, PI);
    if (ipi - z).norm() < POLE_TOL {
        return richardson(|w| sigma1_direct(n, w), z);
    }
    sigma1_direct(n, z)
}

fn sigma1_direct(n: usize, z: C) -> Result<C> {
    let c = -C::new(0.0, 2.0 * PI / (n as f64 - 2.0));
    Ok(c * sigma2(n, z)? / (C::new(0.0, PI) - z))
}

/// Symmetric samples at ζ ± h for h ∈ {1e-4, 1e-5}, extrapolated in h².
fn richardson(f: impl Fn(C) -> Result<C>, z: C) -> Result<C> {
    let avg = |h: f64| -> Result<C> { Ok(0.5 * (f(z + h)? + f(z - h)?)) };
    let (a1, a2) = (avg(H[0])?, avg(H[1])?);
    let (h1, h2) = (H[0] * H[0], H[1] * H[1]);
    Ok((a2 * h1 - a1 * h2) / (h1 - h2))
}

pub fn eval_on_sigma(n: usize, z: C) -> Result<Sigma> {
    if n < 3 {
        return crate::error::input("o(n) requires N ≥ 3");
    }
    let s2 = sigma2(n, z)?;
    let s1 = sigma1(n, z)?;
    let s3 = sigma1(n, C::new(0.0, PI) - z)?;
    Ok(Sigma { s1, s2, s3 })
}
