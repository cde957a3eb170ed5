//! Special functions and quadrature rules.

use crate::C;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for Re z ≥ 1/2 via Lanczos (g = 7).
fn lanczos(z: C) -> C {
    let z = z - 1.0;
    let mut x = C::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// sin(πz) with exact zeros at the integers.
pub fn sin_pi(z: C) -> C {
    let r = z.re - 2.0 * (0.5 * z.re).round();
    let (s, c) = if r.fract() == 0.0 {
        (0.0, if r == 0.0 { 1.0 } else { -1.0 })
    } else if (r.abs() - 0.5) == 0.0 {
        (r.signum(), 0.0)
    } else {
        (PI * r).sin_cos()
    };
    let y = PI * z.im;
    C::new(s * y.cosh(), c * y.sinh())
}

/// Distance of `z` from the nearest pole of Γ (a nonpositive integer).
pub fn gamma_pole_distance(z: C) -> f64 {
    if z.re > 0.5 {
        return f64::INFINITY;
    }
    let k = z.re.round().min(0.0);
    ((z.re - k).powi(2) + z.im.powi(2)).sqrt()
}

/// Complex Gamma. Poles return non-finite values; callers guard with
/// [`gamma_pole_distance`].
pub fn gamma(z: C) -> C {
    if z.re < 0.5 {
        PI / (sin_pi(z) * lanczos(1.0 - z))
    } else {
        lanczos(z)
    }
}

/// 1/Γ(z), entire: exact zeros at the nonpositive integers.
pub fn rgamma(z: C) -> C {
    if z.re < 0.5 {
        sin_pi(z) * lanczos(1.0 - z) / PI
    } else {
        1.0 / lanczos(z)
    }
}

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wi;
        w[n - 1 - i] = half * wi;
    }
    (x, w)
}

/// Uniform grid of `n` points on [a, b] inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
