use super::SMatrix;
use crate::error::{input, Error, Result};
use crate::linalg::{eye, flip, hermitian_eigen, inverse, op_norm, two_site, CMat};
use crate::perm;
use crate::C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// S_n^π(θ) for π = τ_{k1}⋯τ_{km}, from S^{στ}(θ) = S^σ(θ)·S^τ(θ^σ).
pub fn s_tensor(s: &SMatrix, n: usize, word: &[usize], theta: &[f64]) -> Result<CMat> {
    let d = s.species();
    let mut m = eye(d.pow(n as u32));
    let mut cur = theta.to_vec();
    for &k in word {
        let sk = s.eval_real(cur[k + 1] - cur[k])?;
        m = m * two_site(&sk, d, n, k);
        cur.swap(k, k + 1);
    }
    Ok(m)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Unwraps phases sampled on `grid` starting at the entry where θ = 0,
/// where the branch is pinned to zero.
fn unwrap_from_zero(grid: &[f64], raw: &[f64]) -> Result<Vec<f64>> {
    let z = grid.iter().position(|t| t.abs() < 1e-14).ok_or_else(|| Error::Input("phase grid must contain θ = 0".into()))?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return input("phase grid must be strictly increasing");
    }
    let mut out = vec![0.0; raw.len()];
    out[z] = wrap(raw[z]);
    let step = |i: usize, j: usize, out: &mut Vec<f64>| -> Result<()> {
        let dphi = wrap(raw[j] - out[i]);
        if dphi.abs() >= FRAC_PI_2 {
            return Err(Error::Branch { theta: grid[j], step: dphi });
        }
        out[j] = out[i] + dphi;
        Ok(())
    };
    for j in z + 1..raw.len() {
        step(j - 1, j, &mut out)?;
    }
    for j in (0..z).rev() {
        step(j + 1, j, &mut out)?;
    }
    Ok(out)
}

/// δ on `grid` with S(θ) = −e^{2iδ(θ)}, δ(0) = 0.
pub fn phase_shift_scalar(s: &SMatrix, grid: &[f64]) -> Result<Vec<f64>> {
    if !s.is_scalar() {
        return input("phase_shift_scalar needs D = 1");
    }
    if (s.eval_scalar(C::new(0.0, 0.0))? + 1.0).norm() > 1e-10 {
        return input("phase shift requires S(0) = −1");
    }
    let mut raw = Vec::with_capacity(grid.len());
    for &t in grid {
        let v = s.eval_scalar(C::new(t, 0.0))?;
        if (v.norm() - 1.0).abs() > 1e-10 {
            return input(format!("|S(θ)| ≠ 1 at θ = {t}"));
        }
        raw.push((-v).arg());
    }
    Ok(unwrap_from_zero(grid, &raw)?.into_iter().map(|p| 0.5 * p).collect())
}

/// δ(x) for one rapidity difference, tracked from 0 in steps ≤ 0.05.
pub fn phase_shift_at(s: &SMatrix, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let m = (x.abs() / 0.05).ceil() as usize + 1;
    let mut grid = crate::num::linspace(0.0, x, m);
    if x < 0.0 {
        grid.reverse();
    }
    let d = phase_shift_scalar(s, &grid)?;
    Ok(if x < 0.0 { d[0] } else { d[m - 1] })
}

/// Hermitian ρ(θ) on `grid` with S(θ) = −F·e^{2iρ(θ)} and ρ(0) = 0.
///
/// The commuting unitaries M(θ) = −F·S(θ) are diagonalized jointly through
/// one seeded generic hermitian combination.
pub fn phase_shift_matrix(s: &SMatrix, grid: &[f64]) -> Result<Vec<CMat>> {
    let d = s.species();
    let f = flip(d);
    let ms = grid.iter().map(|&t| Ok(-(&f * s.eval_real(t)?))).collect::<Result<Vec<_>>>()?;
    let z = grid.iter().position(|t| t.abs() < 1e-14).ok_or_else(|| Error::Input("phase grid must contain θ = 0".into()))?;
    if op_norm(&(&ms[z] - eye(d * d))) > 1e-8 {
        return input("phase shift matrix requires S(0) = −F");
    }
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            let c = op_norm(&(&ms[i] * &ms[j] - &ms[j] * &ms[i]));
            if c > 1e-8 {
                return Err(Error::NonCommuting { a: grid[i], b: grid[j], defect: c });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut h = CMat::zeros(d * d, d * d);
    for m in &ms {
        let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let herm = (m + m.adjoint()) * C::new(0.5 * a, 0.0);
        let anti = (m - m.adjoint()) * C::new(0.0, -0.5 * b);
        h += herm + anti;
    }
    let (_, v) = hermitian_eigen(&h);
    let mut phases = vec![vec![0.0; grid.len()]; d * d];
    for j in 0..d * d {
        let col = v.column(j).into_owned();
        let mut raw = Vec::with_capacity(grid.len());
        for (k, m) in ms.iter().enumerate() {
            let mv = m * &col;
            let lam = (col.adjoint() * &mv)[(0, 0)];
            let defect = (mv - &col * lam).norm();
            if defect > 1e-8 {
                return Err(Error::Branch { theta: grid[k], step: defect });
            }
            raw.push(lam.arg());
        }
        phases[j] = unwrap_from_zero(grid, &raw)?;
    }
    Ok((0..grid.len())
        .map(|k| {
            let diag = CMat::from_diagonal(&nalgebra::DVector::from_fn(d * d, |j, _| C::new(0.5 * phases[j][k], 0.0)));
            &v * diag * v.adjoint()
        })
        .collect())
}

/// I_n(θ) = ∏_{k<l} (−e^{iδ(θ_k−θ_l)}).
pub fn intertwiner_in(delta: impl Fn(f64) -> f64, theta: &[f64]) -> C {
    let mut v = C::new(1.0, 0.0);
    for k in 0..theta.len() {
        for l in k + 1..theta.len() {
            v *= -C::from_polar(1.0, delta(theta[k] - theta[l]));
        }
    }
    v
}

/// (−1)^{sign π} F_n^π S_n^π(θ)⁻¹ for the π sorting θ ascending.
pub fn intertwiner_nonanalytic(s: &SMatrix, theta: &[f64], tol: f64) -> Result<CMat> {
    let n = theta.len();
    let d = s.species();
    for i in 0..n {
        for j in i + 1..n {
            if (theta[i] - theta[j]).abs() <= tol {
                return Err(Error::Tie { i, j });
            }
        }
    }
    let mut p = perm::identity(n);
    p.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
    let word = perm::reduced_word(&p);
    let sp = s_tensor(s, n, &word, theta)?;
    let inv = inverse(&sp).ok_or_else(|| Error::Input("singular S_n^π".into()))?;
    let dim = d.pow(n as u32);
    // (F^π)^α_β = ∏ δ^{α_i}_{β_{π(i)}}
    let mut fp = CMat::zeros(dim, dim);
    for b in 0..dim {
        let digits = crate::fock::digits(b, d, n);
        let a = p.iter().fold(0, |acc, &pi| acc * d + digits[pi]);
        fp[(a, b)] = C::new(1.0, 0.0);
    }
    Ok(fp * inv * C::new(perm::sign(&p), 0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub sup_norm: f64,
    /// Distances below the real axis of σ-poles (o(n) only).
    pub pole_candidates: Vec<f64>,
    pub resolution: String,
}

/// Determinant scan of S(θ+iλ), λ ∈ [0, π/2], and the sup of ‖S‖ on
/// the enlarged strip −κ ≤ Im ζ ≤ π+κ.
pub fn estimate_kappa_and_norm(s: &SMatrix, grid: &[f64], lambda_steps: usize, tol: f64) -> Result<KappaEstimate> {
    if !s.is_analytic() {
        return input("κ estimate needs an analytic continuation");
    }
    let lam: Vec<f64> = crate::num::linspace(0.0, FRAC_PI_2, lambda_steps + 1);
    let mut kappa = 0.0;
    'scan: for &l in &lam {
        for &t in grid {
            let bad = match s.eval(C::new(t, l)) {
                Ok(m) => m.determinant().norm() <= tol,
                Err(Error::Pole { .. }) | Err(Error::OutOfStrip { .. }) => true,
                Err(e) => return Err(e),
            };
            if bad {
                break 'scan;
            }
        }
        kappa = l;
    }
    let kappa = kappa.min(s.kappa.max(0.0)).min(FRAC_PI_2);
    let heights = crate::num::linspace(-kappa, PI + kappa, 2 * lambda_steps + 1);
    let mut sup: f64 = 0.0;
    for &y in &heights {
        for &t in grid {
            match s.eval(C::new(t, y)) {
                Ok(m) => sup = sup.max(op_norm(&m)),
                Err(Error::Pole { .. }) => sup = f64::INFINITY,
                Err(e) => return Err(e),
            }
        }
    }
    let mut pole_candidates = Vec::new();
    if let super::Kind::ON { n, .. } = s.kind {
        // σ₃ poles at θ = −2πi(k + 1/(N−2)) and −iπ(2k+1), mirrored above iπ
        let nu = 1.0 / (n as f64 - 2.0);
        for k in 0..3 {
            pole_candidates.push(2.0 * PI * (k as f64 + nu));
            pole_candidates.push(PI * (2 * k + 1) as f64);
        }
        pole_candidates.sort_by(f64::total_cmp);
        pole_candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    Ok(KappaEstimate {
        kappa,
        sup_norm: sup,
        pole_candidates,
        resolution: format!("{} θ points on [{}, {}], λ step π/{}", grid.len(), grid[0], grid[grid.len() - 1], 2 * lambda_steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_gordon_phase_shift() {
        let s = SMatrix::sinh_gordon(4.0 * PI);
        let a = 1f64.asinh();
        let grid: Vec<f64> = (-40..=40).map(|i| a * i as f64 / 20.0).collect();
        let d = phase_shift_scalar(&s, &grid).unwrap();
        assert!((d[60] - PI / 4.0).abs() < 1e-14);
        for i in 0..grid.len() {
            assert!((d[i] + d[grid.len() - 1 - i]).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_shift_requires_zero_on_grid() {
        let s = SMatrix::sinh_gordon(4.0 * PI);
        assert!(phase_shift_scalar(&s, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn nonanalytic_two_particle() {
        let s = SMatrix::sinh_gordon(2.0);
        let i = intertwiner_nonanalytic(&s, &[0.9, -0.3], 1e-12).unwrap();
        let e = -s.eval_scalar(C::new(1.2, 0.0)).unwrap();
        assert!((i[(0, 0)] - e).norm() < 1e-14);
        assert!(intertwiner_nonanalytic(&s, &[0.1, 0.1], 1e-12).is_err());
        let i = intertwiner_nonanalytic(&s, &[-1.0, 0.5, 2.0], 1e-12).unwrap();
        assert!((i[(0, 0)] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn kappa_of_constant_flip() {
        let s = SMatrix::constant_flip(2, -1.0);
        let k = estimate_kappa_and_norm(&s, &crate::num::linspace(-2.0, 2.0, 9), 16, 1e-10).unwrap();
        assert_eq!(k.kappa, FRAC_PI_2);
        assert!((k.sup_norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_of_sinh_gordon_stops_below_the_zero() {
        let s = SMatrix::sinh_gordon(4.0 * PI);
        let k = estimate_kappa_and_norm(&s, &crate::num::linspace(-4.0, 4.0, 81), 32, 1e-10).unwrap();
        assert!(k.kappa < FRAC_PI_2 && k.kappa > 0.9 * FRAC_PI_2);
    }
}
