//! Modular nuclearity bound chain: υ(s,κ), x(s,κ), the Ξ_n bounds, s_min,
//! and trace norms of the kernels T_{a,b} and R_{g,b}.
//!
//! γ, γ′ are inputs; nothing here asserts the intertwiner conjecture.

use crate::error::{input, Error, Result};
use crate::fock::RapidityGrid;
use crate::linalg::{hermitian_eigen, CMat};
use crate::smatrix::SMatrix;
use crate::C;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, FRAC_PI_2, PI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuclearityParams {
    #[serde(rename = "D")]
    pub species: usize,
    pub m0: f64,
    pub kappa: f64,
    #[serde(rename = "S_norm")]
    pub s_norm: f64,
    /// Defaults to ‖S‖_κ^{1/2}.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gamma_prime: Option<f64>,
}

impl NuclearityParams {
    pub fn new(species: usize, m0: f64, kappa: f64, s_norm: f64) -> Result<Self> {
        let p = Self { species, m0, kappa, s_norm, gamma: None, gamma_prime: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gammas(mut self, gamma: f64, gamma_prime: f64) -> Result<Self> {
        self.gamma = Some(gamma);
        self.gamma_prime = Some(gamma_prime);
        self.validate()?;
        Ok(self)
    }

    /// Reads D, m₀, κ and ‖S‖_κ off an S-matrix; the norm must be known.
    pub fn from_smatrix(s: &SMatrix) -> Result<Self> {
        let norm = s.sup_norm.ok_or_else(|| Error::Input("‖S‖_κ not known for this S-matrix; supply sup_norm or estimate it".into()))?;
        Self::new(s.species(), s.spectrum.mass_gap(), s.kappa, norm)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if self.species == 0 || !pos(self.m0) || !pos(self.s_norm) {
            return input("nuclearity: D, m0 and S_norm must be positive");
        }
        if !(self.kappa > 0.0 && self.kappa < FRAC_PI_2) {
            return input(format!("nuclearity: κ = {} must lie in (0, π/2)", self.kappa));
        }
        if self.gamma.is_some_and(|g| !pos(g)) || self.gamma_prime.is_some_and(|g| !pos(g)) {
            return input("nuclearity: γ and γ′ must be positive");
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(self.s_norm.sqrt())
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime.unwrap_or(self.s_norm.sqrt())
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return input(format!("s = {s} must be positive"));
    }
    Ok(())
}

/// υ(s,κ) = ‖S‖_κ D^{1/2} max{1, √2 e^{−s m₀ sin κ}/(√κ (π s m₀ sin κ)^{1/4})}.
pub fn upsilon(p: &NuclearityParams, s: f64) -> Result<f64> {
    check_s(s)?;
    let t = s * p.m0 * p.kappa.sin();
    let h = 2f64.sqrt() * (-t).exp() / (p.kappa.sqrt() * (PI * t).powf(0.25));
    Ok(p.s_norm * (p.species as f64).sqrt() * h.max(1.0))
}

/// x(s,κ) = (2D/(πκ)) e^{−s m₀/2} √(4π/(s m₀)); ‖X_n‖₁ ≤ nⁿ xⁿ.
pub fn x_bound(p: &NuclearityParams, s: f64) -> Result<f64> {
    check_s(s)?;
    let sm = s * p.m0;
    Ok(2.0 * p.species as f64 / (PI * p.kappa) * (-sm / 2.0).exp() * (4.0 * PI / sm).sqrt())
}

/// q(s) = 2eγγ′υ(s/2)x(s), the ratio of the Ξ_n series.
pub fn q_ratio(p: &NuclearityParams, s: f64) -> Result<f64> {
    Ok(2.0 * E * p.gamma() * p.gamma_prime() * upsilon(p, s / 2.0)? * x_bound(p, s)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiBound {
    /// (nⁿ/n!)(2γγ′υ(s/2)x(s))ⁿ.
    pub raw: f64,
    /// (1/√(2πn))(2eγγ′υ(s/2)x(s))ⁿ.
    pub stirling: f64,
}

pub fn xi_n_bound(p: &NuclearityParams, s: f64, n: usize) -> Result<XiBound> {
    if n == 0 {
        return input("xi_n_bound needs n ≥ 1");
    }
    let base = 2.0 * p.gamma() * p.gamma_prime() * upsilon(p, s / 2.0)? * x_bound(p, s)?;
    let nf = n as f64;
    // log form keeps nⁿ/n! finite for large n
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let raw = (nf * nf.ln() - log_fact + nf * base.ln()).exp();
    let stirling = (nf * (E * base).ln()).exp() / (2.0 * PI * nf).sqrt();
    Ok(XiBound { raw, stirling })
}

/// Σ_{n=1}^{terms} raw Ξ_n bounds.
pub fn xi_partial_sum(p: &NuclearityParams, s: f64, terms: usize) -> Result<f64> {
    (1..=terms).map(|n| xi_n_bound(p, s, n).map(|b| b.raw)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SMinReport {
    pub s_min: f64,
    pub bracket: (f64, f64),
    pub q_at_bracket: (f64, f64),
    pub iterations: usize,
    /// q sampled on the bracket was strictly decreasing.
    pub monotone: bool,
    /// Sample points where q failed to decrease.
    pub non_monotone_at: Vec<f64>,
}

/// Root of q(s) = 1 by bisection to 10⁻¹⁰. Without a bracket, one is found
/// by doubling outward from s = 1.
pub fn s_min(p: &NuclearityParams, bracket: Option<(f64, f64)>) -> Result<SMinReport> {
    p.validate()?;
    let q = |s: f64| q_ratio(p, s);
    let (lo, hi) = match bracket {
        Some(b) => b,
        None => auto_bracket(&q)?,
    };
    check_s(lo)?;
    if !(hi > lo) {
        return input("s_min: bracket must satisfy lo < hi");
    }
    let (qlo, qhi) = (q(lo)?, q(hi)?);
    if !(qlo > 1.0 && qhi < 1.0) {
        return Err(Error::Bracket { what: "q(s) − 1".into(), lo, hi });
    }
    let samples = crate::num::linspace(lo, hi, 201);
    let mut non_monotone_at = Vec::new();
    let mut prev = qlo;
    for &s in &samples[1..] {
        let v = q(s)?;
        if v >= prev {
            non_monotone_at.push(s);
        }
        prev = v;
    }
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > 1e-10 * (1.0 + a.abs()) && iterations < 200 {
        let mid = 0.5 * (a + b);
        if q(mid)? > 1.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(SMinReport { s_min: 0.5 * (a + b), bracket: (lo, hi), q_at_bracket: (qlo, qhi), iterations, monotone: non_monotone_at.is_empty(), non_monotone_at })
}

fn auto_bracket(q: &dyn Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (1.0, 1.0);
    for _ in 0..60 {
        if q(lo)? > 1.0 {
            break;
        }
        lo /= 2.0;
    }
    for _ in 0..60 {
        if q(hi)? < 1.0 {
            break;
        }
        hi *= 2.0;
    }
    if q(lo)? > 1.0 && q(hi)? < 1.0 {
        Ok((lo, hi.max(lo * 2.0)))
    } else {
        Err(Error::Bracket { what: "q(s) − 1".into(), lo, hi })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub upsilon: f64,
    pub x: f64,
    pub q: f64,
    pub partial_sum: f64,
}

/// υ is reported at s/2, the argument entering q.
pub fn sweep(p: &NuclearityParams, s_values: &[f64], terms: usize) -> Result<Vec<SweepRow>> {
    s_values
        .iter()
        .map(|&s| Ok(SweepRow { s, upsilon: upsilon(p, s / 2.0)?, x: x_bound(p, s)?, q: q_ratio(p, s)?, partial_sum: xi_partial_sum(p, s, terms)? }))
        .collect()
}

/// Profile g(θ) of R_{g,b}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// g(θ) = e^{−c cosh θ}.
    ExpCosh { c: f64 },
    /// Values on the kernel grid, as [re, im] pairs.
    Values { values: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum KernelFamily {
    /// e^{−a cosh θ}/(θ′ − θ + ib).
    #[serde(rename = "T_ab")]
    TAb { a: f64, b: f64 },
    /// (−sign b/(2πi)) conj g(θ) g(θ′)/(θ′ − θ + ib).
    #[serde(rename = "R_gb")]
    RGb { g: Profile, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    /// Identical blocks on L²(ℝ)⊗ℂ^D.
    #[serde(rename = "D", default = "one")]
    pub species: usize,
    pub grid: RapidityGrid,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub numeric_trace_norm: f64,
    pub analytic_bound: f64,
    /// R family only.
    pub min_eigenvalue: Option<f64>,
    /// R family only.
    pub trace: Option<f64>,
}

/// Relative size below which the profile counts as decayed at the grid ends.
pub const DECAY_TOL: f64 = 1e-10;

fn profile_values(g: &Profile, grid: &RapidityGrid) -> Result<Vec<C>> {
    match g {
        Profile::ExpCosh { c } => {
            if !(*c > 0.0) {
                return input("profile exp-cosh needs c > 0");
            }
            Ok(grid.points.iter().map(|t| C::new((-c * t.cosh()).exp(), 0.0)).collect())
        }
        Profile::Values { values } => {
            if values.len() != grid.len() {
                return input("profile values do not match the grid");
            }
            Ok(values.iter().map(|v| C::new(v[0], v[1])).collect())
        }
    }
}

fn check_decay(h: &[f64], what: &str) -> Result<()> {
    let max = h.iter().cloned().fold(0.0, f64::max);
    let ends = h[0].max(h[h.len() - 1]);
    if !(max > 0.0) || ends > DECAY_TOL * max {
        return Err(Error::Resolution(format!("{what} has not decayed at the grid boundary (ratio {:.3e})", ends / max)));
    }
    Ok(())
}

/// √w_i K(θ_i, θ_j) √w_j.
fn discretize(grid: &RapidityGrid, k: impl Fn(usize, usize) -> C) -> CMat {
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    CMat::from_fn(grid.len(), grid.len(), |i, j| k(i, j) * sw[i] * sw[j])
}

fn singular_sum(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// D·2^{1/4}π^{5/4}(e^{−a}/a^{1/4})[(√(π/2) + 1/(4a))(b⁴ + 4b² + 24)/|b|⁵]^{1/2}.
pub fn t_kernel_bound(a: f64, b: f64, species: usize) -> f64 {
    let br = ((FRAC_PI_2.sqrt() + 1.0 / (4.0 * a)) * (b.powi(4) + 4.0 * b * b + 24.0) / b.abs().powi(5)).sqrt();
    species as f64 * 2f64.powf(0.25) * PI.powf(1.25) * (-a).exp() / a.powf(0.25) * br
}

pub fn kernel_trace_norm(spec: &KernelSpec) -> Result<KernelReport> {
    let grid = &spec.grid;
    if grid.len() < 2 || spec.species == 0 {
        return input("kernel needs a grid of at least two points and D ≥ 1");
    }
    let d = spec.species as f64;
    match &spec.family {
        KernelFamily::TAb { a, b } => {
            if !(*a > 0.0) || *b == 0.0 || !b.is_finite() {
                return input("T_ab needs a > 0 and b ≠ 0");
            }
            let h: Vec<f64> = grid.points.iter().map(|t| (-a * t.cosh()).exp()).collect();
            check_decay(&h, "e^{−a cosh θ}")?;
            let m = discretize(grid, |i, j| C::new(h[i], 0.0) / C::new(grid.points[j] - grid.points[i], *b));
            Ok(KernelReport {
                numeric_trace_norm: d * singular_sum(&m),
                analytic_bound: t_kernel_bound(*a, *b, spec.species),
                min_eigenvalue: None,
                trace: None,
            })
        }
        KernelFamily::RGb { g, b } => {
            if *b == 0.0 || !b.is_finite() {
                return input("R_gb needs b ≠ 0");
            }
            let gv = profile_values(g, grid)?;
            check_decay(&gv.iter().map(|z| z.norm()).collect::<Vec<_>>(), "g")?;
            let pre = C::new(-b.signum(), 0.0) / C::new(0.0, 2.0 * PI);
            let m = discretize(grid, |i, j| pre * gv[i].conj() * gv[j] / C::new(grid.points[j] - grid.points[i], *b));
            let herm = (&m + m.adjoint()) * C::new(0.5, 0.0);
            let (ev, _) = hermitian_eigen(&herm);
            let trace: f64 = (0..grid.len()).map(|i| m[(i, i)].re).sum();
            let g2: f64 = gv.iter().zip(&grid.weights).map(|(z, w)| w * z.norm_sqr()).sum();
            Ok(KernelReport {
                numeric_trace_norm: d * singular_sum(&m),
                analytic_bound: d * g2 / (2.0 * PI * b.abs()),
                min_eigenvalue: Some(ev[0]),
                trace: Some(d * trace),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OneParticleNuclearity {
    pub plus: f64,
    pub minus: f64,
    /// Bound on ‖X₁(s)‖₁.
    pub total: f64,
}

/// Trace norms of (1/πi) e^{−s m₀ cosh θ}/(θ′ − θ ± iπ/2), D identical blocks
/// at the mass gap (heavier species only decay faster).
pub fn one_particle_nuclearity(p: &NuclearityParams, s: f64, points: usize) -> Result<OneParticleNuclearity> {
    check_s(s)?;
    let a = s * p.m0;
    // e^{−a cosh L} ≤ 1e-16·e^{−a}
    let l = ((a + 37.0) / a).acosh().max(1.0);
    let grid = RapidityGrid::gauss_legendre(points, -l, l);
    let norm = |b: f64| -> Result<f64> {
        let r = kernel_trace_norm(&KernelSpec { family: KernelFamily::TAb { a, b }, species: p.species, grid: grid.clone() })?;
        Ok(r.numeric_trace_norm / PI)
    };
    let (plus, minus) = (norm(FRAC_PI_2)?, norm(-FRAC_PI_2)?);
    Ok(OneParticleNuclearity { plus, minus, total: plus + minus })
}
