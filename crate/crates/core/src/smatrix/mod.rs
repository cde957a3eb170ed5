//! Factorizing two-body S-matrices: spectra, built-in families, evaluation.
//!
//! Storage: S^{αβ}_{γδ} sits at row α·D+β, column γ·D+δ.

mod axioms;
mod on;
mod phase;

pub use axioms::{check_axioms, default_gauge_sample, default_grid, default_pairs, AxiomReport, Axis};
pub use on::{eval_on_sigma, sigma2, sigma2_reflected, Sigma};
pub use phase::{
    estimate_kappa_and_norm, intertwiner_in, intertwiner_nonanalytic, phase_shift_at, phase_shift_matrix, phase_shift_scalar, s_tensor, KappaEstimate,
};

use crate::error::{input, Error, Result};
use crate::linalg::{flip, CMat};
use crate::C;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Distance below which a denominator zero or Gamma pole is an error.
pub const POLE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpectrum {
    #[serde(rename = "D")]
    pub species: usize,
    pub masses: Vec<f64>,
    /// 1-based in serialized form.
    #[serde(with = "one_based")]
    pub conjugation: Vec<usize>,
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x + 1).collect::<Vec<_>>().serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if v.contains(&0) {
            return Err(serde::de::Error::custom("conjugation entries are 1-based"));
        }
        Ok(v.into_iter().map(|x| x - 1).collect())
    }
}

impl ParticleSpectrum {
    pub fn new(masses: Vec<f64>, conjugation: Vec<usize>) -> Result<Self> {
        let s = Self { species: masses.len(), masses, conjugation };
        s.validate()?;
        Ok(s)
    }

    /// D equal-mass self-conjugate species.
    pub fn neutral(d: usize, m: f64) -> Self {
        Self { species: d, masses: vec![m; d], conjugation: (0..d).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.species;
        if d == 0 || self.masses.len() != d || self.conjugation.len() != d {
            return input("spectrum: D must match masses and conjugation lengths");
        }
        for a in 0..d {
            let b = self.conjugation[a];
            if b >= d || self.conjugation[b] != a {
                return input("spectrum: conjugation is not an involution");
            }
            if !(self.masses[a] > 0.0) || self.masses[a] != self.masses[b] {
                return input("spectrum: masses must be positive and conjugation invariant");
            }
        }
        Ok(())
    }

    pub fn mass_gap(&self) -> f64 {
        self.masses.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn bar(&self, a: usize) -> usize {
        self.conjugation[a]
    }
}

/// On-shell momentum p_m(θ) = m(cosh θ, sinh θ).
pub fn momentum(m: f64, theta: f64) -> [f64; 2] {
    [m * theta.cosh(), m * theta.sinh()]
}

/// Scalar (D = 1) amplitudes, also used as entries of diagonal S-matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Scalar {
    ScalarFamily {
        epsilon: f64,
        #[serde(default)]
        a: f64,
        /// β_j as [re, im]
        #[serde(default)]
        zeros: Vec<[f64; 2]>,
    },
    SinhGordon {
        g2: f64,
    },
    Constant {
        value: [f64; 2],
    },
}

impl Scalar {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scalar::ScalarFamily { epsilon, a, zeros } => {
                if epsilon.abs() != 1.0 || *a < 0.0 {
                    return input("scalar-family: epsilon = ±1 and a ≥ 0 required");
                }
                for z in zeros {
                    if !(z[1] > 0.0 && z[1] <= FRAC_PI_2 + 1e-15) {
                        return input("scalar-family: zeros need 0 < Im β ≤ π/2");
                    }
                    // closure under β ↦ −β̄ as a multiset
                    let mine = zeros.iter().filter(|w| close(**w, *z)).count();
                    let mirror = zeros.iter().filter(|w| close(**w, [-z[0], z[1]])).count();
                    if mine != mirror {
                        return input("scalar-family: zero set not closed under β ↦ −β̄");
                    }
                }
                Ok(())
            }
            Scalar::SinhGordon { g2 } if *g2 > 0.0 => Ok(()),
            Scalar::SinhGordon { .. } => input("sinh-gordon: g² > 0 required"),
            Scalar::Constant { value } => {
                if ((value[0].powi(2) + value[1].powi(2)) - 1.0).abs() > 1e-12 {
                    return input("constant scalar must be unimodular");
                }
                Ok(())
            }
        }
    }

    /// Half-width of the strip below the real axis free of poles, capped at π/2.
    pub fn kappa(&self) -> f64 {
        match self {
            Scalar::ScalarFamily { zeros, .. } => zeros.iter().map(|z| z[1]).fold(FRAC_PI_2, f64::min),
            Scalar::SinhGordon { g2 } => (PI * g2 / (4.0 * PI + g2)).min(FRAC_PI_2),
            Scalar::Constant { .. } => FRAC_PI_2,
        }
    }

    pub fn eval(&self, z: C) -> Result<C> {
        let sz = z.sinh();
        match self {
            Scalar::ScalarFamily { epsilon, a, zeros } => {
                let mut v = *epsilon * (C::i() * *a * sz).exp();
                for b in zeros {
                    let sb = C::new(b[0], b[1]).sinh();
                    let den = sb + sz;
                    if den.norm() < POLE_TOL {
                        return Err(pole(z, "scalar-family denominator"));
                    }
                    v *= (sb - sz) / den;
                }
                Ok(v)
            }
            Scalar::SinhGordon { g2 } => {
                let s = (PI * g2 / (4.0 * PI + g2)).sin();
                let den = sz + C::i() * s;
                if den.norm() < POLE_TOL {
                    return Err(pole(z, "sinh-gordon denominator"));
                }
                Ok((sz - C::i() * s) / den)
            }
            Scalar::Constant { value } => Ok(C::new(value[0], value[1])),
        }
    }
}

fn close(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
}

pub(crate) fn pole(z: C, what: &str) -> Error {
    Error::Pole { re: z.re, im: z.im, what: what.to_string() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Kind {
    #[serde(rename = "scalar-family")]
    ScalarFamily {
        epsilon: f64,
        #[serde(default)]
        a: f64,
        #[serde(default)]
        zeros: Vec<[f64; 2]>,
    },
    #[serde(rename = "sinh-gordon")]
    SinhGordon { g2: f64 },
    /// ω_{αβ} must be symmetric in (α, β).
    #[serde(rename = "diagonal")]
    Diagonal { omega: Vec<Vec<Scalar>> },
    #[serde(rename = "o(n)")]
    ON {
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        convention: OnConvention,
    },
    /// Entries row-major as [re, im].
    #[serde(rename = "constant")]
    Constant { matrix: Vec<Vec<[f64; 2]>> },
    /// Real-axis samples, linearly interpolated; no continuation.
    #[serde(rename = "user-table")]
    UserTable { theta: Vec<f64>, entries: Vec<Vec<Vec<[f64; 2]>>> },
}

/// Placement of σ₂, σ₃ on the identity and the flip.
///
/// `Literal` is σ₁K + σ₂·1 + σ₃F and has S(0) = −F, but it violates the
/// braid-form Yang-Baxter and crossing identities used throughout.
/// `YangBaxter` is F times it, σ₁K + σ₃·1 + σ₂F, which satisfies every
/// axiom and has S(0) = −1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnConvention {
    #[default]
    Literal,
    YangBaxter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SMatrixSpec {
    #[serde(flatten)]
    pub kind: Kind,
    pub spectrum: ParticleSpectrum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_norm: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SMatrix {
    pub spectrum: ParticleSpectrum,
    pub kind: Kind,
    /// Strip half-width κ ≤ π/2; zero for tables.
    pub kappa: f64,
    /// Supplied ‖S‖_κ, trusted when present.
    pub sup_norm: Option<f64>,
    scalar: Option<Scalar>,
    constant: Option<CMat>,
}

impl SMatrix {
    pub fn from_spec(spec: SMatrixSpec) -> Result<Self> {
        spec.spectrum.validate()?;
        let d = spec.spectrum.species;
        let (scalar, constant, kappa) = match &spec.kind {
            Kind::ScalarFamily { epsilon, a, zeros } => {
                let s = Scalar::ScalarFamily { epsilon: *epsilon, a: *a, zeros: zeros.clone() };
                need_d1(d)?;
                s.validate()?;
                let k = s.kappa();
                (Some(s), None, k)
            }
            Kind::SinhGordon { g2 } => {
                let s = Scalar::SinhGordon { g2: *g2 };
                need_d1(d)?;
                s.validate()?;
                let k = s.kappa();
                (Some(s), None, k)
            }
            Kind::Diagonal { omega } => {
                if omega.len() != d || omega.iter().any(|r| r.len() != d) {
                    return input("diagonal: omega must be D×D");
                }
                let mut k = FRAC_PI_2;
                for a in 0..d {
                    for b in 0..d {
                        omega[a][b].validate()?;
                        if omega[a][b] != omega[b][a] {
                            return input("diagonal: omega must be symmetric");
                        }
                        k = k.min(omega[a][b].kappa());
                    }
                }
                (None, None, k)
            }
            Kind::ON { n, .. } => {
                if *n < 3 || d != *n {
                    return input("o(n): N ≥ 3 and D = N required");
                }
                if spec.spectrum != ParticleSpectrum::neutral(d, spec.spectrum.masses[0]) {
                    return input("o(n): equal masses and trivial conjugation required");
                }
                (None, None, (2.0 * PI / (*n as f64 - 2.0)).min(FRAC_PI_2))
            }
            Kind::Constant { matrix } => {
                let m = table_matrix(matrix, d)?;
                (None, Some(m), FRAC_PI_2)
            }
            Kind::UserTable { theta, entries } => {
                if theta.len() < 2 || theta.len() != entries.len() {
                    return input("user-table: need ≥ 2 samples and one matrix per theta");
                }
                if theta.windows(2).any(|w| w[1] <= w[0]) {
                    return input("user-table: theta must be strictly increasing");
                }
                for e in entries {
                    table_matrix(e, d)?;
                }
                (None, None, 0.0)
            }
        };
        let kappa = match spec.kappa {
            Some(k) if k > 0.0 && k <= FRAC_PI_2 => k,
            Some(_) => return input("kappa must lie in (0, π/2]"),
            None => kappa,
        };
        Ok(Self { spectrum: spec.spectrum, kind: spec.kind, kappa, sup_norm: spec.sup_norm, scalar, constant })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SMatrixSpec = serde_json::from_str(text).map_err(|e| Error::Input(format!("S-matrix JSON: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn to_spec(&self) -> SMatrixSpec {
        SMatrixSpec { kind: self.kind.clone(), spectrum: self.spectrum.clone(), kappa: Some(self.kappa).filter(|k| *k > 0.0), sup_norm: self.sup_norm }
    }

    pub fn sinh_gordon(g2: f64) -> Self {
        Self::from_spec(SMatrixSpec { kind: Kind::SinhGordon { g2 }, spectrum: ParticleSpectrum::neutral(1, 1.0), kappa: None, sup_norm: None })
            .expect("valid sinh-gordon coupling")
    }

    pub fn scalar_family(epsilon: f64, a: f64, zeros: Vec<C>) -> Result<Self> {
        Self::from_spec(SMatrixSpec {
            kind: Kind::ScalarFamily { epsilon, a, zeros: zeros.iter().map(|z| [z.re, z.im]).collect() },
            spectrum: ParticleSpectrum::neutral(1, 1.0),
            kappa: None,
            sup_norm: None,
        })
    }

    pub fn o_n(n: usize) -> Result<Self> {
        Self::o_n_with(n, OnConvention::Literal)
    }

    pub fn o_n_with(n: usize, convention: OnConvention) -> Result<Self> {
        Self::from_spec(SMatrixSpec { kind: Kind::ON { n, convention }, spectrum: ParticleSpectrum::neutral(n, 1.0), kappa: None, sup_norm: None })
    }

    pub fn diagonal(omega: Vec<Vec<Scalar>>, spectrum: ParticleSpectrum) -> Result<Self> {
        Self::from_spec(SMatrixSpec { kind: Kind::Diagonal { omega }, spectrum, kappa: None, sup_norm: None })
    }

    pub fn constant(m: &CMat, spectrum: ParticleSpectrum) -> Result<Self> {
        let d = spectrum.species;
        if m.nrows() != d * d || m.ncols() != d * d {
            return input("constant: matrix must be D²×D²");
        }
        let rows = (0..d * d).map(|r| (0..d * d).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
        Self::from_spec(SMatrixSpec { kind: Kind::Constant { matrix: rows }, spectrum, kappa: None, sup_norm: None })
    }

    /// c·F on D neutral species.
    pub fn constant_flip(d: usize, c: f64) -> Self {
        Self::constant(&(flip(d) * C::new(c, 0.0)), ParticleSpectrum::neutral(d, 1.0)).expect("flip is D²×D²")
    }

    pub fn species(&self) -> usize {
        self.spectrum.species
    }

    pub fn is_scalar(&self) -> bool {
        self.spectrum.species == 1
    }

    /// Closed-form kinds admit evaluation off the real axis.
    pub fn is_analytic(&self) -> bool {
        !matches!(self.kind, Kind::UserTable { .. })
    }

    pub fn eval(&self, z: C) -> Result<CMat> {
        let d = self.species();
        if let Kind::UserTable { theta, entries } = &self.kind {
            if z.im != 0.0 {
                return Err(Error::OutOfStrip { re: z.re, im: z.im });
            }
            return interpolate(theta, entries, d, z.re);
        }
        let slack = 1e-12;
        if z.im < -self.kappa - slack || z.im > PI + self.kappa + slack {
            return Err(Error::OutOfStrip { re: z.re, im: z.im });
        }
        if let Some(s) = &self.scalar {
            return Ok(CMat::from_element(1, 1, s.eval(z)?));
        }
        if let Some(m) = &self.constant {
            return Ok(m.clone());
        }
        match &self.kind {
            Kind::Diagonal { omega } => {
                let mut m = CMat::zeros(d * d, d * d);
                for a in 0..d {
                    for b in 0..d {
                        // S^{αβ}_{βα} = ω_{αβ}
                        m[(a * d + b, b * d + a)] = omega[a][b].eval(z)?;
                    }
                }
                Ok(m)
            }
            Kind::ON { n, convention } => {
                let s = eval_on_sigma(*n, z)?;
                let (c1, cf) = match convention {
                    OnConvention::Literal => (s.s2, s.s3),
                    OnConvention::YangBaxter => (s.s3, s.s2),
                };
                let mut m = CMat::zeros(d * d, d * d);
                for a in 0..d {
                    for b in 0..d {
                        let r = a * d + b;
                        if a == b {
                            for g in 0..d {
                                m[(r, g * d + g)] += s.s1;
                            }
                        }
                        m[(r, a * d + b)] += c1;
                        m[(r, b * d + a)] += cf;
                    }
                }
                Ok(m)
            }
            _ => unreachable!("scalar and constant kinds handled above"),
        }
    }

    pub fn eval_real(&self, theta: f64) -> Result<CMat> {
        self.eval(C::new(theta, 0.0))
    }

    /// Scalar value; errors for D > 1.
    pub fn eval_scalar(&self, z: C) -> Result<C> {
        if !self.is_scalar() {
            return input("scalar evaluation of a matrix S");
        }
        Ok(self.eval(z)?[(0, 0)])
    }
}

fn need_d1(d: usize) -> Result<()> {
    if d != 1 {
        return input("scalar kinds require D = 1");
    }
    Ok(())
}

fn table_matrix(rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMat> {
    let n = d * d;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return input("matrix table must be D²×D²");
    }
    Ok(CMat::from_fn(n, n, |r, c| C::new(rows[r][c][0], rows[r][c][1])))
}

fn interpolate(theta: &[f64], entries: &[Vec<Vec<[f64; 2]>>], d: usize, x: f64) -> Result<CMat> {
    let last = theta.len() - 1;
    if x < theta[0] - 1e-12 || x > theta[last] + 1e-12 {
        return Err(Error::OutOfStrip { re: x, im: 0.0 });
    }
    let i = theta.partition_point(|t| *t <= x).clamp(1, last);
    let (t0, t1) = (theta[i - 1], theta[i]);
    let w = ((x - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let a = table_matrix(&entries[i - 1], d)?;
    let b = table_matrix(&entries[i], d)?;
    Ok(a * C::new(1.0 - w, 0.0) + b * C::new(w, 0.0))
}

/// Samples `s` on `theta` into a user table.
pub fn tabulate(s: &SMatrix, theta: &[f64]) -> Result<SMatrix> {
    let d = s.species();
    let mut entries = Vec::with_capacity(theta.len());
    for &t in theta {
        let m = s.eval_real(t)?;
        entries.push((0..d * d).map(|r| (0..d * d).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect());
    }
    SMatrix::from_spec(SMatrixSpec { kind: Kind::UserTable { theta: theta.to_vec(), entries }, spectrum: s.spectrum.clone(), kappa: None, sup_norm: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_gordon_spot_values() {
        let s = SMatrix::sinh_gordon(4.0 * PI);
        assert!((s.eval_scalar(C::new(0.0, 0.0)).unwrap() + 1.0).norm() < 1e-15);
        let v = s.eval_scalar(C::new(1f64.asinh(), 0.0)).unwrap();
        assert!((v + C::i()).norm() < 1e-15);
        assert!(matches!(s.eval_scalar(C::new(0.0, -FRAC_PI_2)), Err(Error::Pole { .. })));
    }

    #[test]
    fn empty_scalar_family_is_one() {
        let s = SMatrix::scalar_family(1.0, 0.0, vec![]).unwrap();
        assert!((s.eval_scalar(C::new(0.3, 1.1)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn scalar_family_rejects_unclosed_zeros() {
        assert!(SMatrix::scalar_family(-1.0, 0.0, vec![C::new(0.4, 0.7)]).is_err());
        assert!(SMatrix::scalar_family(-1.0, 0.0, vec![C::new(0.4, 0.7), C::new(-0.4, 0.7)]).is_ok());
        assert!(SMatrix::scalar_family(-1.0, 0.0, vec![C::new(0.0, 2.0)]).is_err());
    }

    #[test]
    fn o3_at_zero_is_minus_flip() {
        let s = SMatrix::o_n(3).unwrap();
        let m = s.eval_real(0.0).unwrap();
        assert!(crate::linalg::max_abs(&(m + flip(3))) < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"kind":"sinh-gordon","spectrum":{"D":1,"masses":[1.0],"conjugation":[1]},"params":{"g2":2.0}}"#;
        let s = SMatrix::from_json(text).unwrap();
        let back = serde_json::to_string(&s.to_spec()).unwrap();
        let again = SMatrix::from_json(&back).unwrap();
        assert_eq!(again.kind, s.kind);
        assert!(SMatrix::from_json(r#"{"kind":"o(n)","spectrum":{"D":2,"masses":[1,1],"conjugation":[1,2]},"params":{"N":3}}"#).is_err());
    }

    #[test]
    fn table_interpolates_and_refuses_continuation() {
        let s = SMatrix::sinh_gordon(1.0);
        let t = tabulate(&s, &crate::num::linspace(-1.0, 1.0, 5)).unwrap();
        assert!((t.eval_scalar(C::new(0.5, 0.0)).unwrap() - s.eval_scalar(C::new(0.5, 0.0)).unwrap()).norm() < 1e-14);
        assert!(t.eval(C::new(0.0, 0.1)).is_err());
    }
}
