//! Fermionic base model and its deformation: CAR Fock space over a finite
//! momentum set, deformation functions R, the matrices Q, the multipliers
//! T_R, the twisted operators a^#_{R,Q} and fields φ_{R,Q}, the relative
//! locality integral, two-particle elements and the bridge to scalar
//! scattering functions S_λ(θ) = −R(λm² sinh θ)².
//!
//! One-particle vectors are arrays over the momentum set; the integral
//! ∫dμ(p) becomes Σ_i w_i and ω δ(p − q) becomes δ_ij/w_i. Operators taking
//! a `kernel` c act as Σ_i w_i c_i X(p_i), so a*(φ) has kernel φ and a(φ)
//! has kernel conj φ.

use crate::error::{input, Error, Result};
use crate::fields::{self, OnShellTransform, ResidualRow, ResidualSweep, Sign, SweepConfig, TestFunction2D, WedgeTag, FLOOR};
use crate::fock::{digits, GridFunction, RapidityGrid};
use crate::smatrix::{Kind, ParticleSpectrum, SMatrix, SMatrixSpec};
use crate::{perm, C};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Largest layer (entries) the CAR space will allocate.
pub const MAX_LAYER_LEN: usize = 1 << 22;
/// Slack on Im a ≥ 0 for arguments produced by complex arithmetic.
pub const UHP_SLACK: f64 = 1e-12;

fn czero() -> C {
    C::new(0.0, 0.0)
}

fn close(a: C, b: C) -> bool {
    (a - b).norm() < 1e-12
}

// ---------------------------------------------------------------------------
// Deformation functions

/// R(a) = sign · ∏_k (ζ_k − a)/(ζ_k + a), Im ζ_k > 0, zero multiset closed
/// under ζ ↦ −ζ̄. Only finite Blaschke products are represented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDeformation")]
pub struct DeformationFunction {
    pub sign: i8,
    /// ζ_k as [re, im].
    pub zeros: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawDeformation {
    sign: i8,
    #[serde(default)]
    zeros: Vec<[f64; 2]>,
}

impl TryFrom<RawDeformation> for DeformationFunction {
    type Error = Error;
    fn try_from(r: RawDeformation) -> Result<Self> {
        let f = DeformationFunction { sign: r.sign, zeros: r.zeros };
        f.validate()?;
        Ok(f)
    }
}

impl DeformationFunction {
    pub fn new(sign: i8, zeros: &[C]) -> Result<Self> {
        let f = Self { sign, zeros: zeros.iter().map(|z| [z.re, z.im]).collect() };
        f.validate()?;
        Ok(f)
    }

    /// R ≡ 1, the undeformed model.
    pub fn one() -> Self {
        Self { sign: 1, zeros: Vec::new() }
    }

    /// R ≡ −1, which reproduces the auxiliary field φ̂.
    pub fn minus_one() -> Self {
        Self { sign: -1, zeros: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sign != 1 && self.sign != -1 {
            return input("deformation function: sign must be ±1");
        }
        let zs: Vec<C> = self.zeros.iter().map(|z| C::new(z[0], z[1])).collect();
        for z in &zs {
            if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
                return input(format!("deformation function: zero {z} needs finite Im ζ > 0"));
            }
            let mine = zs.iter().filter(|w| close(**w, *z)).count();
            let mirror = zs.iter().filter(|w| close(**w, -z.conj())).count();
            if mine != mirror {
                return input("deformation function: zero set not closed under ζ ↦ −ζ̄");
            }
        }
        Ok(())
    }

    pub fn zeros_c(&self) -> Vec<C> {
        self.zeros.iter().map(|z| C::new(z[0], z[1])).collect()
    }

    /// −R.
    pub fn negated(&self) -> Self {
        Self { sign: -self.sign, zeros: self.zeros.clone() }
    }

    /// R·R′: signs multiply, zero multisets concatenate.
    pub fn product(&self, other: &Self) -> Self {
        Self { sign: self.sign * other.sign, zeros: self.zeros.iter().chain(&other.zeros).copied().collect() }
    }

    /// R(a) on the closed upper half plane.
    pub fn eval(&self, a: C) -> Result<C> {
        if a.im < -UHP_SLACK * a.norm().max(1.0) || !a.re.is_finite() || !a.im.is_finite() {
            return input(format!("R evaluated at {a}: Im a ≥ 0 required"));
        }
        Ok(self.blaschke(a))
    }

    /// R(a) for real a; a phase.
    pub fn at(&self, a: f64) -> C {
        self.blaschke(C::new(a, 0.0))
    }

    /// Continuation of a ↦ conj R(−a) from the real line: conj R(−ā),
    /// analytic where Im a ≥ 0.
    pub fn reflected_conj(&self, a: C) -> Result<C> {
        Ok(self.eval(-a.conj())?.conj())
    }

    fn blaschke(&self, a: C) -> C {
        let mut v = C::new(self.sign as f64, 0.0);
        for z in &self.zeros {
            let z = C::new(z[0], z[1]);
            v *= (z - a) / (z + a);
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Q matrices

/// Minkowski product, signature (+, −, …, −).
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

fn minkowski_c(a: &[C], b: &[f64]) -> C {
    a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<C>()
}

/// Normal form of a wedge-covariant Q: κ on the (0,1) block, κ′ on the
/// skew (2,3) block when d = 4. In d = 2, κ is the λ of Q = λσ₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QSpec", into = "QSpec")]
pub struct QMatrix {
    pub d: usize,
    pub kappa: f64,
    pub kappa_prime: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct QSpec {
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_prime: Option<f64>,
}

impl TryFrom<QSpec> for QMatrix {
    type Error = Error;
    fn try_from(s: QSpec) -> Result<Self> {
        let kappa = match (s.d, s.lambda, s.kappa) {
            (2, Some(l), None) | (2, None, Some(l)) => l,
            (2, _, _) => return input("Q for d = 2 needs exactly one of lambda, kappa"),
            (_, None, Some(k)) => k,
            _ => return input("Q for d > 2 needs kappa (lambda is the d = 2 name)"),
        };
        QMatrix::new(s.d, kappa, s.kappa_prime.unwrap_or(0.0))
    }
}

impl From<QMatrix> for QSpec {
    fn from(q: QMatrix) -> Self {
        match q.d {
            2 => QSpec { d: 2, lambda: Some(q.kappa), kappa: None, kappa_prime: None },
            4 => QSpec { d: 4, lambda: None, kappa: Some(q.kappa), kappa_prime: Some(q.kappa_prime) },
            d => QSpec { d, lambda: None, kappa: Some(q.kappa), kappa_prime: None },
        }
    }
}

impl QMatrix {
    pub fn new(d: usize, kappa: f64, kappa_prime: f64) -> Result<Self> {
        if d < 2 {
            return input("Q needs d ≥ 2");
        }
        if !kappa.is_finite() || !kappa_prime.is_finite() {
            return input("Q parameters must be finite");
        }
        if d != 4 && kappa_prime != 0.0 {
            return input("κ′ exists only for d = 4");
        }
        Ok(Self { d, kappa, kappa_prime })
    }

    /// Q = λ [[0, 1], [1, 0]].
    pub fn two_d(lambda: f64) -> Result<Self> {
        Self::new(2, lambda, 0.0)
    }

    pub fn negated(&self) -> Self {
        Self { d: self.d, kappa: -self.kappa, kappa_prime: -self.kappa_prime }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.d, self.d);
        m[(0, 1)] = self.kappa;
        m[(1, 0)] = self.kappa;
        if self.d == 4 {
            m[(2, 3)] = self.kappa_prime;
            m[(3, 2)] = -self.kappa_prime;
        }
        m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.d];
        y[0] = self.kappa * x[1];
        y[1] = self.kappa * x[0];
        if self.d == 4 {
            y[2] = self.kappa_prime * x[3];
            y[3] = -self.kappa_prime * x[2];
        }
        y
    }

    fn apply_c(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![czero(); self.d];
        y[0] = x[1] * self.kappa;
        y[1] = x[0] * self.kappa;
        if self.d == 4 {
            y[2] = x[3] * self.kappa_prime;
            y[3] = -x[2] * self.kappa_prime;
        }
        y
    }

    /// max |ηQ + (ηQ)ᵀ|: zero iff Q is skew for the Minkowski product.
    pub fn skew_residual(&self) -> f64 {
        let eta = DMatrix::from_fn(self.d, self.d, |i, j| {
            if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                -1.0
            }
        });
        let a = &eta * self.matrix();
        (&a + a.transpose()).amax()
    }

    /// Largest deviation from ΛQΛ⁻¹ = Q over boosts along x¹ with the given
    /// rapidities (and rotations of the (2,3) plane when d = 4), and from
    /// ΛQΛ⁻¹ = −Q for the W_R-preserving reflection diag(−1, 1, −1, 1, …)
    /// in L₊↓ (d ≥ 3; d = 2 has no such element).
    pub fn covariance_residual(&self, rapidities: &[f64]) -> f64 {
        let q = self.matrix();
        let conj = |l: &DMatrix<f64>| l * &q * l.clone().try_inverse().expect("Lorentz matrices are invertible");
        let mut worst: f64 = 0.0;
        for &t in rapidities {
            let mut b = DMatrix::identity(self.d, self.d);
            b[(0, 0)] = t.cosh();
            b[(1, 1)] = t.cosh();
            b[(0, 1)] = t.sinh();
            b[(1, 0)] = t.sinh();
            worst = worst.max((conj(&b) - &q).amax());
            if self.d == 4 {
                let mut r = DMatrix::identity(4, 4);
                let (s, c) = t.sin_cos();
                r[(2, 2)] = c;
                r[(3, 3)] = c;
                r[(2, 3)] = -s;
                r[(3, 2)] = s;
                worst = worst.max((conj(&r) - &q).amax());
            }
        }
        if self.d >= 3 {
            let refl = DMatrix::from_fn(self.d, self.d, |i, j| match (i == j, i) {
                (false, _) => 0.0,
                (true, 0) | (true, 2) => -1.0,
                _ => 1.0,
            });
            worst = worst.max((conj(&refl) + &q).amax());
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// CAR Fock space

#[derive(Clone, Debug, PartialEq)]
pub struct FermiFockVector {
    /// Layer n has M^n entries, slot 0 most significant.
    pub layers: Vec<Vec<C>>,
    /// Set when an operation dropped a nonzero (N_max+1)-particle part.
    pub truncated: bool,
}

impl FermiFockVector {
    pub fn n_max(&self) -> usize {
        self.layers.len() - 1
    }

    /// Highest layer with a nonzero entry; None for the zero vector.
    pub fn top(&self) -> Option<usize> {
        self.layers.iter().rposition(|l| l.iter().any(|x| x.norm() > 0.0))
    }

    pub fn add(&self, other: &Self, c: C) -> Self {
        let layers = self.layers.iter().zip(&other.layers).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect()).collect();
        Self { layers, truncated: self.truncated || other.truncated }
    }

    pub fn scale(&self, c: C) -> Self {
        Self { layers: self.layers.iter().map(|l| l.iter().map(|x| x * c).collect()).collect(), truncated: self.truncated }
    }
}

/// Phase table r[i·M + j] = R(Qp_i · p_j).
#[derive(Clone, Debug)]
pub struct Twist {
    m: usize,
    r: Vec<C>,
}

impl Twist {
    pub fn identity(m: usize) -> Self {
        Self { m, r: vec![C::new(1.0, 0.0); m * m] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C {
        self.r[i * self.m + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Create,
    Annihilate,
}

/// Antisymmetric Fock space over momenta p_i ∈ H_m⁺ ⊂ ℝ^d with weights w_i.
#[derive(Clone, Debug)]
pub struct CarSpace {
    pub momenta: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub n_max: usize,
    /// Set for the d = 2 rapidity parametrization p = m(cosh θ, sinh θ).
    rapidity: Option<(RapidityGrid, f64)>,
}

impl CarSpace {
    pub fn from_rapidity(grid: RapidityGrid, m: f64, n_max: usize) -> Result<Self> {
        if !(m > 0.0) {
            return input("mass must be positive");
        }
        let momenta = grid.points.iter().map(|t| vec![m * t.cosh(), m * t.sinh()]).collect();
        let s = Self { momenta, weights: grid.weights.clone(), n_max, rapidity: Some((grid, m)) };
        s.guard()?;
        Ok(s)
    }

    /// Discrete momentum set for the algebraic checks in any d ≥ 2.
    pub fn from_momenta(momenta: Vec<Vec<f64>>, weights: Vec<f64>, n_max: usize) -> Result<Self> {
        if momenta.is_empty() || momenta.len() != weights.len() {
            return input("momenta and weights must be nonempty and of equal length");
        }
        let d = momenta[0].len();
        if d < 2 || momenta.iter().any(|p| p.len() != d) {
            return input("momenta must share one dimension d ≥ 2");
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return input("weights must be positive");
        }
        let s = Self { momenta, weights, n_max, rapidity: None };
        s.guard()?;
        Ok(s)
    }

    fn guard(&self) -> Result<()> {
        let len = self.len().checked_pow(self.n_max as u32).unwrap_or(usize::MAX);
        if len > MAX_LAYER_LEN {
            return Err(Error::TooLarge { what: "CAR layer length M^N_max".into(), value: len, limit: MAX_LAYER_LEN });
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.momenta[0].len()
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    pub fn rapidity_grid(&self) -> Option<&RapidityGrid> {
        self.rapidity.as_ref().map(|(g, _)| g)
    }

    pub fn mass(&self) -> Option<f64> {
        self.rapidity.as_ref().map(|(_, m)| *m)
    }

    fn need_rapidity(&self) -> Result<(&RapidityGrid, f64)> {
        self.rapidity.as_ref().map(|(g, m)| (g, *m)).ok_or_else(|| Error::Input("operation needs a d = 2 rapidity grid".into()))
    }

    pub fn spectrum(&self) -> Result<ParticleSpectrum> {
        Ok(ParticleSpectrum::neutral(1, self.need_rapidity()?.1))
    }

    pub fn layer_len(&self, n: usize) -> usize {
        self.len().pow(n as u32)
    }

    pub fn zero(&self) -> FermiFockVector {
        FermiFockVector { layers: (0..=self.n_max).map(|n| vec![czero(); self.layer_len(n)]).collect(), truncated: false }
    }

    pub fn vacuum(&self) -> FermiFockVector {
        let mut v = self.zero();
        v.layers[0][0] = C::new(1.0, 0.0);
        v
    }

    pub fn from_layer(&self, n: usize, layer: Vec<C>) -> Result<FermiFockVector> {
        if n > self.n_max || layer.len() != self.layer_len(n) {
            return input("layer does not fit this CAR space");
        }
        let mut v = self.zero();
        v.layers[n] = layer;
        Ok(v)
    }

    /// δ_i = e_i/w_i, the grid delta at p_i.
    pub fn delta(&self, i: usize) -> Vec<C> {
        let mut c = vec![czero(); self.len()];
        c[i] = C::new(1.0 / self.weights[i], 0.0);
        c
    }

    fn layer_weight(&self, n: usize, idx: usize) -> f64 {
        digits(idx, self.len(), n).iter().map(|&i| self.weights[i]).product()
    }

    pub fn one_inner(&self, a: &[C], b: &[C]) -> C {
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x.conj() * y * *w).sum()
    }

    pub fn inner(&self, a: &FermiFockVector, b: &FermiFockVector) -> C {
        let mut acc = czero();
        for n in 0..a.layers.len().min(b.layers.len()) {
            for (idx, (x, y)) in a.layers[n].iter().zip(&b.layers[n]).enumerate() {
                if *x != czero() && *y != czero() {
                    acc += x.conj() * y * self.layer_weight(n, idx);
                }
            }
        }
        acc
    }

    pub fn norm(&self, a: &FermiFockVector) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    fn check_vec(&self, v: &FermiFockVector) -> Result<()> {
        if v.layers.len() != self.n_max + 1 || v.layers.iter().enumerate().any(|(n, l)| l.len() != self.layer_len(n)) {
            return input("vector does not fit this CAR space");
        }
        Ok(())
    }

    fn check_kernel(&self, c: &[C]) -> Result<()> {
        if c.len() != self.len() {
            return input("one-particle function does not match the momentum set");
        }
        Ok(())
    }

    /// P⁻_n: (1/n!) Σ_π sign(π) Ψ(p_{π(1)}, …, p_{π(n)}).
    pub fn antisymmetrize(&self, n: usize, layer: &[C]) -> Result<Vec<C>> {
        if layer.len() != self.layer_len(n) {
            return input("layer length does not match n");
        }
        if n < 2 {
            return Ok(layer.to_vec());
        }
        let m = self.len();
        let perms = perm::lexicographic(n);
        let inv = 1.0 / perms.len() as f64;
        let mut out = vec![czero(); layer.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let ds = digits(idx, m, n);
            let mut acc = czero();
            for p in &perms {
                let src = p.iter().fold(0, |a, &k| a * m + ds[k]);
                acc += layer[src] * perm::sign(p);
            }
            *o = acc * inv;
        }
        Ok(out)
    }

    /// max over layers of max |Ψ_n − P⁻_nΨ_n|.
    pub fn antisymmetry_residual(&self, v: &FermiFockVector) -> Result<f64> {
        self.check_vec(v)?;
        let mut worst: f64 = 0.0;
        for (n, l) in v.layers.iter().enumerate() {
            let p = self.antisymmetrize(n, l)?;
            worst = p.iter().zip(l).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
        }
        Ok(worst)
    }

    /// Seeded antisymmetric vector with layers 0..=top, unit norm.
    pub fn random_antisymmetric(&self, top: usize, rng: &mut impl Rng) -> Result<FermiFockVector> {
        if top > self.n_max {
            return input("top layer exceeds N_max");
        }
        let mut v = self.zero();
        for n in 0..=top {
            let raw: Vec<C> = (0..self.layer_len(n)).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            v.layers[n] = self.antisymmetrize(n, &raw)?;
        }
        let nv = self.norm(&v);
        Ok(v.scale(C::new(1.0 / nv, 0.0)))
    }

    /// Layer n times ∏_k f(i_k).
    fn multiply(&self, v: &FermiFockVector, f: impl Fn(usize) -> C) -> FermiFockVector {
        let m = self.len();
        let fs: Vec<C> = (0..m).map(f).collect();
        let mut out = v.clone();
        for (n, l) in out.layers.iter_mut().enumerate() {
            for (idx, x) in l.iter_mut().enumerate() {
                if *x != czero() {
                    *x *= digits(idx, m, n).iter().map(|&i| fs[i]).product::<C>();
                }
            }
        }
        out
    }

    /// Layer n times g(n).
    pub fn by_number(&self, v: &FermiFockVector, g: impl Fn(usize) -> f64) -> FermiFockVector {
        let mut out = v.clone();
        for (n, l) in out.layers.iter_mut().enumerate() {
            let c = g(n);
            l.iter_mut().for_each(|x| *x *= c);
        }
        out
    }

    /// (−1)^N.
    pub fn parity(&self, v: &FermiFockVector) -> FermiFockVector {
        self.by_number(v, |n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Z = (−1)^{N(N−1)/2}.
    pub fn z_unitary(&self, v: &FermiFockVector) -> FermiFockVector {
        self.by_number(v, |n| if (n * n.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// (T_R(x)Ψ)_n = ∏_k R(x·p_k) Ψ_n.
    pub fn t_r(&self, rf: &DeformationFunction, x: &[f64], v: &FermiFockVector) -> Result<FermiFockVector> {
        self.check_vec(v)?;
        if x.len() != self.d() {
            return input("T_R: x must be a d-vector");
        }
        Ok(self.multiply(v, |i| rf.at(minkowski(x, &self.momenta[i]))))
    }

    /// Phase table of a*_{R,Q}: R(Qp_i · p_j).
    pub fn twist(&self, rf: &DeformationFunction, q: &QMatrix) -> Result<Twist> {
        if q.d != self.d() {
            return input("Q dimension does not match the momentum set");
        }
        let m = self.len();
        let qp: Vec<Vec<f64>> = self.momenta.iter().map(|p| q.apply(p)).collect();
        let r = (0..m * m).map(|k| rf.at(minkowski(&qp[k / m], &self.momenta[k % m]))).collect();
        Ok(Twist { m, r })
    }

    /// Σ_i w_i c_i a*_{R,Q}(p_i), with a*_{R,Q}(p) = a*(p)T_R(Qp)*:
    /// (·)_n(p₁..p_n) = n^{-1/2} Σ_k (−1)^{k+1} c(p_k) ∏_{j≠k} conj R(Qp_k·p_j) Ψ_{n−1}(p̂_k).
    fn create(&self, tw: &Twist, c: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        self.check_vec(v)?;
        self.check_kernel(c)?;
        let m = self.len();
        let mut out = self.zero();
        out.truncated = v.truncated;
        for (s, src) in v.layers.iter().enumerate() {
            if src.iter().all(|x| *x == czero()) {
                continue;
            }
            let n = s + 1;
            if n > self.n_max {
                out.truncated = true;
                continue;
            }
            let norm = 1.0 / (n as f64).sqrt();
            for (idx, o) in out.layers[n].iter_mut().enumerate() {
                let ds = digits(idx, m, n);
                let mut acc = czero();
                for k in 0..n {
                    let ik = ds[k];
                    if c[ik] == czero() {
                        continue;
                    }
                    let mut ph = c[ik];
                    let mut rest = 0;
                    for (j, &ij) in ds.iter().enumerate() {
                        if j != k {
                            ph *= tw.at(ik, ij).conj();
                            rest = rest * m + ij;
                        }
                    }
                    let term = ph * src[rest];
                    acc += if k % 2 == 0 { term } else { -term };
                }
                *o = acc * norm;
            }
        }
        Ok(out)
    }

    /// Σ_i w_i c_i a_{R,Q}(p_i), with a_{R,Q}(p) = T_R(Qp)a(p):
    /// (·)_n(p₁..p_n) = √(n+1) Σ_i w_i c_i ∏_j R(Qp_i·p_j) Ψ_{n+1}(p_i, p₁..p_n).
    fn annihilate(&self, tw: &Twist, c: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        self.check_vec(v)?;
        self.check_kernel(c)?;
        let m = self.len();
        let mut out = self.zero();
        out.truncated = v.truncated;
        for n in 0..self.n_max {
            let src = &v.layers[n + 1];
            if src.iter().all(|x| *x == czero()) {
                continue;
            }
            let stride = self.layer_len(n);
            let norm = ((n + 1) as f64).sqrt();
            for (idx, o) in out.layers[n].iter_mut().enumerate() {
                let ds = digits(idx, m, n);
                let mut acc = czero();
                for i in 0..m {
                    if c[i] == czero() {
                        continue;
                    }
                    let ph = ds.iter().fold(c[i] * self.weights[i], |a, &j| a * tw.at(i, j));
                    acc += ph * src[i * stride + idx];
                }
                *o = acc * norm;
            }
        }
        Ok(out)
    }

    fn apply(&self, op: Op, tw: &Twist, c: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        match op {
            Op::Create => self.create(tw, c, v),
            Op::Annihilate => self.annihilate(tw, c, v),
        }
    }

    /// a*_{R,Q}(φ)Ψ.
    pub fn a_star_rq(&self, rf: &DeformationFunction, q: &QMatrix, phi: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        self.create(&self.twist(rf, q)?, phi, v)
    }

    /// a_{R,Q}(φ)Ψ = ∫dμ(p) conj φ(p) a_{R,Q}(p)Ψ.
    pub fn a_rq(&self, rf: &DeformationFunction, q: &QMatrix, phi: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        let c: Vec<C> = phi.iter().map(|x| x.conj()).collect();
        self.annihilate(&self.twist(rf, q)?, &c, v)
    }

    /// Undeformed CAR operators a*(φ), a(φ).
    pub fn a_star(&self, phi: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        self.create(&Twist::identity(self.len()), phi, v)
    }

    pub fn a(&self, phi: &[C], v: &FermiFockVector) -> Result<FermiFockVector> {
        let c: Vec<C> = phi.iter().map(|x| x.conj()).collect();
        self.annihilate(&Twist::identity(self.len()), &c, v)
    }

    fn need_headroom(&self, v: &FermiFockVector, extra: usize) -> Result<()> {
        if let Some(t) = v.top() {
            if t + extra > self.n_max {
                return Err(Error::TooLarge { what: "particle number after the check".into(), value: t + extra, limit: self.n_max });
            }
        }
        Ok(())
    }

    /// X(u)Y(v)Ψ − Σ_j w_j v_j Y(p_j) X(u·coef(·, j))Ψ: the smeared defect of
    /// X(p)Y(q) = coef(p, q) Y(q)X(p).
    #[allow(clippy::too_many_arguments)]
    fn exchange_defect(
        &self,
        x: (Op, &Twist),
        y: (Op, &Twist),
        u: &[C],
        w: &[C],
        coef: impl Fn(usize, usize) -> C,
        psi: &FermiFockVector,
    ) -> Result<FermiFockVector> {
        let lhs = self.apply(x.0, x.1, u, &self.apply(y.0, y.1, w, psi)?)?;
        let mut acc = lhs;
        for j in 0..self.len() {
            if w[j] == czero() {
                continue;
            }
            let uj: Vec<C> = (0..self.len()).map(|i| u[i] * coef(i, j)).collect();
            let t = self.apply(y.0, y.1, &self.delta(j), &self.apply(x.0, x.1, &uj, psi)?)?;
            acc = acc.add(&t, -w[j] * self.weights[j]);
        }
        Ok(acc)
    }

    /// Σ_i w_i u_i v_i ∏_k g(i, i_k) Ψ: the smeared δ-term with a
    /// T-type multiplier.
    fn delta_term(&self, u: &[C], w: &[C], g: impl Fn(usize, usize) -> C, psi: &FermiFockVector) -> FermiFockVector {
        let mut acc = self.zero();
        for i in 0..self.len() {
            let c = u[i] * w[i] * self.weights[i];
            if c == czero() {
                continue;
            }
            acc = acc.add(&self.multiply(psi, |k| g(i, k)), c);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Exchange relations

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ExchangeTriple {
    pub creators: f64,
    pub annihilators: f64,
    pub mixed: f64,
}

impl ExchangeTriple {
    pub fn max(&self) -> f64 {
        self.creators.max(self.annihilators).max(self.mixed)
    }
}

/// Smeared residuals of the deformed exchange relations between
/// a^#_{R,Q} and a^#_{R,Q′}. Smearing: a*a* with φ(p)ψ(q), aa with
/// conj φ(p) conj ψ(q), a a* with conj φ(p) ψ(q).
pub fn check_deformed_exchange(
    space: &CarSpace,
    rf: &DeformationFunction,
    q: &QMatrix,
    q2: &QMatrix,
    phi: &[C],
    psi: &[C],
    v: &FermiFockVector,
) -> Result<ExchangeTriple> {
    space.need_headroom(v, 2)?;
    let t1 = space.twist(rf, q)?;
    let t2 = space.twist(rf, q2)?;
    let cphi: Vec<C> = phi.iter().map(|x| x.conj()).collect();
    let cpsi: Vec<C> = psi.iter().map(|x| x.conj()).collect();
    // a*_{R,Q}(p)a*_{R,Q′}(q) = −R(Q′q·p)/R(Qp·q) a*_{R,Q′}(q)a*_{R,Q}(p), same for a a
    let swap = |i: usize, j: usize| -t2.at(j, i) / t1.at(i, j);
    let cc = space.exchange_defect((Op::Create, &t1), (Op::Create, &t2), phi, psi, swap, v)?;
    let aa = space.exchange_defect((Op::Annihilate, &t1), (Op::Annihilate, &t2), &cphi, &cpsi, swap, v)?;
    // a_{R,Q}(p)a*_{R,Q′}(q) = δ T_R(Qp)T_R(Q′p)* − R(Qp·q)/R(Q′q·p) a*_{R,Q′}(q)a_{R,Q}(p)
    let mixed = space.exchange_defect((Op::Annihilate, &t1), (Op::Create, &t2), &cphi, psi, |i, j| -t1.at(i, j) / t2.at(j, i), v)?;
    let delta = space.delta_term(&cphi, psi, |i, k| t1.at(i, k) * t2.at(i, k).conj(), v);
    let mixed = mixed.add(&delta, C::new(-1.0, 0.0));
    Ok(ExchangeTriple { creators: space.norm(&cc), annihilators: space.norm(&aa), mixed: space.norm(&mixed) })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct OppositeCommutators {
    /// [a_{R,Q}(φ), a_{−R,−Q}(ψ)]
    pub aa: f64,
    /// [a*_{R,Q}(φ), a*_{−R,−Q}(ψ)]
    pub cc: f64,
    /// [a_{R,Q}(φ), a*_{−R,−Q}(ψ)] − ⟨φ|(−1)^N T_R(Qp)T_R(−Qp)*|ψ⟩
    pub a_cstar: f64,
    /// [a*_{R,Q}(φ), a_{−R,−Q}(ψ)] − ⟨ψ|(−1)^{N+1} T_R(Qp)*T_R(−Qp)|φ⟩
    pub cstar_a: f64,
}

impl OppositeCommutators {
    pub fn max(&self) -> f64 {
        self.aa.max(self.cc).max(self.a_cstar).max(self.cstar_a)
    }
}

/// The commutator system between a^#_{R,Q} and a^#_{−R,−Q}.
pub fn check_opposite_commutators(
    space: &CarSpace,
    rf: &DeformationFunction,
    q: &QMatrix,
    phi: &[C],
    psi: &[C],
    v: &FermiFockVector,
) -> Result<OppositeCommutators> {
    space.need_headroom(v, 2)?;
    let t1 = space.twist(rf, q)?;
    let t2 = space.twist(&rf.negated(), &q.negated())?;
    let cphi: Vec<C> = phi.iter().map(|x| x.conj()).collect();
    let cpsi: Vec<C> = psi.iter().map(|x| x.conj()).collect();
    let one = |_: usize, _: usize| C::new(1.0, 0.0);
    let aa = space.exchange_defect((Op::Annihilate, &t1), (Op::Annihilate, &t2), &cphi, &cpsi, one, v)?;
    let cc = space.exchange_defect((Op::Create, &t1), (Op::Create, &t2), phi, psi, one, v)?;
    let qp: Vec<Vec<f64>> = space.momenta.iter().map(|p| q.apply(p)).collect();
    let r_plus = |i: usize, k: usize| rf.at(minkowski(&qp[i], &space.momenta[k]));
    let r_minus = |i: usize, k: usize| rf.at(-minkowski(&qp[i], &space.momenta[k]));
    let ac = space.exchange_defect((Op::Annihilate, &t1), (Op::Create, &t2), &cphi, psi, one, v)?;
    let d1 = space.parity(&space.delta_term(&cphi, psi, |i, k| r_plus(i, k) * r_minus(i, k).conj(), v));
    let ac = ac.add(&d1, C::new(-1.0, 0.0));
    let ca = space.exchange_defect((Op::Create, &t1), (Op::Annihilate, &t2), phi, &cpsi, one, v)?;
    let d2 = space.parity(&space.delta_term(phi, &cpsi, |i, k| r_plus(i, k).conj() * r_minus(i, k), v));
    let ca = ca.add(&d2, C::new(1.0, 0.0));
    Ok(OppositeCommutators { aa: space.norm(&aa), cc: space.norm(&cc), a_cstar: space.norm(&ac), cstar_a: space.norm(&ca) })
}

// ---------------------------------------------------------------------------
// Fields

/// φ_{R,Q}(f)Ψ = a*_{R,Q}(f⁺)Ψ + a_{R,Q}(conj f⁻)Ψ.
pub fn phi_rq(space: &CarSpace, rf: &DeformationFunction, q: &QMatrix, t: &OnShellTransform, v: &FermiFockVector) -> Result<FermiFockVector> {
    let tw = space.twist(rf, q)?;
    phi_twisted(space, &tw, t, v)
}

fn phi_twisted(space: &CarSpace, tw: &Twist, t: &OnShellTransform, v: &FermiFockVector) -> Result<FermiFockVector> {
    let a = space.create(tw, &t.plus.values, v)?;
    let b = space.annihilate(tw, &t.minus.values, v)?;
    Ok(a.add(&b, C::new(1.0, 0.0)))
}

/// φ̂(f)Ψ = (a*(f⁺) − a(conj f⁻))(−1)^N Ψ.
pub fn phi_hat(space: &CarSpace, t: &OnShellTransform, v: &FermiFockVector) -> Result<FermiFockVector> {
    let pv = space.parity(v);
    let id = Twist::identity(space.len());
    let a = space.create(&id, &t.plus.values, &pv)?;
    let b = space.annihilate(&id, &t.minus.values, &pv)?;
    Ok(a.add(&b, C::new(-1.0, 0.0)))
}

/// ‖Z φ_{R,Q}(f) Z Ψ − φ_{−R,Q}(f) Ψ‖, Z = (−1)^{N(N−1)/2}.
pub fn z_conjugation_defect(space: &CarSpace, rf: &DeformationFunction, q: &QMatrix, t: &OnShellTransform, v: &FermiFockVector) -> Result<f64> {
    let lhs = space.z_unitary(&phi_rq(space, rf, q, t, &space.z_unitary(v))?);
    let rhs = phi_rq(space, &rf.negated(), q, t, v)?;
    Ok(space.norm(&lhs.add(&rhs, C::new(-1.0, 0.0))))
}

/// max over seeded pairs of |⟨u, φv⟩ − ⟨φu, v⟩| for the compression of
/// φ_{R,Q}(f) to N ≤ N_max (the part leaving the truncation is dropped).
/// For real f this is the hermiticity defect.
pub fn hermiticity_defect(space: &CarSpace, rf: &DeformationFunction, q: &QMatrix, t: &OnShellTransform, pairs: usize, rng: &mut impl Rng) -> Result<f64> {
    let tw = space.twist(rf, q)?;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u = space.random_antisymmetric(space.n_max, rng)?;
        let v = space.random_antisymmetric(space.n_max, rng)?;
        let a = space.inner(&u, &phi_twisted(space, &tw, t, &v)?);
        let b = space.inner(&phi_twisted(space, &tw, t, &u)?, &v);
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Relative wedge locality, d = 2

/// Which pair of fields is tested: Direct is [φ_{R,Q}(f), φ_{−R,−Q}(g)]
/// and needs κ ≥ 0; Corollary is [φ_{R,−Q}(f), φ_{−R,Q}(g)] and needs κ < 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalityMode {
    #[default]
    Direct,
    Corollary,
}

impl LocalityMode {
    /// Q entering the first field; its κ is ≥ 0 once validated.
    pub fn effective_q(self, q: &QMatrix) -> Result<QMatrix> {
        match (self, q.kappa >= 0.0) {
            (LocalityMode::Direct, true) => Ok(q.clone()),
            (LocalityMode::Corollary, false) => Ok(q.negated()),
            (LocalityMode::Direct, false) => input("negative deformation parameter: select the corollary mode (fields φ_{R,−Q}, φ_{−R,Q})"),
            (LocalityMode::Corollary, true) => input("corollary mode is for κ < 0; use the direct mode"),
        }
    }
}

/// Inputs of the locality integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalityProblem {
    pub deformation: DeformationFunction,
    pub q: QMatrix,
    #[serde(default)]
    pub mode: LocalityMode,
    pub f: TestFunction2D,
    pub g: TestFunction2D,
}

impl LocalityProblem {
    fn prepare(&self, ext: &CarSpace) -> Result<QMatrix> {
        if self.q.d != 2 || ext.rapidity_grid().is_none() {
            return input("the locality integral is implemented for d = 2 rapidity grids");
        }
        self.f.validate(1)?;
        self.g.validate(1)?;
        self.mode.effective_q(&self.q)
    }
}

/// (−1)^n Σ_θ w_θ [a(θ) ∏_k ρ_k(θ) + b(θ) ∏_k σ_k(θ)] Ψ_n(p₁..p_n), with
/// ρ, σ tabulated per quadrature node and external grid point.
fn eq_int_combine(ext: &CarSpace, w: &[f64], a: &[C], rho: &[Vec<C>], b: &[C], sigma: &[Vec<C>], v: &FermiFockVector) -> FermiFockVector {
    let m = ext.len();
    let mut out = ext.zero();
    for (n, l) in v.layers.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for (idx, x) in l.iter().enumerate() {
            if *x == czero() {
                continue;
            }
            let ds = digits(idx, m, n);
            let mut acc = czero();
            for t in 0..w.len() {
                let pa: C = ds.iter().map(|&i| rho[t][i]).product();
                let pb: C = ds.iter().map(|&i| sigma[t][i]).product();
                acc += (a[t] * pa + b[t] * pb) * w[t];
            }
            out.layers[n][idx] = acc * sign * x;
        }
    }
    out
}

/// y_k(θ) = p_k · Q p(θ) on the external grid, per quadrature node.
fn y_table(ext: &CarSpace, q: &QMatrix, m: f64, zs: &[C]) -> Vec<Vec<C>> {
    zs.iter()
        .map(|z| {
            let qp = q.apply_c(&[z.cosh() * m, z.sinh() * m]);
            ext.momenta.iter().map(|pk| minkowski_c(&qp, pk)).collect()
        })
        .collect()
}

/// n-particle components of [φ_{R,Q}(f), φ_{−R,−Q}(g)]Ψ by the explicit
/// integral over p = p(θ) on `quad`:
/// (−1)^n ∫dθ [f⁻g⁺ ∏ R(y_k)/R(−y_k) − f⁺g⁻ ∏ R(−y_k)/R(y_k)] Ψ_n, y_k = p_k·Qp.
/// `tf`, `tg` must be tabulated on `quad`. No sign or tag checks.
pub fn eq_int_apply(
    ext: &CarSpace,
    rf: &DeformationFunction,
    q: &QMatrix,
    quad: &RapidityGrid,
    tf: &OnShellTransform,
    tg: &OnShellTransform,
    v: &FermiFockVector,
) -> Result<FermiFockVector> {
    ext.check_vec(v)?;
    let (_, m) = ext.need_rapidity()?;
    if tf.plus.values.len() != quad.len() || tg.plus.values.len() != quad.len() {
        return input("transforms must be tabulated on the quadrature grid");
    }
    let zs: Vec<C> = quad.points.iter().map(|t| C::new(*t, 0.0)).collect();
    let y = y_table(ext, q, m, &zs);
    let rho: Vec<Vec<C>> = y.iter().map(|row| row.iter().map(|yk| rf.at(yk.re) / rf.at(-yk.re)).collect()).collect();
    let sigma: Vec<Vec<C>> = rho.iter().map(|row| row.iter().map(|r| C::new(1.0, 0.0) / r).collect()).collect();
    let a: Vec<C> = (0..quad.len()).map(|t| tf.minus.values[t] * tg.plus.values[t]).collect();
    let b: Vec<C> = (0..quad.len()).map(|t| -tf.plus.values[t] * tg.minus.values[t]).collect();
    Ok(eq_int_combine(ext, &quad.weights, &a, &rho, &b, &sigma, v))
}

/// First term of the locality integral with θ ↦ θ + iλ, 0 ≤ λ ≤ π:
/// (−1)^n ∫dθ f⁻(θ+iλ) g⁺(θ+iλ) ∏_k R(y_k) conj R(−ȳ_k) Ψ_n, the analytic
/// continuation of the real-line integrand. Transforms are evaluated at
/// complex rapidity (closed form or `fourier_quad`-point quadrature).
pub fn shifted_first_term(
    problem: &LocalityProblem,
    ext: &CarSpace,
    quad: &RapidityGrid,
    lambda: f64,
    fourier_quad: usize,
    v: &FermiFockVector,
) -> Result<FermiFockVector> {
    let q = problem.prepare(ext)?;
    ext.check_vec(v)?;
    if !(0.0..=PI).contains(&lambda) {
        return input("contour shift λ must lie in [0, π]");
    }
    let (_, m) = ext.need_rapidity()?;
    let sp = ParticleSpectrum::neutral(1, m);
    let zs: Vec<C> = quad.points.iter().map(|t| C::new(*t, lambda)).collect();
    let y = y_table(ext, &q, m, &zs);
    let rf = &problem.deformation;
    let rho = y.iter().map(|row| row.iter().map(|yk| Ok(rf.eval(*yk)? * rf.reflected_conj(*yk)?)).collect::<Result<Vec<C>>>()).collect::<Result<Vec<_>>>()?;
    let mut a = Vec::with_capacity(zs.len());
    for z in &zs {
        let fm = fields::fourier_on_shell(&problem.f, &sp, *z, Sign::Minus, fourier_quad)?[0];
        let gp = fields::fourier_on_shell(&problem.g, &sp, *z, Sign::Plus, fourier_quad)?[0];
        a.push(fm * gp);
    }
    let zero_b = vec![czero(); zs.len()];
    Ok(eq_int_combine(ext, &quad.weights, &a, &rho, &zero_b, &rho, v))
}

/// Second term of the locality integral on the real line, sign included:
/// (−1)^n ∫dθ f⁺g⁻ ∏ R(−y_k)/R(y_k) Ψ_n (without the leading minus).
pub fn second_term(problem: &LocalityProblem, ext: &CarSpace, quad: &RapidityGrid, fourier_quad: usize, v: &FermiFockVector) -> Result<FermiFockVector> {
    let q = problem.prepare(ext)?;
    ext.check_vec(v)?;
    let (_, m) = ext.need_rapidity()?;
    let sp = ParticleSpectrum::neutral(1, m);
    let tf = fields::on_shell(&problem.f, &sp, quad, fourier_quad)?;
    let tg = fields::on_shell(&problem.g, &sp, quad, fourier_quad)?;
    let zs: Vec<C> = quad.points.iter().map(|t| C::new(*t, 0.0)).collect();
    let y = y_table(ext, &q, m, &zs);
    let rf = &problem.deformation;
    let sigma: Vec<Vec<C>> = y.iter().map(|row| row.iter().map(|yk| rf.at(-yk.re) / rf.at(yk.re)).collect()).collect();
    let b: Vec<C> = (0..quad.len()).map(|t| tf.plus.values[t] * tg.minus.values[t]).collect();
    let zero_a = vec![czero(); quad.len()];
    Ok(eq_int_combine(ext, &quad.weights, &zero_a, &sigma, &b, &sigma, v))
}

/// Relative defect ‖shifted(λ=π) − second‖/‖second‖ at one resolution: the
/// contour identity in the proof of relative locality.
pub fn contour_shift_defect(problem: &LocalityProblem, ext: &CarSpace, quad: &RapidityGrid, fourier_quad: usize, v: &FermiFockVector) -> Result<f64> {
    let s = shifted_first_term(problem, ext, quad, PI, fourier_quad, v)?;
    let r = second_term(problem, ext, quad, fourier_quad, v)?;
    let nr = ext.norm(&r);
    if !(nr > 0.0) {
        return Err(Error::Inconsistent("second term vanishes; contour check is void".into()));
    }
    Ok(ext.norm(&s.add(&r, C::new(-1.0, 0.0))) / nr)
}

/// ‖Eq.(int) vector‖ on Gauss-Legendre θ-grids of the listed sizes. No tag
/// checks; see locality_residual_integral.
pub fn locality_sweep(problem: &LocalityProblem, ext: &CarSpace, v: &FermiFockVector, cfg: &SweepConfig) -> Result<ResidualSweep> {
    let q = problem.prepare(ext)?;
    if cfg.resolutions.is_empty() || !(cfg.theta_max > 0.0) {
        return input("sweep needs resolutions and θ_max > 0");
    }
    let (_, m) = ext.need_rapidity()?;
    let sp = ParticleSpectrum::neutral(1, m);
    let nv = ext.norm(v);
    let mut rows = Vec::new();
    for &n in &cfg.resolutions {
        let quad = RapidityGrid::gauss_legendre(n, -cfg.theta_max, cfg.theta_max);
        let tf = fields::on_shell(&problem.f, &sp, &quad, cfg.quad)?;
        let tg = fields::on_shell(&problem.g, &sp, &quad, cfg.quad)?;
        let out = eq_int_apply(ext, &problem.deformation, &q, &quad, &tf, &tg, v)?;
        let residual = ext.norm(&out);
        let l2 = |g: &GridFunction| g.values.iter().zip(&quad.weights).map(|(x, w)| x.norm_sqr() * w).sum::<f64>().sqrt();
        let scale = l2(&tf.plus) * l2(&tg.plus) * nv;
        rows.push(ResidualRow { resolution: n, residual, relative: residual / scale });
    }
    let decreasing = rows.windows(2).all(|w| w[1].residual <= 0.5 * w[0].residual || w[1].residual < FLOOR);
    Ok(ResidualSweep { rows, decreasing })
}

/// Requires f tagged W_R + a and g tagged W_L + b with g's support ball
/// inside W_L + a, and the deformation parameter sign matching the mode.
pub fn locality_residual_integral(problem: &LocalityProblem, ext: &CarSpace, v: &FermiFockVector, cfg: &SweepConfig) -> Result<ResidualSweep> {
    let apex = match (&problem.f.wedge_tag, &problem.g.wedge_tag) {
        (WedgeTag::Right { apex }, WedgeTag::Left { .. }) => *apex,
        _ => return input("locality integral needs f tagged W_R and g tagged W_L"),
    };
    if !fields::ball_in_wedge(problem.g.center, problem.g.support_radius(), &WedgeTag::Left { apex }) {
        return input("g is not inside the causal complement of f's wedge");
    }
    locality_sweep(problem, ext, v, cfg)
}

// ---------------------------------------------------------------------------
// Two-particle scattering

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct TwoParticleElement {
    /// Fock inner product of the collision states.
    pub route_a: C,
    /// Double integral with kernel −R(Qp·q) conj R(−Qp·q).
    pub route_b: C,
    /// |A − B| / max(|A|, |B|).
    pub relative_difference: f64,
}

/// ⟨(g⁺ ×_R f⁺)_out, (h⁺ ×_R k⁺)_in⟩ for on-shell data f ≺ g and k ≺ h
/// (h carries the faster rapidities, as g does).
///
/// Route A: out = a*_{R,Q}(g⁺)a*(f⁺)Ω; in = a*_{R,Q}(k⁺)a*(h⁺)Ω, the in
/// state of the pair ordered k ≺ h; then the Fock inner product.
/// Route B: −∫∫ R(Qp·q) conj R(−Qp·q) conj g⁺(p) conj f⁺(q) h⁺(p) k⁺(q).
#[allow(clippy::too_many_arguments)]
pub fn two_particle_element(
    space: &CarSpace,
    rf: &DeformationFunction,
    q: &QMatrix,
    f: &GridFunction,
    g: &GridFunction,
    h: &GridFunction,
    k: &GridFunction,
    gap: f64,
) -> Result<TwoParticleElement> {
    let (grid, _) = space.need_rapidity()?;
    if space.n_max < 2 {
        return input("two-particle elements need N_max ≥ 2");
    }
    fields::check_ordering_on(grid, 1, &[f, g], gap)?;
    fields::check_ordering_on(grid, 1, &[k, h], gap)?;
    let tw = space.twist(rf, q)?;
    let id = Twist::identity(space.len());
    let omega = space.vacuum();
    let out = space.create(&tw, &g.values, &space.create(&id, &f.values, &omega)?)?;
    let inn = space.create(&tw, &k.values, &space.create(&id, &h.values, &omega)?)?;
    let route_a = space.inner(&out, &inn);
    let m = space.len();
    let qp: Vec<Vec<f64>> = space.momenta.iter().map(|p| q.apply(p)).collect();
    let mut route_b = czero();
    for i in 0..m {
        let gi = g.values[i].conj() * h.values[i] * space.weights[i];
        if gi == czero() {
            continue;
        }
        for j in 0..m {
            let a = minkowski(&qp[i], &space.momenta[j]);
            let ker = rf.at(a) * rf.at(-a).conj();
            route_b -= ker * gi * f.values[j].conj() * k.values[j] * space.weights[j];
        }
    }
    let scale = route_a.norm().max(route_b.norm());
    let relative_difference = if scale > 0.0 { (route_a - route_b).norm() / scale } else { 0.0 };
    Ok(TwoParticleElement { route_a, route_b, relative_difference })
}

/// two_particle_element from test functions: f⁺, … on the space's grid.
#[allow(clippy::too_many_arguments)]
pub fn two_particle_from_tests(
    space: &CarSpace,
    rf: &DeformationFunction,
    q: &QMatrix,
    tests: [&TestFunction2D; 4],
    fourier_quad: usize,
    gap: f64,
) -> Result<TwoParticleElement> {
    let (grid, _) = space.need_rapidity()?;
    let sp = space.spectrum()?;
    let t: Vec<OnShellTransform> = tests.iter().map(|f| fields::on_shell(f, &sp, grid, fourier_quad)).collect::<Result<_>>()?;
    two_particle_element(space, rf, q, &t[0].plus, &t[1].plus, &t[2].plus, &t[3].plus, gap)
}

// ---------------------------------------------------------------------------
// Bridge to scattering functions

/// S_λ(ζ) = −R(λm² sinh ζ)², Im ζ ∈ [0, π], λ ≥ 0.
pub fn scattering_function(rf: &DeformationFunction, lambda: f64, m: f64, zeta: C) -> Result<C> {
    if !(lambda >= 0.0) || !(m > 0.0) {
        return input("S_λ needs λ ≥ 0 and m > 0");
    }
    if zeta.im < -UHP_SLACK || zeta.im > PI + UHP_SLACK {
        return Err(Error::OutOfStrip { re: zeta.re, im: zeta.im });
    }
    let r = rf.eval(zeta.sinh() * (lambda * m * m))?;
    Ok(-r * r)
}

/// S_λ as a scalar S-matrix: −∏_k ((ζ_k/c − sinh θ)/(ζ_k/c + sinh θ))² with
/// c = λm², i.e. the scalar family with ε = −1, a = 0 and zeros
/// β_k = arsinh(ζ_k/c) (principal branch, 0 < Im β_k ≤ π/2) and −β̄_k.
pub fn scattering_smatrix(rf: &DeformationFunction, lambda: f64, m: f64) -> Result<SMatrix> {
    if !(lambda >= 0.0) || !(m > 0.0) {
        return input("S_λ needs λ ≥ 0 and m > 0");
    }
    rf.validate()?;
    let c = lambda * m * m;
    let mut zeros = Vec::new();
    if c > 0.0 {
        for z in rf.zeros_c() {
            let b = (z / c).asinh();
            let im = if b.im > FRAC_PI_2 { FRAC_PI_2 } else { b.im };
            // β and −β̄: equal sinh on the axis (where arsinh sits on its cut),
            // and over the mirrored zero set each β appears twice.
            zeros.push([b.re, im]);
            zeros.push([-b.re, im]);
        }
    }
    SMatrix::from_spec(SMatrixSpec {
        kind: Kind::ScalarFamily { epsilon: -1.0, a: 0.0, zeros },
        spectrum: ParticleSpectrum::neutral(1, m),
        kappa: None,
        sup_norm: None,
    })
}

/// Smeared residuals of the Zamolodchikov-Faddeev relations for
/// z(θ) = a_{R,Q}(p(θ)), z†(θ) = a*_{R,Q}(p(θ)), Q = λσ₁, with the
/// scattering function taken from the S-matrix object `s`:
/// z(θ₁)z(θ₂) = S(θ₂−θ₁)z(θ₂)z(θ₁), z†z† likewise,
/// z(θ₁)z†(θ₂) = S(θ₁−θ₂)z†(θ₂)z(θ₁) + δ(θ₁−θ₂).
pub fn zf_bridge_check(
    space: &CarSpace,
    rf: &DeformationFunction,
    lambda: f64,
    s: &SMatrix,
    phi: &[C],
    psi: &[C],
    v: &FermiFockVector,
) -> Result<ExchangeTriple> {
    let (grid, _) = space.need_rapidity()?;
    space.need_headroom(v, 2)?;
    let q = QMatrix::two_d(lambda)?;
    let tw = space.twist(rf, &q)?;
    let th = &grid.points;
    let m = th.len();
    let mut table = vec![czero(); m * m];
    for i in 0..m {
        for j in 0..m {
            table[i * m + j] = s.eval_scalar(C::new(th[i] - th[j], 0.0))?;
        }
    }
    let st = |i: usize, j: usize| table[i * m + j];
    let cphi: Vec<C> = phi.iter().map(|x| x.conj()).collect();
    let cpsi: Vec<C> = psi.iter().map(|x| x.conj()).collect();
    let cc = space.exchange_defect((Op::Create, &tw), (Op::Create, &tw), phi, psi, |i, j| st(j, i), v)?;
    let aa = space.exchange_defect((Op::Annihilate, &tw), (Op::Annihilate, &tw), &cphi, &cpsi, |i, j| st(j, i), v)?;
    let mixed = space.exchange_defect((Op::Annihilate, &tw), (Op::Create, &tw), &cphi, psi, st, v)?;
    let delta = v.scale(space.one_inner(phi, psi));
    let mixed = mixed.add(&delta, C::new(-1.0, 0.0));
    Ok(ExchangeTriple { creators: space.norm(&cc), annihilators: space.norm(&aa), mixed: space.norm(&mixed) })
}
