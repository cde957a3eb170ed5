//! Test functions on 1+1 Minkowski space, their on-shell transforms f^±,
//! the wedge-local fields φ, φ′ and collision states.
//!
//! Minkowski product p·x = p⁰x⁰ − p¹x¹; W_R = {x¹ > |x⁰|}, W_L = −W_R.

use crate::error::{input, Error, Result};
use crate::fock::{FockSpace, FockVector, GridFunction, RapidityGrid};
use crate::smatrix::{ParticleSpectrum, SMatrix};
use crate::C;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Gaussian windows count as supported in the ellipse of WINDOW widths
/// (profile below e^{−32} outside).
pub const WINDOW: f64 = 8.0;
pub const DEFAULT_QUAD: usize = 64;
pub const MIN_QUAD: usize = 16;
/// Relative level defining the rapidity support of a grid function.
pub const SUPPORT_LEVEL: f64 = 1e-10;
pub const DEFAULT_GAP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Bump,
    GaussianWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "wedge")]
pub enum WedgeTag {
    #[serde(rename = "W_R")]
    Right { apex: [f64; 2] },
    #[serde(rename = "W_L")]
    Left { apex: [f64; 2] },
    #[default]
    #[serde(rename = "none")]
    None,
}

/// f^α(x) = w_α b(x − c) e^{−iq·x}. The carrier q shifts f̃ by q, so f^+
/// concentrates near the rapidity of q when q is on shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction2D {
    pub kind: Shape,
    pub center: [f64; 2],
    /// Bump only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Gaussian window only: (σ₀, σ₁).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<[f64; 2]>,
    /// w_α as [re, im].
    pub weights: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<[f64; 2]>,
    #[serde(default)]
    pub wedge_tag: WedgeTag,
}

impl TestFunction2D {
    pub fn bump(center: [f64; 2], radius: f64, weights: Vec<C>) -> Self {
        Self {
            kind: Shape::Bump,
            center,
            radius: Some(radius),
            widths: None,
            weights: weights.iter().map(|w| [w.re, w.im]).collect(),
            carrier: None,
            wedge_tag: WedgeTag::None,
        }
    }

    pub fn gaussian(center: [f64; 2], widths: [f64; 2], weights: Vec<C>) -> Self {
        Self {
            kind: Shape::GaussianWindow,
            center,
            radius: None,
            widths: Some(widths),
            weights: weights.iter().map(|w| [w.re, w.im]).collect(),
            carrier: None,
            wedge_tag: WedgeTag::None,
        }
    }

    pub fn with_carrier(mut self, q: [f64; 2]) -> Self {
        self.carrier = Some(q);
        self
    }

    /// Carrier on the mass shell at rapidity θ₀.
    pub fn with_rapidity(self, m: f64, theta0: f64) -> Self {
        self.with_carrier(crate::smatrix::momentum(m, theta0))
    }

    pub fn tagged(mut self, tag: WedgeTag) -> Self {
        self.wedge_tag = tag;
        self
    }

    pub fn weight(&self, a: usize) -> C {
        C::new(self.weights[a][0], self.weights[a][1])
    }

    /// Radius of a Euclidean ball around the center containing the support.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            Shape::Bump => self.radius.unwrap_or(0.0),
            Shape::GaussianWindow => self.widths.map_or(0.0, |w| WINDOW * w[0].max(w[1])),
        }
    }

    /// Half-widths of the integration box around the center.
    fn half_box(&self) -> [f64; 2] {
        match self.kind {
            Shape::Bump => [self.support_radius(); 2],
            Shape::GaussianWindow => {
                let w = self.widths.unwrap_or([0.0; 2]);
                [WINDOW * w[0], WINDOW * w[1]]
            }
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.weights.len() != d {
            return input(format!("test function has {} weights for D = {d}", self.weights.len()));
        }
        match (self.kind, self.radius, self.widths) {
            (Shape::Bump, Some(r), _) if r > 0.0 && r.is_finite() => {}
            (Shape::GaussianWindow, _, Some([a, b])) if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() => {}
            _ => return input("bump needs radius > 0, gaussian-window needs widths > 0"),
        }
        if !self.center.iter().chain(self.carrier.iter().flatten()).all(|x| x.is_finite()) {
            return input("test function center and carrier must be finite");
        }
        match &self.wedge_tag {
            WedgeTag::None => Ok(()),
            tag => {
                if ball_in_wedge(self.center, self.support_radius(), tag) {
                    Ok(())
                } else {
                    input(format!("support ball around {:?} of radius {} is not inside the tagged wedge", self.center, self.support_radius()))
                }
            }
        }
    }

    /// b(x − c) with value, gradient and □ = ∂₀² − ∂₁².
    fn profile(&self, x: [f64; 2]) -> (f64, [f64; 2], f64) {
        let y = [x[0] - self.center[0], x[1] - self.center[1]];
        match self.kind {
            Shape::Bump => {
                let r2 = self.radius.unwrap_or(1.0).powi(2);
                let u = (y[0] * y[0] + y[1] * y[1]) / r2;
                if u >= 1.0 {
                    return (0.0, [0.0; 2], 0.0);
                }
                let v = 1.0 / (1.0 - u);
                let g = (-v).exp();
                let g1 = -g * v * v;
                let g2 = g * (v.powi(4) - 2.0 * v.powi(3));
                let grad = [g1 * 2.0 * y[0] / r2, g1 * 2.0 * y[1] / r2];
                (g, grad, 4.0 * g2 * (y[0] * y[0] - y[1] * y[1]) / (r2 * r2))
            }
            Shape::GaussianWindow => {
                let [s0, s1] = self.widths.unwrap_or([1.0; 2]);
                let b = (-(y[0] * y[0]) / (2.0 * s0 * s0) - y[1] * y[1] / (2.0 * s1 * s1)).exp();
                let d00 = (y[0] * y[0] / s0.powi(4) - 1.0 / (s0 * s0)) * b;
                let d11 = (y[1] * y[1] / s1.powi(4) - 1.0 / (s1 * s1)) * b;
                (b, [-y[0] / (s0 * s0) * b, -y[1] / (s1 * s1) * b], d00 - d11)
            }
        }
    }

    fn carrier_phase(&self, x: [f64; 2]) -> C {
        match self.carrier {
            Some(q) => C::from_polar(1.0, -(q[0] * x[0] - q[1] * x[1])),
            None => C::new(1.0, 0.0),
        }
    }

    /// Scalar part b(x − c)e^{−iq·x}; f^α = w_α times this.
    pub fn scalar_value(&self, x: [f64; 2]) -> C {
        self.carrier_phase(x) * self.profile(x).0
    }

    /// (□ + m²) applied to the scalar part.
    pub fn klein_gordon_value(&self, x: [f64; 2], m: f64) -> C {
        let (b, g, bb) = self.profile(x);
        let q = self.carrier.unwrap_or([0.0; 2]);
        // □(b e) = e[□b − 2i(q⁰∂₀b + q¹∂₁b) + (q₁² − q₀²)b], e = e^{−iq·x}
        let inner = C::new(bb + (q[1] * q[1] - q[0] * q[0]) * b + m * m * b, -2.0 * (q[0] * g[0] + q[1] * g[1]));
        self.carrier_phase(x) * inner
    }

    pub fn conj(&self, spectrum: &ParticleSpectrum) -> Self {
        // (f*)^α = conj f^{ᾱ}; the carrier flips sign under conjugation
        let mut out = self.clone();
        out.weights = (0..self.weights.len())
            .map(|a| {
                let w = self.weights[spectrum.bar(a)];
                [w[0], -w[1]]
            })
            .collect();
        out.carrier = self.carrier.map(|q| [-q[0], -q[1]]);
        out
    }
}

/// Open ball B(c, r) ⊂ W + a: the distance from c to both edges exceeds r.
pub fn ball_in_wedge(c: [f64; 2], r: f64, tag: &WedgeTag) -> bool {
    let (a, s) = match tag {
        WedgeTag::Right { apex } => (apex, 1.0),
        WedgeTag::Left { apex } => (apex, -1.0),
        WedgeTag::None => return false,
    };
    let y = [c[0] - a[0], s * (c[1] - a[1])];
    y[1] - y[0].abs() > SQRT_2 * r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn f(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn p_complex(m: f64, z: C) -> [C; 2] {
    [z.cosh() * m, z.sinh() * m]
}

/// (2π)⁻¹ ∫ d²x e^{±ip_m(ζ)·x} h(x), n×n nodes. Bumps use polar nodes
/// (Gauss-Legendre in radius, trapezoid in angle) on the support disk;
/// gaussian windows use a tensor Gauss-Legendre box.
fn box_transform(f: &TestFunction2D, h: &dyn Fn([f64; 2]) -> C, m: f64, zeta: C, sign: Sign, n: usize) -> Result<C> {
    if n < MIN_QUAD {
        return Err(Error::Resolution(format!("Fourier quadrature {n} below minimum {MIN_QUAD}")));
    }
    let p = p_complex(m, zeta);
    let i = C::new(0.0, sign.f());
    let phase = |x: [f64; 2]| (i * (p[0] * x[0] - p[1] * x[1])).exp();
    let mut acc = C::new(0.0, 0.0);
    match f.kind {
        Shape::Bump => {
            let r = f.support_radius();
            let (rho, wr) = crate::num::gauss_legendre(n, 0.0, r);
            let dphi = 2.0 * PI / n as f64;
            for k in 0..n {
                let (s, c) = (k as f64 * dphi).sin_cos();
                for (q, w) in rho.iter().zip(&wr) {
                    let x = [f.center[0] + q * c, f.center[1] + q * s];
                    acc += phase(x) * h(x) * (w * q * dphi);
                }
            }
        }
        Shape::GaussianWindow => {
            let hb = f.half_box();
            let (x0, w0) = crate::num::gauss_legendre(n, f.center[0] - hb[0], f.center[0] + hb[0]);
            let (x1, w1) = crate::num::gauss_legendre(n, f.center[1] - hb[1], f.center[1] + hb[1]);
            for a in 0..n {
                for b in 0..n {
                    let x = [x0[a], x1[b]];
                    acc += phase(x) * h(x) * (w0[a] * w1[b]);
                }
            }
        }
    }
    Ok(acc / (2.0 * PI))
}

/// Closed form for the gaussian window: σ₀σ₁ e^{ik·c} e^{−(σ₀²k₀² + σ₁²k₁²)/2},
/// k = ±p − q.
fn gaussian_transform(f: &TestFunction2D, m: f64, zeta: C, sign: Sign) -> C {
    let [s0, s1] = f.widths.unwrap_or([1.0; 2]);
    let p = p_complex(m, zeta);
    let q = f.carrier.unwrap_or([0.0; 2]);
    let k = [p[0] * sign.f() - q[0], p[1] * sign.f() - q[1]];
    let kc = k[0] * f.center[0] - k[1] * f.center[1];
    let damp = -(k[0] * k[0] * s0 * s0 + k[1] * k[1] * s1 * s1) / 2.0;
    (C::new(0.0, 1.0) * kc + damp).exp() * (s0 * s1)
}

/// f^{±,α}(ζ) for each species α. Gaussian windows use the closed form;
/// bumps use n×n quadrature.
pub fn fourier_on_shell(f: &TestFunction2D, spectrum: &ParticleSpectrum, zeta: C, sign: Sign, n: usize) -> Result<Vec<C>> {
    f.validate(spectrum.species)?;
    (0..spectrum.species)
        .map(|a| {
            let m = spectrum.masses[a];
            let t = match f.kind {
                Shape::GaussianWindow => gaussian_transform(f, m, zeta, sign),
                Shape::Bump => box_transform(f, &|x| f.scalar_value(x), m, zeta, sign, n)?,
            };
            Ok(f.weight(a) * t)
        })
        .collect()
}

/// Transform of the scalar part by quadrature whatever the kind; cross-checks
/// the gaussian closed form.
pub fn fourier_by_quadrature(f: &TestFunction2D, m: f64, zeta: C, sign: Sign, n: usize) -> Result<C> {
    box_transform(f, &|x| f.scalar_value(x), m, zeta, sign, n)
}

/// On-shell transform of (□ + m²) applied to the scalar part; vanishes in
/// the continuum.
pub fn klein_gordon_transform(f: &TestFunction2D, m: f64, zeta: C, sign: Sign, n: usize) -> Result<C> {
    box_transform(f, &|x| f.klein_gordon_value(x, m), m, zeta, sign, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnShellTransform {
    pub plus: GridFunction,
    pub minus: GridFunction,
    /// Quadrature order used, None for closed forms.
    pub resolution: Option<usize>,
}

pub fn on_shell(f: &TestFunction2D, spectrum: &ParticleSpectrum, grid: &RapidityGrid, n: usize) -> Result<OnShellTransform> {
    f.validate(spectrum.species)?;
    let d = spectrum.species;
    let mut plus = Vec::with_capacity(grid.len() * d);
    let mut minus = Vec::with_capacity(grid.len() * d);
    for &t in &grid.points {
        plus.extend(fourier_on_shell(f, spectrum, C::new(t, 0.0), Sign::Plus, n)?);
        minus.extend(fourier_on_shell(f, spectrum, C::new(t, 0.0), Sign::Minus, n)?);
    }
    let resolution = (f.kind == Shape::Bump).then_some(n);
    Ok(OnShellTransform { plus: GridFunction { values: plus }, minus: GridFunction { values: minus }, resolution })
}

/// (Jφ)^α(θ) = conj φ^{ᾱ}(θ).
pub fn j_one(fs: &FockSpace, f: &GridFunction) -> GridFunction {
    let d = fs.d();
    let values = (0..f.values.len()).map(|s| f.values[(s / d) * d + fs.spectrum.bar(s % d)].conj()).collect();
    GridFunction { values }
}

pub fn add(a: &FockVector, b: &FockVector, cb: C) -> FockVector {
    let layers = a.layers.iter().zip(&b.layers).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + cb * v).collect()).collect();
    FockVector { layers, truncated: a.truncated || b.truncated }
}

/// φ(f) = z†(f⁺) + z(Jf⁻).
pub fn phi(fs: &FockSpace, t: &OnShellTransform, v: &FockVector) -> Result<FockVector> {
    let a = fs.z_dagger(&t.plus, v)?;
    let b = fs.z(&j_one(fs, &t.minus), v)?;
    Ok(add(&a, &b, C::new(1.0, 0.0)))
}

/// φ′(f) = J z†(Jf⁺) J + J z(f⁻) J.
pub fn phi_prime(fs: &FockSpace, t: &OnShellTransform, v: &FockVector) -> Result<FockVector> {
    let jv = fs.pct_j(v);
    let a = fs.z_dagger(&j_one(fs, &t.plus), &jv)?;
    let b = fs.z(&t.minus, &jv)?;
    Ok(fs.pct_j(&add(&a, &b, C::new(1.0, 0.0))))
}

/// [φ′(f), φ(g)]Ψ.
pub fn commutator(fs: &FockSpace, f: &OnShellTransform, g: &OnShellTransform, v: &FockVector) -> Result<FockVector> {
    let a = phi_prime(fs, f, &phi(fs, g, v)?)?;
    let b = phi(fs, g, &phi_prime(fs, f, v)?)?;
    Ok(add(&a, &b, C::new(-1.0, 0.0)))
}

/// Ψ = Ω + Σ h_i⁺ (+ √2 P₂(h₁⁺ ⊗ h₂⁺) with two probes).
pub fn probe_state(fs: &FockSpace, probes: &[TestFunction2D], quad: usize) -> Result<FockVector> {
    if probes.len() > 2 {
        return input("at most two probe functions");
    }
    let mut v = fs.vacuum();
    let ts: Vec<OnShellTransform> = probes.iter().map(|h| on_shell(h, &fs.spectrum, &fs.grid, quad)).collect::<Result<_>>()?;
    for t in &ts {
        for (x, y) in v.layers[1].iter_mut().zip(&t.plus.values) {
            *x += y;
        }
    }
    if ts.len() == 2 {
        let pair = product_state(fs, &[&ts[0].plus, &ts[1].plus])?;
        for (x, y) in v.layers[2].iter_mut().zip(&pair) {
            *x += y;
        }
    }
    Ok(v)
}

/// √(n!) P_n(f₁ ⊗ … ⊗ f_n).
fn product_state(fs: &FockSpace, fns: &[&GridFunction]) -> Result<Vec<C>> {
    let n = fns.len();
    if n > fs.n_max {
        return Err(Error::TooLarge { what: "collision particle number".into(), value: n, limit: fs.n_max });
    }
    let mut t = vec![C::new(1.0, 0.0)];
    for f in fns {
        t = t.iter().flat_map(|a| f.values.iter().map(move |b| a * b)).collect();
    }
    let c = (crate::perm::factorial(n) as f64).sqrt();
    Ok(fs.project_pn(n, &t)?.into_iter().map(|x| x * c).collect())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualRow {
    /// θ-grid points.
    pub resolution: usize,
    /// ‖[φ′(f), φ(g)]Ψ‖.
    pub residual: f64,
    /// residual/(‖f⁺‖‖g⁺‖‖Ψ‖).
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSweep {
    pub rows: Vec<ResidualRow>,
    /// Each refinement at least halves the residual or it is below FLOOR.
    pub decreasing: bool,
}

/// Residuals under this level count as converged (roundoff floor).
pub const FLOOR: f64 = 1e-12;

pub struct SweepConfig {
    pub resolutions: Vec<usize>,
    pub theta_max: f64,
    pub quad: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { resolutions: vec![32, 64, 128], theta_max: 5.0, quad: DEFAULT_QUAD }
    }
}

/// ‖[φ′(f), φ(g)]Ψ‖ on Gauss-Legendre θ-grids of the listed sizes. No
/// support checks; see wedge_commutator_residual.
pub fn commutator_sweep(s: &SMatrix, f: &TestFunction2D, g: &TestFunction2D, probes: &[TestFunction2D], cfg: &SweepConfig) -> Result<ResidualSweep> {
    if cfg.resolutions.is_empty() || !(cfg.theta_max > 0.0) {
        return input("sweep needs resolutions and θ_max > 0");
    }
    let mut rows = Vec::new();
    for &n in &cfg.resolutions {
        let grid = RapidityGrid::gauss_legendre(n, -cfg.theta_max, cfg.theta_max);
        let fs = FockSpace::new(s, grid, probes.len() + 2)?;
        let tf = on_shell(f, &fs.spectrum, &fs.grid, cfg.quad)?;
        let tg = on_shell(g, &fs.spectrum, &fs.grid, cfg.quad)?;
        let psi = probe_state(&fs, probes, cfg.quad)?;
        let c = commutator(&fs, &tf, &tg, &psi)?;
        if c.truncated {
            return Err(Error::Inconsistent("commutator overflowed the truncation".into()));
        }
        let residual = fs.norm(&c);
        let scale = fs.one_inner(&tf.plus, &tf.plus).re.sqrt() * fs.one_inner(&tg.plus, &tg.plus).re.sqrt() * fs.norm(&psi);
        rows.push(ResidualRow { resolution: n, residual, relative: residual / scale });
    }
    let decreasing = rows.windows(2).all(|w| w[1].residual <= 0.5 * w[0].residual || w[1].residual < FLOOR);
    Ok(ResidualSweep { rows, decreasing })
}

/// Requires f tagged W_R + a and g tagged W_L + b with g's support ball
/// inside W_L + a (so the supports are spacelike in the wedge sense).
pub fn wedge_commutator_residual(s: &SMatrix, f: &TestFunction2D, g: &TestFunction2D, probes: &[TestFunction2D], cfg: &SweepConfig) -> Result<ResidualSweep> {
    f.validate(s.species())?;
    g.validate(s.species())?;
    let apex = match (&f.wedge_tag, &g.wedge_tag) {
        (WedgeTag::Right { apex }, WedgeTag::Left { .. }) => *apex,
        _ => return input("wedge commutator needs f tagged W_R and g tagged W_L"),
    };
    if !ball_in_wedge(g.center, g.support_radius(), &WedgeTag::Left { apex }) {
        return input("g is not inside the causal complement of f's wedge");
    }
    commutator_sweep(s, f, g, probes, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug)]
pub struct CollisionState {
    pub state: FockVector,
    /// max_i ‖f_i⁻‖/‖f_i⁺‖: weight of f̃ on the negative mass shell.
    pub forward_cone_leakage: f64,
}

/// [min, max] of grid rapidities where |f| exceeds SUPPORT_LEVEL·max|f|.
pub fn rapidity_support(fs: &FockSpace, f: &GridFunction) -> Option<(f64, f64)> {
    rapidity_support_on(&fs.grid, fs.d(), f)
}

/// As rapidity_support, for a bare grid with d species per point.
pub fn rapidity_support_on(grid: &RapidityGrid, d: usize, f: &GridFunction) -> Option<(f64, f64)> {
    let mags: Vec<f64> = (0..grid.len()).map(|i| (0..d).map(|a| f.values[i * d + a].norm()).fold(0.0, f64::max)).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let idx: Vec<usize> = (0..mags.len()).filter(|&i| mags[i] > SUPPORT_LEVEL * top).collect();
    Some((grid.points[idx[0]], grid.points[*idx.last().unwrap()]))
}

/// f₁ ≺ … ≺ f_n: max supp f_i⁺ + gap < min supp f_{i+1}⁺.
pub fn check_ordering(fs: &FockSpace, ts: &[OnShellTransform], gap: f64) -> Result<()> {
    let fns: Vec<&GridFunction> = ts.iter().map(|t| &t.plus).collect();
    check_ordering_on(&fs.grid, fs.d(), &fns, gap)
}

/// The ≺ rule on bare grid functions; shared with the deformed model.
pub fn check_ordering_on(grid: &RapidityGrid, d: usize, fns: &[&GridFunction], gap: f64) -> Result<()> {
    let sup: Vec<(f64, f64)> =
        fns.iter().map(|f| rapidity_support_on(grid, d, f).ok_or_else(|| Error::Input("test function with vanishing f⁺".into()))).collect::<Result<_>>()?;
    for (i, w) in sup.windows(2).enumerate() {
        if !(w[0].1 + gap < w[1].0) {
            return input(format!(
                "rapidity supports of f_{} [{:.3}, {:.3}] and f_{} [{:.3}, {:.3}] are not ordered with gap {gap}",
                i + 1,
                w[0].0,
                w[0].1,
                i + 2,
                w[1].0,
                w[1].1
            ));
        }
    }
    Ok(())
}

/// out: √(n!) P_n(f₁⁺ ⊗ … ⊗ f_n⁺); in: √(n!) P_n(f_n⁺ ⊗ … ⊗ f₁⁺).
pub fn collision_state(fs: &FockSpace, ts: &[OnShellTransform], dir: Direction, gap: f64) -> Result<CollisionState> {
    if ts.is_empty() {
        return input("collision state needs at least one test function");
    }
    check_ordering(fs, ts, gap)?;
    let mut fns: Vec<&GridFunction> = ts.iter().map(|t| &t.plus).collect();
    if dir == Direction::In {
        fns.reverse();
    }
    let layer = product_state(fs, &fns)?;
    let leak = ts
        .iter()
        .map(|t| {
            let p = fs.one_inner(&t.plus, &t.plus).re.sqrt();
            fs.one_inner(&t.minus, &t.minus).re.sqrt() / p
        })
        .fold(0.0, f64::max);
    Ok(CollisionState { state: fs.from_layer(ts.len(), layer)?, forward_cone_leakage: leak })
}

/// ⟨(f₁⁺ × … × f_n⁺)_out, (g₁⁺ × … × g_n⁺)_in⟩.
pub fn s_matrix_element(fs: &FockSpace, fs_out: &[OnShellTransform], gs_in: &[OnShellTransform], gap: f64) -> Result<C> {
    if fs_out.len() != gs_in.len() {
        return input("out and in lists must have equal length");
    }
    let a = collision_state(fs, fs_out, Direction::Out, gap)?;
    let b = collision_state(fs, gs_in, Direction::In, gap)?;
    Ok(fs.inner(&a.state, &b.state))
}
