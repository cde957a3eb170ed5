use crate::io::{bad_input, load, positive, Classify, Failure, Globals, Out, Report, Source};
use iqft_core::deform::{scattering_function, scattering_smatrix, two_particle_element, zf_bridge_check, CarSpace, DeformationFunction, QMatrix};
use iqft_core::fock::{GridFunction, RapidityGrid};
use iqft_core::num::linspace;
use iqft_core::smatrix::{check_axioms, default_grid, default_pairs};
use iqft_core::C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Smooth compactly supported rapidity window
/// exp(−1/(1 − ((θ−c)/r)²)) e^{i·phase·θ}.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub radius: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Window {
    fn on(&self, grid: &RapidityGrid) -> GridFunction {
        GridFunction::from_fn(grid, 1, |t, _| {
            let u = (t - self.center) / self.radius;
            if u.abs() < 1.0 {
                C::from_polar((-1.0 / (1.0 - u * u)).exp(), self.phase * t)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }
}

/// Out state from f ≺ g, in state from k ≺ h.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoParticle {
    pub grid_points: usize,
    pub theta_max: f64,
    pub f: Window,
    pub g: Window,
    pub h: Window,
    pub k: Window,
    pub gap: f64,
}

impl Default for TwoParticle {
    fn default() -> Self {
        Self {
            grid_points: 64,
            theta_max: 4.0,
            f: Window { center: -1.2, radius: 0.6, phase: 0.3 },
            g: Window { center: 0.8, radius: 0.7, phase: -0.5 },
            h: Window { center: 1.1, radius: 0.6, phase: 0.2 },
            k: Window { center: -1.0, radius: 0.5, phase: 0.9 },
            gap: iqft_core::fields::DEFAULT_GAP,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub deformation: Source<DeformationFunction>,
    pub mass: f64,
    pub lambdas: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub two_particle: TwoParticle,
    /// Route A vs route B relative difference.
    pub tol: f64,
    /// S_λ(0) = −1, S_λ axioms and ZF residuals.
    pub algebra_tol: f64,
    /// Grid size of the CAR space used for the ZF relations.
    pub zf_grid_points: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            deformation: Source::Inline(DeformationFunction::new(1, &[C::new(0.0, 1.0)]).expect("valid zero set")),
            mass: 1.0,
            lambdas: vec![1.0],
            theta_min: -3.0,
            theta_max: 3.0,
            theta_points: 61,
            two_particle: TwoParticle::default(),
            tol: 1e-8,
            algebra_tol: 1e-12,
            zf_grid_points: 5,
            seed: 1,
        }
    }
}

#[derive(Serialize)]
struct SRow {
    lambda: f64,
    theta: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ElementRow {
    lambda: f64,
    route_a_re: f64,
    route_a_im: f64,
    route_b_re: f64,
    route_b_im: f64,
    relative_difference: f64,
}

#[derive(Serialize)]
struct LambdaResult {
    lambda: f64,
    s_at_zero_defect: f64,
    axiom_residual: f64,
    zf_residual: f64,
    relative_difference: f64,
}

pub fn run(g: &Globals) -> Result<bool, Failure> {
    let (mut cfg, base) = load::<Config>(g)?;
    cfg.tol = g.tol.unwrap_or(cfg.tol);
    cfg.two_particle.grid_points = g.grid_points.unwrap_or(cfg.two_particle.grid_points);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    positive("tol", cfg.tol)?;
    positive("algebra_tol", cfg.algebra_tol)?;
    positive("mass", cfg.mass)?;
    positive("two_particle.theta_max", cfg.two_particle.theta_max)?;
    super::at_least("theta_points", cfg.theta_points, 2)?;
    super::at_least("two_particle.grid_points", cfg.two_particle.grid_points, 2)?;
    super::at_least("zf_grid_points", cfg.zf_grid_points, 1)?;
    if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return bad_input("lambdas must be a nonempty list of finite values ≥ 0");
    }
    for w in [&cfg.two_particle.f, &cfg.two_particle.g, &cfg.two_particle.h, &cfg.two_particle.k] {
        positive("window radius", w.radius)?;
    }
    let rf = cfg.deformation.resolve(&base)?;
    let out = Out::new(&g.out)?;
    let tp = &cfg.two_particle;
    let space = CarSpace::from_rapidity(RapidityGrid::gauss_legendre(tp.grid_points, -tp.theta_max, tp.theta_max), cfg.mass, 2).input()?;
    let grid = space.rapidity_grid().expect("rapidity space").clone();
    let (f, gw, h, k) = (tp.f.on(&grid), tp.g.on(&grid), tp.h.on(&grid), tp.k.on(&grid));
    let zf_space = CarSpace::from_rapidity(RapidityGrid::gauss_legendre(cfg.zf_grid_points, -2.0, 2.0), cfg.mass, 3).input()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut random_fn = |n: usize| -> Vec<C> { (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
    let (phi, psi) = (random_fn(zf_space.len()), random_fn(zf_space.len()));
    let v = zf_space.random_antisymmetric(1, &mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1))).check()?;

    let thetas = linspace(cfg.theta_min, cfg.theta_max, cfg.theta_points);
    let mut s_rows = Vec::new();
    let mut el_rows = Vec::new();
    let mut results = Vec::new();
    for &lambda in &cfg.lambdas {
        for &t in &thetas {
            let s = scattering_function(&rf, lambda, cfg.mass, C::new(t, 0.0)).check()?;
            s_rows.push(SRow { lambda, theta: t, re: s.re, im: s.im });
        }
        let s0 = scattering_function(&rf, lambda, cfg.mass, C::new(0.0, 0.0)).check()?;
        let sm = scattering_smatrix(&rf, lambda, cfg.mass).check()?;
        let axioms = check_axioms(&sm, &default_grid(), &default_pairs(), None).check()?;
        let zf = zf_bridge_check(&zf_space, &rf, lambda, &sm, &phi, &psi, &v).check()?;
        let q = QMatrix::two_d(lambda).check()?;
        let e = two_particle_element(&space, &rf, &q, &f, &gw, &h, &k, tp.gap).check()?;
        el_rows.push(ElementRow {
            lambda,
            route_a_re: e.route_a.re,
            route_a_im: e.route_a.im,
            route_b_re: e.route_b.re,
            route_b_im: e.route_b.im,
            relative_difference: e.relative_difference,
        });
        results.push(LambdaResult {
            lambda,
            s_at_zero_defect: (s0 + 1.0).norm(),
            axiom_residual: axioms.max_residual(),
            zf_residual: zf.max(),
            relative_difference: e.relative_difference,
        });
    }
    let passed = results.iter().all(|r| {
        r.s_at_zero_defect < cfg.algebra_tol && r.axiom_residual < cfg.algebra_tol && r.zf_residual < cfg.algebra_tol && r.relative_difference < cfg.tol
    });
    out.csv("deform-scatter-s.csv", &s_rows)?;
    out.csv("deform-scatter-two-particle.csv", &el_rows)?;
    out.json(
        "deform-scatter.json",
        &Report { command: "deform-scatter", defaults_version: crate::io::DEFAULTS_VERSION, passed, notices: &[], config: &cfg, result: &results },
    )?;
    Ok(passed)
}
