use crate::io::{bad_input, load, positive, Classify, Failure, Globals, Out, Report, Source};
use iqft_core::deform::{
    contour_shift_defect, locality_residual_integral, locality_sweep, CarSpace, DeformationFunction, LocalityMode, LocalityProblem, QMatrix,
};
use iqft_core::fields::{SweepConfig, TestFunction2D, WedgeTag};
use iqft_core::fock::RapidityGrid;
use iqft_core::C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative defect allowed between the λ = π shifted first term and the
/// second term.
const CONTOUR_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub deformation: Source<DeformationFunction>,
    pub q: QMatrix,
    pub mode: LocalityMode,
    pub f: Source<TestFunction2D>,
    pub g: Source<TestFunction2D>,
    /// Rapidity points of the external n-particle arguments.
    pub ext_points: usize,
    pub ext_theta_max: f64,
    pub ext_n_max: usize,
    pub resolutions: Vec<usize>,
    pub theta_max: f64,
    /// Fourier quadrature order for the test functions.
    pub quad: usize,
    /// Also compare the λ = π contour with the second term.
    pub contour: bool,
    /// Final residual relative to ‖f⁺‖‖g⁺‖‖Ψ‖.
    pub tol: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let one = vec![C::new(1.0, 0.0)];
        let origin = [0.0, 0.0];
        Self {
            deformation: Source::Inline(DeformationFunction::new(1, &[C::new(0.0, 1.0)]).expect("valid zero set")),
            q: QMatrix::two_d(1.0).expect("finite"),
            mode: LocalityMode::Direct,
            f: Source::Inline(TestFunction2D::gaussian([0.1, 1.25], [0.1, 0.1], one.clone()).tagged(WedgeTag::Right { apex: origin })),
            g: Source::Inline(TestFunction2D::gaussian([-0.05, -1.2], [0.1, 0.1], one).tagged(WedgeTag::Left { apex: origin })),
            ext_points: 4,
            ext_theta_max: 1.5,
            ext_n_max: 2,
            resolutions: vec![32, 64, 128],
            theta_max: 5.0,
            quad: 64,
            contour: true,
            tol: 1e-3,
            seed: 1,
        }
    }
}

#[derive(Serialize)]
struct Results {
    negative_control: bool,
    decreasing: bool,
    final_relative: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    contour_defect: Option<f64>,
}

pub fn run(g: &Globals) -> Result<bool, Failure> {
    let (mut cfg, base) = load::<Config>(g)?;
    cfg.tol = g.tol.unwrap_or(cfg.tol);
    cfg.ext_points = g.grid_points.unwrap_or(cfg.ext_points);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    positive("tol", cfg.tol)?;
    positive("ext_theta_max", cfg.ext_theta_max)?;
    super::at_least("ext_points", cfg.ext_points, 1)?;
    if cfg.resolutions.is_empty() {
        return bad_input("resolutions must not be empty");
    }
    let problem =
        LocalityProblem { deformation: cfg.deformation.resolve(&base)?, q: cfg.q.clone(), mode: cfg.mode, f: cfg.f.resolve(&base)?, g: cfg.g.resolve(&base)? };
    let negative_control = match (&problem.f.wedge_tag, &problem.g.wedge_tag) {
        (WedgeTag::Right { .. }, WedgeTag::Left { .. }) => false,
        (WedgeTag::Left { .. }, WedgeTag::Right { .. }) => true,
        _ => return bad_input("f must be tagged W_R and g W_L (or the reverse, as a negative control)"),
    };
    let out = Out::new(&g.out)?;
    let ext = CarSpace::from_rapidity(RapidityGrid::gauss_legendre(cfg.ext_points, -cfg.ext_theta_max, cfg.ext_theta_max), 1.0, cfg.ext_n_max).input()?;
    let v = ext.random_antisymmetric(cfg.ext_n_max, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).input()?;
    let sweep_cfg = SweepConfig { resolutions: cfg.resolutions.clone(), theta_max: cfg.theta_max, quad: cfg.quad };

    let mut notices = Vec::new();
    let sweep = if negative_control {
        notices.push("tags swapped (f in W_L, g in W_R): negative control, the residual should stall".to_string());
        locality_sweep(&problem, &ext, &v, &sweep_cfg).input()?
    } else {
        locality_residual_integral(&problem, &ext, &v, &sweep_cfg).input()?
    };
    let contour_defect = if cfg.contour && !negative_control {
        let n = *cfg.resolutions.iter().max().expect("nonempty");
        let quad = RapidityGrid::gauss_legendre(n, -cfg.theta_max, cfg.theta_max);
        Some(contour_shift_defect(&problem, &ext, &quad, cfg.quad, &v).check()?)
    } else {
        None
    };
    let final_relative = sweep.rows.last().expect("nonempty").relative;
    let passed = sweep.decreasing && final_relative < cfg.tol && contour_defect.is_none_or(|d| d < CONTOUR_TOL);
    if !sweep.decreasing {
        notices.push("residual not decreasing under refinement".to_string());
    }
    out.csv("locality.csv", &sweep.rows)?;
    let result = Results { negative_control, decreasing: sweep.decreasing, final_relative, contour_defect };
    out.json(
        "locality.json",
        &Report { command: "locality", defaults_version: crate::io::DEFAULTS_VERSION, passed, notices: &notices, config: &cfg, result: &result },
    )?;
    Ok(passed)
}
