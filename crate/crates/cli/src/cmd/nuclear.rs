use crate::io::{bad_input, load, positive, Classify, Failure, Globals, Out, Report};
use iqft_core::fock::RapidityGrid;
use iqft_core::nuclear::{kernel_trace_norm, q_ratio, s_min, sweep, xi_n_bound, KernelFamily, KernelSpec, NuclearityParams, Profile};
use iqft_core::num::linspace;
use serde::{Deserialize, Serialize};

/// Ratio of consecutive Ξ_n bounds required beyond n = 5 at 1.1·s_min.
const RATIO_LIMIT: f64 = 0.95;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(rename = "D", default = "one")]
    pub species: usize,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_theta")]
    pub theta_max: f64,
}

fn one() -> usize {
    1
}

fn default_points() -> usize {
    200
}

fn default_theta() -> f64 {
    6.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub params: NuclearityParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    pub s_lo: f64,
    pub s_hi: f64,
    pub s_points: usize,
    /// Terms of the Ξ_n partial sums.
    pub terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    /// |q(s_min) − 1| and the kernel eigenvalue floor.
    pub tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: NuclearityParams::new(1, 1.0, 1.0, 1.0).and_then(|p| p.with_gammas(1.0, 1.0)).expect("valid defaults"),
            bracket: None,
            s_lo: 0.1,
            s_hi: 50.0,
            s_points: 200,
            terms: 40,
            kernel: Some(KernelConfig {
                family: KernelFamily::RGb { g: Profile::ExpCosh { c: 1.0 }, b: 1.0 },
                species: 1,
                grid_points: default_points(),
                theta_max: default_theta(),
            }),
            tol: 1e-10,
        }
    }
}

#[derive(Serialize)]
struct Results {
    q_strictly_decreasing: bool,
    s_min: iqft_core::nuclear::SMinReport,
    q_at_s_min_defect: f64,
    /// max_{n > 5} Ξ_{n+1}/Ξ_n at 1.1·s_min.
    xi_ratio_beyond_5: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<iqft_core::nuclear::KernelReport>,
}

pub fn run(g: &Globals) -> Result<bool, Failure> {
    let (mut cfg, _) = load::<Config>(g)?;
    cfg.tol = g.tol.unwrap_or(cfg.tol);
    if let (Some(n), Some(k)) = (g.grid_points, cfg.kernel.as_mut()) {
        k.grid_points = n;
    }
    let mut notices = Vec::new();
    if g.seed.is_some() {
        notices.push("--seed does not apply: the run is deterministic".to_string());
    }
    positive("tol", cfg.tol)?;
    positive("s_lo", cfg.s_lo)?;
    super::at_least("s_points", cfg.s_points, 2)?;
    super::at_least("terms", cfg.terms, 7)?;
    if !(cfg.s_lo < cfg.s_hi) {
        return bad_input("s_lo must be below s_hi");
    }
    cfg.params.validate().input()?;
    let kernel_spec = match &cfg.kernel {
        Some(k) => {
            super::at_least("kernel.grid_points", k.grid_points, 2)?;
            positive("kernel.theta_max", k.theta_max)?;
            Some(KernelSpec { family: k.family.clone(), species: k.species, grid: RapidityGrid::gauss_legendre(k.grid_points, -k.theta_max, k.theta_max) })
        }
        None => None,
    };
    let out = Out::new(&g.out)?;
    let p = &cfg.params;

    let rows = sweep(p, &linspace(cfg.s_lo, cfg.s_hi, cfg.s_points), cfg.terms).check()?;
    let q_strictly_decreasing = rows.windows(2).all(|w| w[1].q < w[0].q);
    let sm = s_min(p, cfg.bracket).check()?;
    let q_at_s_min_defect = (q_ratio(p, sm.s_min).check()? - 1.0).abs();
    let s1 = 1.1 * sm.s_min;
    let mut xi_ratio_beyond_5: f64 = 0.0;
    for n in 6..cfg.terms {
        let a = xi_n_bound(p, s1, n).check()?.raw;
        let b = xi_n_bound(p, s1, n + 1).check()?.raw;
        xi_ratio_beyond_5 = xi_ratio_beyond_5.max(b / a);
    }
    let kernel = kernel_spec.as_ref().map(kernel_trace_norm).transpose().check()?;
    let kernel_ok =
        kernel.as_ref().is_none_or(|k| k.min_eigenvalue.is_none_or(|e| e >= -cfg.tol) && k.numeric_trace_norm <= k.analytic_bound * (1.0 + cfg.tol));
    let passed = q_strictly_decreasing && q_at_s_min_defect < cfg.tol && xi_ratio_beyond_5 < RATIO_LIMIT && kernel_ok;

    out.csv("nuclearity-sweep.csv", &rows)?;
    let result = Results { q_strictly_decreasing, s_min: sm, q_at_s_min_defect, xi_ratio_beyond_5, kernel };
    out.json(
        "nuclearity.json",
        &Report { command: "nuclearity", defaults_version: crate::io::DEFAULTS_VERSION, passed, notices: &notices, config: &cfg, result: &result },
    )?;
    Ok(passed)
}
