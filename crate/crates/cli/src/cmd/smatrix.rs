use crate::io::{load, positive, Classify, Globals, Out, Report, Source};
use iqft_core::num::linspace;
use iqft_core::smatrix::{check_axioms, default_gauge_sample, SMatrix, SMatrixSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub smatrix: Source<SMatrixSpec>,
    pub grid_min: f64,
    pub grid_max: f64,
    /// Real θ points for the pointwise axioms.
    pub grid_points: usize,
    /// Per-axis count of the (θ₁, θ₂) Yang-Baxter pairs.
    pub pair_points: usize,
    pub tol: f64,
    /// Seed of the O(N) gauge sample.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            smatrix: Source::Inline(SMatrix::sinh_gordon(4.0 * PI).to_spec()),
            grid_min: -4.0,
            grid_max: 4.0,
            grid_points: 81,
            pair_points: 20,
            tol: 1e-10,
            seed: 1,
        }
    }
}

pub fn run(g: &Globals) -> Result<bool, crate::io::Failure> {
    let (mut cfg, base) = load::<Config>(g)?;
    cfg.tol = g.tol.unwrap_or(cfg.tol);
    cfg.grid_points = g.grid_points.unwrap_or(cfg.grid_points);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    positive("tol", cfg.tol)?;
    super::at_least("grid_points", cfg.grid_points, 2)?;
    super::at_least("pair_points", cfg.pair_points, 1)?;
    if !(cfg.grid_min < cfg.grid_max) {
        return crate::io::bad_input("grid_min must be below grid_max");
    }
    let out = Out::new(&g.out)?;
    let s = SMatrix::from_spec(cfg.smatrix.resolve(&base)?).input()?;
    let grid = linspace(cfg.grid_min, cfg.grid_max, cfg.grid_points);
    let axis = linspace(cfg.grid_min, cfg.grid_max, cfg.pair_points);
    let pairs: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let gauge = default_gauge_sample(&s, cfg.seed);
    let rep = check_axioms(&s, &grid, &pairs, gauge.as_ref()).check()?;
    let passed = rep.passes(cfg.tol);
    let notices = rep.notices.clone();
    out.json(
        "smatrix-check.json",
        &Report { command: "smatrix-check", defaults_version: crate::io::DEFAULTS_VERSION, passed, notices: &notices, config: &cfg, result: &rep },
    )?;
    Ok(passed)
}
