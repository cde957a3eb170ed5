use crate::io::{bad_input, load, Classify, Globals, Out, Report};
use iqft_core::combinat::{verify_all_lemmas_with, LemmaHooks, MAX_ENUM_N};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n_max: usize,
    /// Mutation controls; all zero for a real run.
    pub hooks: LemmaHooks,
}

impl Default for Config {
    fn default() -> Self {
        Self { n_max: 7, hooks: LemmaHooks::default() }
    }
}

pub fn run(g: &Globals) -> Result<bool, crate::io::Failure> {
    let (cfg, _) = load::<Config>(g)?;
    let mut notices = Vec::new();
    if g.tol.is_some() || g.grid_points.is_some() || g.seed.is_some() {
        notices.push("--tol, --grid-points and --seed do not apply: checks are exact and exhaustive".to_string());
    }
    if cfg.n_max > MAX_ENUM_N {
        return bad_input(format!("n_max = {} exceeds the enumeration guard {MAX_ENUM_N}", cfg.n_max));
    }
    if cfg.hooks != LemmaHooks::default() {
        notices.push("mutation hooks active: failures are expected".to_string());
    }
    let out = Out::new(&g.out)?;
    let reports = verify_all_lemmas_with(cfg.n_max, &cfg.hooks).check()?;
    let passed = reports.iter().all(|r| r.passed());
    out.json(
        "combinat-verify.json",
        &Report { command: "combinat-verify", defaults_version: crate::io::DEFAULTS_VERSION, passed, notices: &notices, config: &cfg, result: &reports },
    )?;
    Ok(passed)
}
