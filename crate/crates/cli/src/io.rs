//! Config loading, failure classes and atomic report output.

use anyhow::{anyhow, Context};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Bumped whenever a built-in default changes.
pub const DEFAULTS_VERSION: u32 = 1;

#[derive(Args, Clone, Debug, Default)]
pub struct Globals {
    /// JSON config file; its keys override the built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for reports (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Pass threshold of the command's main check.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    /// Size of the command's main grid.
    #[arg(long, global = true, value_name = "INT")]
    pub grid_points: Option<usize>,
    /// Seed for random vectors and operators.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
}

/// Input: the run could not be set up (exit 2). Check: a verification
/// failed or a computation rejected its data (exit 1).
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Check(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Check(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Input(e) => format!("input error: {e:#}"),
            Failure::Check(e) => format!("check failed: {e:#}"),
        }
    }
}

pub trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn check(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn check(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Check(e.into()))
    }
}

pub fn bad_input<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Input(anyhow!(msg.into())))
}

/// Defaults, overlaid by the config file. Returns the directory against
/// which relative paths inside the file resolve.
pub fn load<T: DeserializeOwned + Default>(g: &Globals) -> Result<(T, PathBuf), Failure> {
    let Some(path) = &g.config else {
        return Ok((T::default(), PathBuf::from(".")));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).input()?;
    let cfg = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).input()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        bad_input(format!("{name} must be positive, got {x}"))
    }
}

/// Inline value or path to a JSON file holding it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    File(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn resolve(&self, base: &Path) -> Result<T, Failure> {
        match self {
            Source::Inline(t) => Ok(t.clone()),
            Source::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).input()?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).input()
            }
        }
    }
}

#[derive(Serialize)]
pub struct Report<'a, Cfg: Serialize, R: Serialize> {
    pub command: &'a str,
    pub defaults_version: u32,
    pub passed: bool,
    pub notices: &'a [String],
    pub config: &'a Cfg,
    pub result: R,
}

pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).input()?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    /// Temp file in the target directory, then rename over the target.
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).context("creating temp file").input()?;
        tmp.write_all(bytes).context("writing report").input()?;
        tmp.persist(&target).map_err(|e| e.error).with_context(|| format!("writing {}", target.display())).input()?;
        Ok(target)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).context("serializing report").check()?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).context("serializing CSV row").check()?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("flushing CSV: {e}")).check()?;
        self.write(name, &bytes)
    }
}
