//! S-symmetric Fock space on a rapidity grid.
//!
//! A layer Ψ_n is stored flat over n slots; slot index s = i·D + α pairs a
//! grid point with a species, the first slot is most significant. Inner
//! products carry the weights ∏ w_{i_k}. Point evaluations of z#(θ) use
//! δ(θ_i − θ_j) ↦ δ_ij / w_i.

mod ops;

pub use ops::*;

use crate::error::{input, Result};
use crate::perm;
use crate::smatrix::{ParticleSpectrum, SMatrix};
use crate::C;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Guard for the n! sum in P_n.
pub const MAX_PROJECT_N: usize = 8;

/// Base-`d` digits of `idx`, most significant first, `n` of them.
pub fn digits(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

pub fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |a, &x| a * d + x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RapidityGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RapidityGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return input("grid: points and weights must be nonempty and of equal length");
        }
        if points.windows(2).any(|w| w[1] <= w[0]) || weights.iter().any(|w| !(*w > 0.0)) {
            return input("grid: points strictly increasing, weights positive");
        }
        Ok(Self { points, weights })
    }

    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Self {
        let (points, weights) = crate::num::gauss_legendre(n, a, b);
        Self { points, weights }
    }

    /// Default tensor grid: 8 Gauss-Legendre points on [−4, 4].
    pub fn default_tensor() -> Self {
        Self::gauss_legendre(8, -4.0, 4.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One-particle function φ^α(θ_i), stored at i·D + α.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<C>,
}

impl GridFunction {
    pub fn from_fn(grid: &RapidityGrid, d: usize, f: impl Fn(f64, usize) -> C) -> Self {
        let mut values = Vec::with_capacity(grid.len() * d);
        for &t in &grid.points {
            for a in 0..d {
                values.push(f(t, a));
            }
        }
        Self { values }
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        Self { values: (0..len).map(|_| random_c(rng)).collect() }
    }
}

pub(crate) fn random_c(rng: &mut impl Rng) -> C {
    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    /// Layer n has (G·D)^n entries.
    pub layers: Vec<Vec<C>>,
    /// Set when an operation dropped a nonzero (N_max+1)-particle part.
    pub truncated: bool,
}

impl FockVector {
    pub fn n_max(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Word of adjacent transpositions τ_k, 0-based k < n−1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationWord {
    pub n: usize,
    pub word: Vec<usize>,
}

impl PermutationWord {
    pub fn new(n: usize, word: Vec<usize>) -> Result<Self> {
        if word.iter().any(|&k| k + 1 >= n) {
            return input(format!("word index out of range for n = {n}"));
        }
        Ok(Self { n, word })
    }

    pub fn one_line(&self) -> perm::Perm {
        perm::from_word(self.n, &self.word)
    }

    /// σ_k = τ_{k−1}⋯τ_1 in 1-based notation, mapping slot 0 to slot k−1.
    pub fn sigma(n: usize, k: usize) -> Self {
        Self { n, word: (0..k.saturating_sub(1)).rev().collect() }
    }
}

/// Grid, spectrum, truncation and the cached two-body S table.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub grid: RapidityGrid,
    pub spectrum: ParticleSpectrum,
    pub n_max: usize,
    s: SMatrix,
    /// S(θ_j − θ_i) at i·G + j, D²×D² row-major.
    table: Vec<Vec<C>>,
    words: Vec<Vec<Vec<usize>>>,
}

impl FockSpace {
    pub fn new(s: &SMatrix, grid: RapidityGrid, n_max: usize) -> Result<Self> {
        let g = grid.len();
        let d = s.species();
        let mut table = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                let m = s.eval_real(grid.points[j] - grid.points[i])?;
                let mut flat = Vec::with_capacity(d.pow(4));
                for r in 0..d * d {
                    for c in 0..d * d {
                        flat.push(m[(r, c)]);
                    }
                }
                table.push(flat);
            }
        }
        let words = (0..=n_max.min(MAX_PROJECT_N)).map(|n| perm::lexicographic(n).iter().map(|p| perm::reduced_word(p)).collect()).collect();
        Ok(Self { grid, spectrum: s.spectrum.clone(), n_max, s: s.clone(), table, words })
    }

    pub fn smatrix(&self) -> &SMatrix {
        &self.s
    }

    pub fn d(&self) -> usize {
        self.spectrum.species
    }

    /// One-particle dimension G·D.
    pub fn dim1(&self) -> usize {
        self.grid.len() * self.d()
    }

    pub fn layer_len(&self, n: usize) -> usize {
        self.dim1().pow(n as u32)
    }

    /// S(θ_j − θ_i)^{αβ}_{γδ}.
    #[inline]
    pub(crate) fn s_at(&self, i: usize, j: usize, a: usize, b: usize, c: usize, e: usize) -> C {
        let d = self.d();
        self.table[i * self.grid.len() + j][(a * d + b) * d * d + c * d + e]
    }

    /// ∏ w over the grid points of a flat layer index.
    pub fn weight(&self, n: usize, idx: usize) -> f64 {
        let d = self.d();
        digits(idx, self.dim1(), n).iter().map(|s| self.grid.weights[s / d]).product()
    }

    pub fn weights(&self, n: usize) -> Vec<f64> {
        let base: Vec<f64> = (0..self.dim1()).map(|s| self.grid.weights[s / self.d()]).collect();
        let mut w = vec![1.0];
        for _ in 0..n {
            w = w.iter().flat_map(|x| base.iter().map(move |b| x * b)).collect();
        }
        w
    }

    pub fn layer_inner(&self, n: usize, a: &[C], b: &[C]) -> C {
        self.weights(n).iter().zip(a.iter().zip(b)).map(|(w, (x, y))| *w * x.conj() * y).sum()
    }

    pub fn inner(&self, a: &FockVector, b: &FockVector) -> C {
        (0..a.layers.len().min(b.layers.len())).map(|n| self.layer_inner(n, &a.layers[n], &b.layers[n])).sum()
    }

    pub fn norm(&self, a: &FockVector) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    pub fn one_inner(&self, f: &GridFunction, g: &GridFunction) -> C {
        self.layer_inner(1, &f.values, &g.values)
    }

    pub fn zero(&self) -> FockVector {
        FockVector { layers: (0..=self.n_max).map(|n| vec![C::new(0.0, 0.0); self.layer_len(n)]).collect(), truncated: false }
    }

    pub fn vacuum(&self) -> FockVector {
        let mut v = self.zero();
        v.layers[0][0] = C::new(1.0, 0.0);
        v
    }

    /// Vector with a single nonzero layer.
    pub fn from_layer(&self, n: usize, layer: Vec<C>) -> Result<FockVector> {
        if n > self.n_max || layer.len() != self.layer_len(n) {
            return input("layer does not fit this Fock space");
        }
        let mut v = self.zero();
        v.layers[n] = layer;
        Ok(v)
    }

    pub fn random_layer(&self, n: usize, rng: &mut impl Rng) -> Vec<C> {
        (0..self.layer_len(n)).map(|_| random_c(rng)).collect()
    }

    /// P_n-projected random layers up to `top`, normalized to unit norm.
    pub fn random_symmetric(&self, top: usize, rng: &mut impl Rng) -> Result<FockVector> {
        let mut v = self.zero();
        for n in 0..=top.min(self.n_max) {
            let l = self.random_layer(n, rng);
            v.layers[n] = self.project_pn(n, &l)?;
        }
        let nv = self.norm(&v);
        for l in &mut v.layers {
            for x in l.iter_mut() {
                *x /= nv;
            }
        }
        Ok(v)
    }

    pub(crate) fn check_layer(&self, n: usize, layer: &[C]) -> Result<()> {
        if layer.len() != self.layer_len(n) {
            return input(format!("layer of length {} does not match n = {n} on this grid", layer.len()));
        }
        Ok(())
    }

    pub(crate) fn words(&self, n: usize) -> Result<std::borrow::Cow<'_, [Vec<usize>]>> {
        if n > MAX_PROJECT_N {
            return Err(crate::Error::TooLarge { what: "n for P_n".into(), value: n, limit: MAX_PROJECT_N });
        }
        Ok(match self.words.get(n) {
            Some(w) => std::borrow::Cow::Borrowed(w.as_slice()),
            None => std::borrow::Cow::Owned(perm::lexicographic(n).iter().map(|p| perm::reduced_word(p)).collect()),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FockJson {
    grid: RapidityGrid,
    spectrum: ParticleSpectrum,
    layers: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    truncated: bool,
}

impl FockSpace {
    pub fn to_json(&self, v: &FockVector) -> String {
        let j = FockJson {
            grid: self.grid.clone(),
            spectrum: self.spectrum.clone(),
            layers: v.layers.iter().map(|l| l.iter().map(|z| [z.re, z.im]).collect()).collect(),
            truncated: v.truncated,
        };
        serde_json::to_string(&j).expect("plain data serializes")
    }

    pub fn from_json(&self, text: &str) -> Result<FockVector> {
        let j: FockJson = serde_json::from_str(text).map_err(|e| crate::Error::Input(format!("Fock JSON: {e}")))?;
        if j.grid != self.grid || j.spectrum != self.spectrum {
            return input("Fock JSON: grid or spectrum differs from this space");
        }
        let mut v = self.zero();
        v.truncated = j.truncated;
        for (n, l) in j.layers.into_iter().enumerate() {
            if n > self.n_max {
                break;
            }
            let l: Vec<C> = l.into_iter().map(|p| C::new(p[0], p[1])).collect();
            self.check_layer(n, &l)?;
            v.layers[n] = l;
        }
        Ok(v)
    }
}
