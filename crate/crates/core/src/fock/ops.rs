use super::{digits, undigits, FockSpace, FockVector, GridFunction, PermutationWord};
use crate::error::{input, Result};
use crate::perm;
use crate::smatrix::{phase_shift_at, SMatrix};
use crate::C;
use serde::Serialize;

fn czero() -> C {
    C::new(0.0, 0.0)
}

impl FockSpace {
    /// (D_n(τ_k)Ψ)(θ) = S(θ_{k+1}−θ_k)_{n,k} Ψ(..θ_{k+1},θ_k..), 0-based k.
    pub fn d_n_transposition(&self, n: usize, k: usize, layer: &[C]) -> Result<Vec<C>> {
        self.check_layer(n, layer)?;
        if k + 1 >= n {
            return input(format!("transposition τ_{k} needs n ≥ {}", k + 2));
        }
        let (g, d) = (self.grid.len(), self.d());
        let m = self.dim1();
        let pre = m.pow(k as u32);
        let post = m.pow((n - k - 2) as u32);
        let mut out = vec![czero(); layer.len()];
        for p in 0..pre {
            for i in 0..g {
                for j in 0..g {
                    for a in 0..d {
                        for b in 0..d {
                            let dst = ((p * m + i * d + a) * m + j * d + b) * post;
                            for c in 0..d {
                                for e in 0..d {
                                    let s = self.s_at(i, j, a, b, c, e);
                                    if s == czero() {
                                        continue;
                                    }
                                    // swapped arguments: (θ_j, γ) in slot k, (θ_i, δ) in slot k+1
                                    let src = ((p * m + j * d + c) * m + i * d + e) * post;
                                    for q in 0..post {
                                        out[dst + q] += s * layer[src + q];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// D_n(π) for π = τ_{k1}⋯τ_{km}; the rightmost factor acts first.
    pub fn d_n(&self, w: &PermutationWord, layer: &[C]) -> Result<Vec<C>> {
        let mut v = layer.to_vec();
        for &k in w.word.iter().rev() {
            v = self.d_n_transposition(w.n, k, &v)?;
        }
        Ok(v)
    }

    /// P_n = (1/n!) Σ_π D_n(π), lexicographic enumeration.
    pub fn project_pn(&self, n: usize, layer: &[C]) -> Result<Vec<C>> {
        self.check_layer(n, layer)?;
        let words = self.words(n)?;
        let mut acc = vec![czero(); layer.len()];
        for w in words.iter() {
            let v = self.d_n(&PermutationWord { n, word: w.clone() }, layer)?;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        let f = 1.0 / perm::factorial(n) as f64;
        Ok(acc.into_iter().map(|x| x * f).collect())
    }

    fn tensor(&self, f: &[C], layer: &[C]) -> Vec<C> {
        f.iter().flat_map(|a| layer.iter().map(move |b| a * b)).collect()
    }

    fn check_fn(&self, f: &GridFunction) -> Result<()> {
        if f.values.len() != self.dim1() {
            return input("grid function does not match the grid");
        }
        Ok(())
    }

    fn lift(&self, v: &FockVector, op: impl Fn(usize, &[C]) -> Result<Option<Vec<C>>>, shift: isize) -> Result<FockVector> {
        let mut out = self.zero();
        out.truncated = v.truncated;
        for (n, l) in v.layers.iter().enumerate() {
            let target = n as isize + shift;
            if target < 0 {
                continue;
            }
            let target = target as usize;
            if target > self.n_max {
                if l.iter().any(|x| x.norm() > 0.0) {
                    out.truncated = true;
                }
                continue;
            }
            if let Some(r) = op(n, l)? {
                out.layers[target] = r;
            }
        }
        Ok(out)
    }

    /// z†(φ) = P â†(φ) P: layer n−1 ↦ √n P_n(φ ⊗ P_{n−1}Ψ_{n−1}).
    pub fn z_dagger(&self, f: &GridFunction, v: &FockVector) -> Result<FockVector> {
        self.check_fn(f)?;
        self.lift(
            v,
            |n, l| {
                let pl = self.project_pn(n, l)?;
                let t = self.tensor(&f.values, &pl);
                let p = self.project_pn(n + 1, &t)?;
                let c = ((n + 1) as f64).sqrt();
                Ok(Some(p.into_iter().map(|x| x * c).collect()))
            },
            1,
        )
    }

    /// z†(φ) through (1/√n) Σ_k S_n^{σ_k}(θ)(φ(θ_k) ⊗ Ψ_{n−1}(θ̂_k)),
    /// assembled point by point; valid on S-symmetric input.
    pub fn z_dagger_explicit(&self, f: &GridFunction, v: &FockVector) -> Result<FockVector> {
        self.check_fn(f)?;
        let (m, d) = (self.dim1(), self.d());
        self.lift(
            v,
            |nm1, l| {
                let n = nm1 + 1;
                let mut out = vec![czero(); m.pow(n as u32)];
                let dn = d.pow(n as u32);
                let gtuples = self.grid.len().pow(n as u32);
                let mut vec_s = vec![czero(); dn];
                for gt in 0..gtuples {
                    let gi = digits(gt, self.grid.len(), n);
                    for k in 0..n {
                        // v^{α}(θ) = φ^{α_1}(θ_k) Ψ^{α_2..}(θ̂_k) with α_1 in slot 0
                        let rest: Vec<usize> = (0..n).filter(|&x| x != k).map(|x| gi[x]).collect();
                        for sp in 0..dn {
                            let al = digits(sp, d, n);
                            let head = f.values[gi[k] * d + al[0]];
                            let tail: Vec<usize> = rest.iter().zip(&al[1..]).map(|(i, a)| i * d + a).collect();
                            vec_s[sp] = head * l[undigits(&tail, m)];
                        }
                        // θ^{σ_k} = (θ_k, θ_1, .., θ̂_k, ..): the point v is sampled at
                        let w = PermutationWord::sigma(n, k + 1);
                        let r = self.apply_s_word_at(&gi, &w.word, &vec_s);
                        for sp in 0..dn {
                            let al = digits(sp, d, n);
                            let idx: Vec<usize> = gi.iter().zip(&al).map(|(i, a)| i * d + a).collect();
                            out[undigits(&idx, m)] += r[sp];
                        }
                    }
                }
                let c = 1.0 / (n as f64).sqrt();
                Ok(Some(out.into_iter().map(|x| x * c).collect()))
            },
            1,
        )
    }

    /// S^w(θ)·v at grid tuple `gi` for a species vector v ∈ K^{⊗n}.
    fn apply_s_word_at(&self, gi: &[usize], word: &[usize], v: &[C]) -> Vec<C> {
        let n = gi.len();
        let d = self.d();
        // factors S(cur[k+1] − cur[k])_{n,k} along the word, applied right to left
        let mut cur = gi.to_vec();
        let mut factors = Vec::with_capacity(word.len());
        for &k in word {
            factors.push((k, cur[k], cur[k + 1]));
            cur.swap(k, k + 1);
        }
        let mut x = v.to_vec();
        let post_of = |k: usize| d.pow((n - k - 2) as u32);
        for &(k, i, j) in factors.iter().rev() {
            let pre = d.pow(k as u32);
            let post = post_of(k);
            let mut y = vec![czero(); x.len()];
            for p in 0..pre {
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            for e in 0..d {
                                let s = self.s_at(i, j, a, b, c, e);
                                if s == czero() {
                                    continue;
                                }
                                for q in 0..post {
                                    y[((p * d + a) * d + b) * post + q] += s * x[((p * d + c) * d + e) * post + q];
                                }
                            }
                        }
                    }
                }
            }
            x = y;
        }
        x
    }

    /// (z(φ)Ψ)_n = √(n+1) Σ_i w_i conj φ(θ_i) · Ψ_{n+1}(θ_i, ·).
    pub fn z(&self, f: &GridFunction, v: &FockVector) -> Result<FockVector> {
        self.check_fn(f)?;
        let m = self.dim1();
        self.lift(
            v,
            |n, l| {
                if n == 0 {
                    return Ok(None);
                }
                let len = m.pow((n - 1) as u32);
                let c = (n as f64).sqrt();
                let mut out = vec![czero(); len];
                for s in 0..m {
                    let w = self.grid.weights[s / self.d()] * c;
                    let k = f.values[s].conj() * w;
                    for q in 0..len {
                        out[q] += k * l[s * len + q];
                    }
                }
                Ok(Some(out))
            },
            -1,
        )
    }

    /// z_α(θ_i)Ψ as a slice, i.e. z(e_{iα}/w_i).
    fn z_point(&self, n: usize, s: usize, l: &[C]) -> Vec<C> {
        let len = self.layer_len(n - 1);
        let c = (n as f64).sqrt();
        l[s * len..(s + 1) * len].iter().map(|x| x * c).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExchangeResiduals {
    pub zz: f64,
    pub zdzd: f64,
    pub zzd: f64,
}

impl ExchangeResiduals {
    pub fn max(&self) -> f64 {
        self.zz.max(self.zdzd).max(self.zzd)
    }
}

impl FockSpace {
    fn sub_norm(&self, a: &FockVector, b: &FockVector) -> f64 {
        let mut diff = a.clone();
        for (x, y) in diff.layers.iter_mut().zip(&b.layers) {
            for (p, q) in x.iter_mut().zip(y) {
                *p -= q;
            }
        }
        self.norm(&diff)
    }

    /// Smeared residuals of the three exchange relations on S-symmetric Ψ.
    ///
    /// Only layers that stay below N_max under two creations enter the
    /// z†z† and z z† checks.
    pub fn check_exchange_relations(&self, f: &GridFunction, g: &GridFunction, v: &FockVector) -> Result<ExchangeResiduals> {
        self.check_fn(f)?;
        self.check_fn(g)?;
        let (gl, d, m) = (self.grid.len(), self.d(), self.dim1());
        let w = &self.grid.weights;

        // z(φ)z(ψ) = Σ w_i w_j φ̄^α_i ψ̄^β_j S^{βα}_{δγ}(θ_i−θ_j) z_γ(θ_j) z_δ(θ_i)
        let lhs = self.z(f, &self.z(g, v)?)?;
        let mut rhs = self.zero();
        for n in 0..self.n_max.saturating_sub(1) {
            let l = &v.layers[n + 2];
            let len = self.layer_len(n);
            let c = (((n + 1) * (n + 2)) as f64).sqrt();
            let out = &mut rhs.layers[n];
            for i in 0..gl {
                for j in 0..gl {
                    for de in 0..d {
                        for ga in 0..d {
                            let mut coef = czero();
                            for al in 0..d {
                                for be in 0..d {
                                    // S(θ_i−θ_j) is stored at (j, i)
                                    coef += f.values[i * d + al].conj() * g.values[j * d + be].conj() * self.s_at(j, i, be, al, de, ga);
                                }
                            }
                            if coef == czero() {
                                continue;
                            }
                            let k = coef * w[i] * w[j] * c;
                            let base = ((i * d + de) * m + j * d + ga) * len;
                            for q in 0..len {
                                out[q] += k * l[base + q];
                            }
                        }
                    }
                }
            }
        }
        let zz = self.sub_norm(&lhs, &rhs);

        // z†(φ)z†(ψ)Ψ = √((n+1)(n+2)) P_{n+2}(φ⊗ψ⊗Ψ); the right side replaces
        // φ⊗ψ by T(θ_j γ, θ_i δ) = Σ S^{γδ}_{αβ}(θ_i−θ_j) φ^α_i ψ^β_j
        let mut v2 = v.clone();
        for n in self.n_max.saturating_sub(1)..=self.n_max {
            v2.layers[n].iter_mut().for_each(|x| *x = czero());
        }
        let lhs = self.z_dagger(f, &self.z_dagger(g, &v2)?)?;
        let mut t = vec![czero(); m * m];
        for i in 0..gl {
            for j in 0..gl {
                for ga in 0..d {
                    for de in 0..d {
                        let mut c = czero();
                        for al in 0..d {
                            for be in 0..d {
                                c += self.s_at(j, i, ga, de, al, be) * f.values[i * d + al] * g.values[j * d + be];
                            }
                        }
                        t[(j * d + ga) * m + i * d + de] = c;
                    }
                }
            }
        }
        let mut rhs = self.zero();
        for n in 0..self.n_max.saturating_sub(1) {
            let full = self.tensor(&t, &v2.layers[n]);
            let p = self.project_pn(n + 2, &full)?;
            let c = (((n + 1) * (n + 2)) as f64).sqrt();
            rhs.layers[n + 2] = p.into_iter().map(|x| x * c).collect();
        }
        let zdzd = self.sub_norm(&lhs, &rhs);

        // z(φ)z†(ψ) = Σ w_i w_j φ̄^α_i ψ^β_j S^{αγ}_{βδ}(θ_j−θ_i) z†_γ(θ_j) z_δ(θ_i) + ⟨φ,ψ⟩
        let mut v1 = v.clone();
        v1.layers[self.n_max].iter_mut().for_each(|x| *x = czero());
        let lhs = self.z(f, &self.z_dagger(g, &v1)?)?;
        let mut rhs = v1.clone();
        let pair = self.one_inner(f, g);
        for l in &mut rhs.layers {
            l.iter_mut().for_each(|x| *x *= pair);
        }
        for n in 1..self.n_max {
            let l = &v1.layers[n];
            let len = self.layer_len(n - 1);
            let mut y = vec![czero(); m * len];
            for j in 0..gl {
                for ga in 0..d {
                    for i in 0..gl {
                        for de in 0..d {
                            let mut x = czero();
                            for al in 0..d {
                                for be in 0..d {
                                    // S(θ_j−θ_i) is stored at (i, j)
                                    x += f.values[i * d + al].conj() * g.values[j * d + be] * self.s_at(i, j, al, ga, be, de);
                                }
                            }
                            if x == czero() {
                                continue;
                            }
                            let zi = self.z_point(n, i * d + de, l);
                            let k = x * w[i];
                            let dst = (j * d + ga) * len;
                            for q in 0..len {
                                y[dst + q] += k * zi[q];
                            }
                        }
                    }
                }
            }
            // Σ_{jγ} z†(e_{jγ}) Φ_{jγ} = √n P_n(Σ e_{jγ} ⊗ Φ_{jγ})
            let p = self.project_pn(n, &y)?;
            let c = (n as f64).sqrt();
            for (r, x) in rhs.layers[n].iter_mut().zip(p) {
                *r += x * c;
            }
        }
        let zzd = self.sub_norm(&lhs, &rhs);
        Ok(ExchangeResiduals { zz, zdzd, zzd })
    }

    /// ((‖z(φ)Ψ‖, ‖φ‖‖N^{1/2}Ψ‖), (‖z†(φ)Ψ‖, ‖φ‖‖(N+1)^{1/2}Ψ‖)).
    pub fn number_bound_check(&self, f: &GridFunction, v: &FockVector) -> Result<((f64, f64), (f64, f64))> {
        let nf = self.one_inner(f, f).re.sqrt();
        let mut nn = 0.0;
        let mut np = 0.0;
        for (n, l) in v.layers.iter().enumerate() {
            let q = self.layer_inner(n, l, l).re;
            nn += n as f64 * q;
            np += (n + 1) as f64 * q;
        }
        let a = self.norm(&self.z(f, v)?);
        let b = self.norm(&self.z_dagger(f, v)?);
        Ok(((a, nf * nn.sqrt()), (b, nf * np.sqrt())))
    }

    /// (JΨ)_n^{α_1..α_n}(θ_1..θ_n) = conj Ψ_n^{ᾱ_n..ᾱ_1}(θ_n..θ_1).
    pub fn pct_j(&self, v: &FockVector) -> FockVector {
        let (m, d) = (self.dim1(), self.d());
        let mut out = self.zero();
        out.truncated = v.truncated;
        for (n, l) in v.layers.iter().enumerate() {
            for (idx, o) in out.layers[n].iter_mut().enumerate() {
                let mut s = digits(idx, m, n);
                s.reverse();
                for x in &mut s {
                    *x = (*x / d) * d + self.spectrum.bar(*x % d);
                }
                *o = l[undigits(&s, m)].conj();
            }
        }
        out
    }

    /// Multiplies layer n by ∏ e^{i p_{m_α}(θ)·a}, p·a = p⁰a⁰ − p¹a¹.
    pub fn translate_u(&self, a: [f64; 2], v: &FockVector) -> FockVector {
        let (m, d) = (self.dim1(), self.d());
        let phase: Vec<C> = (0..m)
            .map(|s| {
                let p = crate::smatrix::momentum(self.spectrum.masses[s % d], self.grid.points[s / d]);
                C::from_polar(1.0, p[0] * a[0] - p[1] * a[1])
            })
            .collect();
        let mut out = v.clone();
        for (n, l) in out.layers.iter_mut().enumerate() {
            for (idx, x) in l.iter_mut().enumerate() {
                for s in digits(idx, m, n) {
                    *x *= phase[s];
                }
            }
        }
        out
    }

    /// max_k ‖I_n D_n(τ_k)Ψ − D_n^−(τ_k) I_n Ψ‖ for scalar S with S(0) = −1.
    pub fn check_intertwining(&self, n: usize, layer: &[C]) -> Result<f64> {
        self.check_layer(n, layer)?;
        if self.d() != 1 {
            return input("intertwining check is for scalar S");
        }
        let s: &SMatrix = self.smatrix();
        let g = self.grid.len();
        let mut delta = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..g {
                delta[i * g + j] = phase_shift_at(s, self.grid.points[i] - self.grid.points[j])?;
            }
        }
        let i_n: Vec<C> = (0..layer.len())
            .map(|idx| {
                let gi = digits(idx, g, n);
                let mut v = C::new(1.0, 0.0);
                for k in 0..n {
                    for l in k + 1..n {
                        v *= -C::from_polar(1.0, delta[gi[k] * g + gi[l]]);
                    }
                }
                v
            })
            .collect();
        let mul = |x: &[C]| -> Vec<C> { x.iter().zip(&i_n).map(|(a, b)| a * b).collect() };
        let mut worst: f64 = 0.0;
        for k in 0..n.saturating_sub(1) {
            let lhs = mul(&self.d_n_transposition(n, k, layer)?);
            let ip = mul(layer);
            // D^−(τ_k)Φ(θ) = −Φ(..θ_{k+1},θ_k..)
            let rhs: Vec<C> = (0..ip.len())
                .map(|idx| {
                    let mut gi = digits(idx, g, n);
                    gi.swap(k, k + 1);
                    -ip[undigits(&gi, g)]
                })
                .collect();
            let diff: Vec<C> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            worst = worst.max(self.layer_inner(n, &diff, &diff).re.sqrt());
        }
        Ok(worst)
    }
}
