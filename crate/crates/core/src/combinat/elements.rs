//! S-tensors of contractions and contracted matrix elements ⟨A⟩_C,
//! ⟨A⟩^con_{n,k} on a rapidity grid.
//!
//! Operators act on the concatenated layer coefficients (layer 0 first) and
//! are compressed to P A P, P = ⊕ P_n. The pairing of a smearing function F
//! with a kernel reduces on the grid to Σ F(x)⟨a_x, A b_y⟩, where
//! a_x = √(m!) P_m e_x and b_y = √(q!) P_q e_{R(y)}; R reverses the slots and
//! conjugates species. δ(θ_l − θ_r) contributes one weight per pair.

use super::{enumerate_contractions, pi_lambda, pi_rho, Contraction};
use crate::error::{input, Error, Result};
use crate::fock::{digits, undigits, FockSpace, FockVector, GridFunction};
use crate::linalg::{eye, kron, max_abs, op_norm, CMat};
use crate::perm;
use crate::smatrix::{s_tensor, SMatrix};
use crate::C;
use rand::Rng;

/// Guard for ⟨A⟩^con_{n,k}.
pub const MAX_CON_N: usize = 4;

#[derive(Clone, Debug)]
pub struct Factorization {
    /// S_n^{π_ρ}(θ).
    pub rho: CMat,
    /// S_n^{π_λ}(θ).
    pub lambda: CMat,
    /// S_n^{π_C}(θ), built from the word of π_C directly.
    pub full: CMat,
    /// S^ρ on slots r_1..k.
    pub block_rho: CMat,
    /// S^λ on slots k+1..l_max.
    pub block_lambda: CMat,
    /// Largest deviation among the factorization identities.
    pub residual: f64,
}

/// S_n^{π_C} = S_n^{π_ρ}·S_n^{π_λ} with the block structure 1⊗S^ρ⊗1 and 1⊗S^λ⊗1.
pub fn s_tensor_factorization(s: &SMatrix, c: &Contraction, theta: &[f64]) -> Result<Factorization> {
    let n = c.n;
    if theta.len() != n {
        return input(format!("need {n} rapidities, got {}", theta.len()));
    }
    let d = s.species();
    let (rho_p, lambda_p) = (pi_rho(c)?, pi_lambda(c)?);
    let pc = rho_p.then(&lambda_p);
    let rho = s_tensor(s, n, &rho_p.word, theta)?;
    let lambda = s_tensor(s, n, &lambda_p.word, theta)?;
    let full = s_tensor(s, n, &pc.word, theta)?;
    let id = |slots: usize| eye(d.pow(slots as u32));

    let r1 = c.rs.first().copied().unwrap_or(c.k + 1);
    let shift = |w: &[usize], by: usize| w.iter().map(|t| t - by).collect::<Vec<_>>();
    let block_rho = if c.is_empty() { eye(1) } else { s_tensor(s, c.k + 1 - r1, &shift(&rho_p.word, r1 - 1), &theta[r1 - 1..c.k])? };
    let lmax = c.l_max();
    let block_lambda = if c.is_empty() { eye(1) } else { s_tensor(s, lmax - c.k, &shift(&lambda_p.word, c.k), &theta[c.k..lmax])? };
    let rho_embedded = kron(&kron(&id(r1 - 1), &block_rho), &id(n - c.k));
    let lambda_embedded = kron(&kron(&id(c.k), &block_lambda), &id(n - lmax));

    let rl = &rho * &lambda;
    let residual = [
        max_abs(&(&full - &rl)),
        max_abs(&(&rl - &lambda * &rho)),
        if c.is_empty() { max_abs(&(&rho - id(n))) } else { max_abs(&(&rho - rho_embedded)) },
        if c.is_empty() { max_abs(&(&lambda - id(n))) } else { max_abs(&(&lambda - lambda_embedded)) },
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(Factorization { rho, lambda, full, block_rho, block_lambda, residual })
}

/// Total coefficient count of the truncated Fock space.
pub fn fock_dim(fs: &FockSpace) -> usize {
    (0..=fs.n_max).map(|n| fs.layer_len(n)).sum()
}

/// P_n as a matrix on layer coefficients.
pub fn projector_matrix(fs: &FockSpace, n: usize) -> Result<CMat> {
    let len = fs.layer_len(n);
    let mut p = CMat::zeros(len, len);
    let mut e = vec![C::new(0.0, 0.0); len];
    for x in 0..len {
        e[x] = C::new(1.0, 0.0);
        let col = fs.project_pn(n, &e)?;
        e[x] = C::new(0.0, 0.0);
        for (y, v) in col.into_iter().enumerate() {
            p[(y, x)] = v;
        }
    }
    Ok(p)
}

/// Uniform entries in the unit square.
pub fn random_operator(fs: &FockSpace, rng: &mut impl Rng) -> CMat {
    let n = fock_dim(fs);
    CMat::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Grid function norm ‖f‖₂ with quadrature weights.
pub fn l2_norm(fs: &FockSpace, f: &GridFunction) -> f64 {
    fs.one_inner(f, f).re.max(0.0).sqrt()
}

/// An operator compressed to the S-symmetric subspace, with its projectors.
pub struct ContractionContext<'a> {
    fs: &'a FockSpace,
    a: CMat,
    offsets: Vec<usize>,
    proj: Vec<CMat>,
    weights: Vec<Vec<f64>>,
}

impl<'a> ContractionContext<'a> {
    pub fn new(fs: &'a FockSpace, a: &CMat) -> Result<Self> {
        let dim = fock_dim(fs);
        if a.nrows() != dim || a.ncols() != dim {
            return input(format!("operator must be {dim}×{dim} on this truncated space"));
        }
        if fs.n_max > MAX_CON_N + 1 {
            return Err(Error::TooLarge { what: "n_max for contracted elements".into(), value: fs.n_max, limit: MAX_CON_N + 1 });
        }
        let mut offsets = vec![0];
        for n in 0..=fs.n_max {
            offsets.push(offsets[n] + fs.layer_len(n));
        }
        let proj = (0..=fs.n_max).map(|n| projector_matrix(fs, n)).collect::<Result<Vec<_>>>()?;
        let mut comp = CMat::zeros(dim, dim);
        for m in 0..=fs.n_max {
            for q in 0..=fs.n_max {
                let blk = a.view((offsets[m], offsets[q]), (fs.layer_len(m), fs.layer_len(q)));
                let pb = &proj[m] * blk * &proj[q];
                comp.view_mut((offsets[m], offsets[q]), pb.shape()).copy_from(&pb);
            }
        }
        let weights = (0..=fs.n_max).map(|n| fs.weights(n)).collect();
        Ok(Self { fs, a: comp, offsets, proj, weights })
    }

    /// P A P.
    pub fn operator(&self) -> &CMat {
        &self.a
    }

    /// Operator norm for the weighted inner product.
    pub fn norm(&self) -> f64 {
        let w: Vec<f64> = self.weights.iter().flatten().copied().collect();
        let m = CMat::from_fn(w.len(), w.len(), |i, j| self.a[(i, j)] * (w[i] / w[j]).sqrt());
        op_norm(&m)
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        let flat: Vec<C> = v.layers.iter().flatten().copied().collect();
        let out = &self.a * nalgebra::DVector::from_vec(flat);
        let mut r = self.fs.zero();
        for (n, l) in r.layers.iter_mut().enumerate() {
            l.copy_from_slice(&out.as_slice()[self.offsets[n]..self.offsets[n + 1]]);
        }
        r
    }

    #[inline]
    fn entry(&self, m: usize, x: usize, q: usize, y: usize) -> C {
        self.a[(self.offsets[m] + x, self.offsets[q] + y)]
    }

    /// Reversed slots with conjugated species.
    fn reflect(&self, q: usize, y: usize) -> usize {
        let (dim1, d) = (self.fs.dim1(), self.fs.d());
        let mut s = digits(y, dim1, q);
        s.reverse();
        for x in &mut s {
            *x = (*x / d) * d + self.fs.spectrum.bar(*x % d);
        }
        undigits(&s, dim1)
    }

    fn check_fit(&self, n: usize) -> Result<()> {
        if n > self.fs.n_max {
            return Err(Error::TooLarge { what: "particle number versus truncation".into(), value: n, limit: self.fs.n_max });
        }
        Ok(())
    }

    /// ⟨A⟩_C(F⊗G), F on the n−k−|C| free left slots, G on the k−|C| free right slots.
    pub fn contracted_matrix_element(&self, c: &Contraction, f: &[C], g: &[C]) -> Result<C> {
        c.validate()?;
        let m = c.n - c.k - c.len();
        let q = c.k - c.len();
        self.check_fit(m.max(q))?;
        if f.len() != self.fs.layer_len(m) || g.len() != self.fs.layer_len(q) {
            return input("smearing functions do not match the free slots of the contraction");
        }
        let k = |x: usize, y: usize| f[x] * g[y];
        Ok(self.pair(m, q, &k))
    }

    /// √(m!q!) Σ K(x,y) W_m(x) Â[x, R(y)].
    fn pair(&self, m: usize, q: usize, k: &dyn Fn(usize, usize) -> C) -> C {
        let scale = ((perm::factorial(m) * perm::factorial(q)) as f64).sqrt();
        let mut acc = C::new(0.0, 0.0);
        for y in 0..self.fs.layer_len(q) {
            let ry = self.reflect(q, y);
            for x in 0..self.fs.layer_len(m) {
                acc += k(x, y) * self.weights[m][x] * self.entry(m, x, q, ry);
            }
        }
        acc * scale
    }

    /// Σ_α f^α(θ) S^π(θ)^α_β over all grid assignments of `vars`, stored by
    /// lower slot p ↦ (grid of θ_{π(p)}, β_p).
    fn dressed(&self, word: &[usize], pl: &[usize], fns: &[&GridFunction]) -> Result<Vec<C>> {
        let (g, d, dim1) = (self.fs.grid.len(), self.fs.d(), self.fs.dim1());
        let nv = fns.len();
        let mut out = vec![C::new(0.0, 0.0); dim1.pow(nv as u32)];
        let dn = d.pow(nv as u32);
        for gi in 0..g.pow(nv as u32) {
            let gs = digits(gi, g, nv);
            let theta: Vec<f64> = gs.iter().map(|&i| self.fs.grid.points[i]).collect();
            let s = s_tensor(self.fs.smatrix(), nv, word, &theta)?;
            let fv: Vec<C> = (0..dn).map(|a| digits(a, d, nv).iter().enumerate().map(|(j, &aj)| fns[j].values[gs[j] * d + aj]).product()).collect();
            for b in 0..dn {
                let y: C = (0..dn).map(|a| fv[a] * s[(a, b)]).sum();
                let bs = digits(b, d, nv);
                let slots: Vec<usize> = (0..nv).map(|p| gs[pl[p]] * d + bs[p]).collect();
                out[undigits(&slots, dim1)] = y;
            }
        }
        Ok(out)
    }

    /// Smearing kernel K(x_L, x_R) of ⟨A⟩_C inside ⟨A⟩^con, the contracted
    /// pairs summed with one weight each. Row-major in x_L.
    fn contraction_kernel(&self, c: &Contraction, f: &[GridFunction]) -> Result<Vec<C>> {
        let (n, k, len) = (c.n, c.k, c.len());
        let (d, dim1) = (self.fs.d(), self.fs.dim1());
        let rho = pi_rho(c)?;
        let lam = pi_lambda(c)?;
        let right_fns: Vec<&GridFunction> = f[..k].iter().collect();
        let left_fns: Vec<&GridFunction> = f[k..].iter().collect();
        let yr = self.dressed(&rho.word, &rho.one_line[..k], &right_fns)?;
        let lam_word: Vec<usize> = lam.word.iter().map(|t| t - k).collect();
        let lam_local: Vec<usize> = lam.one_line[k..].iter().map(|j| j - k).collect();
        let yl = self.dressed(&lam_word, &lam_local, &left_fns)?;

        let (m, q) = (n - k - len, k - len);
        let (lm, lq, lc) = (dim1.pow(m as u32), dim1.pow(q as u32), dim1.pow(len as u32));
        let mut kern = vec![C::new(0.0, 0.0); lm * lq];
        for ci in 0..lc {
            let cs = digits(ci, dim1, len);
            let w: f64 = cs.iter().map(|s| self.fs.grid.weights[s / d]).product();
            let bar: Vec<usize> = cs.iter().rev().map(|s| (s / d) * d + self.fs.spectrum.bar(s % d)).collect();
            let rc = undigits(&bar, dim1);
            for xl in 0..lm {
                let a = yl[ci * lm + xl] * w;
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for xr in 0..lq {
                    kern[xl * lq + xr] += a * yr[xr * lc + rc];
                }
            }
        }
        Ok(kern)
    }

    fn check_con(&self, n: usize, k: usize, f: &[GridFunction]) -> Result<()> {
        if n > MAX_CON_N {
            return Err(Error::TooLarge { what: "n for contracted elements".into(), value: n, limit: MAX_CON_N });
        }
        self.check_fit(n)?;
        if k > n || f.len() != n {
            return input(format!("need 0 ≤ k ≤ n and n = {n} smearing functions"));
        }
        if f.iter().any(|g| g.values.len() != self.fs.dim1()) {
            return input("grid function does not match the grid");
        }
        Ok(())
    }

    /// ⟨A⟩^con_{n,k}(f_1⊗⋯⊗f_n) from the sum over 𝒞_{n,k}.
    pub fn fully_contracted_element(&self, n: usize, k: usize, f: &[GridFunction]) -> Result<C> {
        self.check_con(n, k, f)?;
        let mut acc = C::new(0.0, 0.0);
        for c in enumerate_contractions(n, k)? {
            let kern = self.contraction_kernel(&c, f)?;
            let (m, q) = (n - k - c.len(), k - c.len());
            let lq = self.fs.layer_len(q);
            let v = self.pair(m, q, &|x, y| kern[x * lq + y]);
            acc += if c.len() % 2 == 0 { v } else { -v };
        }
        Ok(acc)
    }

    /// The same quantity from contractions leaving k+1 free, with A replaced
    /// by [z_{k+1}, A]. Needs k < n.
    pub fn fully_contracted_commutator(&self, n: usize, k: usize, f: &[GridFunction]) -> Result<C> {
        self.check_con(n, k, f)?;
        if k == n {
            return input("commutator form needs k < n");
        }
        let (d, dim1) = (self.fs.d(), self.fs.dim1());
        let mut acc = C::new(0.0, 0.0);
        for c in enumerate_contractions(n, k)?.into_iter().filter(|c| !c.ls.contains(&(k + 1))) {
            let kern = self.contraction_kernel(&c, f)?;
            let (m, q) = (n - k - c.len(), k - c.len());
            let (lr, lq) = (self.fs.layer_len(m - 1), self.fs.layer_len(q));
            let lq1 = if q > 0 { self.fs.layer_len(q - 1) } else { 0 };
            let a_norm = (perm::factorial(m - 1) as f64).sqrt();
            let b_norm = (perm::factorial(q) as f64).sqrt();
            let mut v = C::new(0.0, 0.0);
            for y in 0..lq {
                let ry = self.reflect(q, y);
                for x0 in 0..dim1 {
                    let w0 = self.fs.grid.weights[x0 / d];
                    for rest in 0..lr {
                        let kv = kern[(x0 * lr + rest) * lq + y];
                        if kv == C::new(0.0, 0.0) {
                            continue;
                        }
                        // ⟨a_rest, z(e_{x0}) A b_y⟩
                        let za = (m as f64).sqrt() * w0 * self.entry(m, x0 * lr + rest, q, ry);
                        // ⟨a_rest, A z(e_{x0}) b_y⟩
                        let mut az = C::new(0.0, 0.0);
                        if q > 0 {
                            for yp in 0..lq1 {
                                az += self.entry(m - 1, rest, q - 1, yp) * self.proj[q][(x0 * lq1 + yp, ry)];
                            }
                            az *= (q as f64).sqrt() * w0;
                        }
                        v += kv * a_norm * b_norm * self.weights[m - 1][rest] * (za - az);
                    }
                }
            }
            acc += if c.len() % 2 == 0 { v } else { -v };
        }
        Ok(acc)
    }

    /// √(n!) ∫ f_1⊗⋯⊗f_n · (AΩ)_n.
    pub fn vacuum_pairing(&self, f: &[GridFunction]) -> Result<C> {
        let n = f.len();
        self.check_fit(n)?;
        let dim1 = self.fs.dim1();
        let mut acc = C::new(0.0, 0.0);
        for x in 0..self.fs.layer_len(n) {
            let prod: C = digits(x, dim1, n).iter().enumerate().map(|(j, &s)| f[j].values[s]).product();
            acc += prod * self.weights[n][x] * self.entry(n, x, 0, 0);
        }
        Ok(acc * (perm::factorial(n) as f64).sqrt())
    }
}
