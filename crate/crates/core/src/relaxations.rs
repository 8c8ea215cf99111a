//! The three semidefinite relaxations of the bias, compiled as Gram programs,
//! plus witness extraction and the inequality chains between bounds.
//!
//! Gram variables for a game with n messages: w_(a,c) holds the conjugated
//! entry vector of X⃗ at (a, c) and v_(b,e) the entry vector of Y⃗ at (b, e), so
//! that G[w_(a,c), v_(b,e)] = Σ_r X_r[a,c]·Y_r[b,e].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::games::{ClassicalGame, GameMatrix};
use crate::linalg::{c64, herm_eig_unchecked, CMat, CVec, C64};
use crate::report::{BiasReport, ChainCheck};
use crate::sdp::{self, LinearForm, SdpInstance, SdpSolution};

/// Entry (i, k) is the vector (X_1[i,k], …, X_d[i,k]).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorValuedMatrix {
    pub n: usize,
    pub mats: Vec<CMat>,
}

impl VectorValuedMatrix {
    pub fn new(n: usize, mats: Vec<CMat>) -> Result<Self> {
        if mats.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(format!("all components must be {n}x{n}")));
        }
        Ok(VectorValuedMatrix { n, mats })
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorValuedMatrix { n: self.n, mats: self.mats.iter().map(|m| m.scale(s)).collect() }
    }
}

/// Σ_r X_r ⊗ Y_r.
pub fn odot(x: &VectorValuedMatrix, y: &VectorValuedMatrix) -> Result<CMat> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch(format!("vector lengths {} and {}", x.d(), y.d())));
    }
    let mut out = CMat::zeros(x.n * y.n, x.n * y.n);
    for (a, b) in x.mats.iter().zip(&y.mats) {
        out += a.kronecker(b);
    }
    Ok(out)
}

/// (Σ X_r X_r†, Σ X_r† X_r).
pub fn vvm_products(x: &VectorValuedMatrix) -> (CMat, CMat) {
    let mut xx = CMat::zeros(x.n, x.n);
    let mut xtx = CMat::zeros(x.n, x.n);
    for m in &x.mats {
        xx += m * m.adjoint();
        xtx += m.adjoint() * m;
    }
    (xx, xtx)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// Unit-ball vectors x_s, y_t (value Re Σ R_st x_s·y_t).
    Sdp { x: Vec<CVec>, y: Vec<CVec> },
    Nc { x: VectorValuedMatrix, y: VectorValuedMatrix },
    Os { xr: VectorValuedMatrix, xc: VectorValuedMatrix, yr: VectorValuedMatrix, yc: VectorValuedMatrix },
}

#[derive(Clone, Debug)]
pub struct RelaxationResult {
    pub value: f64,
    pub witness: Witness,
    pub solver_gap: f64,
    pub dual_value: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct WitnessCheck {
    pub objective: f64,
    /// Largest violation over the norm caps and equalities (0 when feasible).
    pub violation: f64,
    /// Largest entry of X⃗_R⊙Y⃗_C − X⃗_C⊙Y⃗_R (0 outside the os program).
    pub equality_residual: f64,
}

fn lmax(h: &CMat) -> f64 {
    let h = (h + h.adjoint()).scale(0.5);
    herm_eig_unchecked(h).values.first().copied().unwrap_or(0.0)
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Objective Re Tr((X⃗⊙Y⃗)M) and constraint violation for a witness.
pub fn check_witness(m: &CMat, w: &Witness) -> Result<WitnessCheck> {
    match w {
        Witness::Sdp { x, y } => {
            let n = x.len();
            if m.nrows() != n * n || y.len() != n {
                return Err(Error::DimensionMismatch("witness does not match game".into()));
            }
            let mut obj = 0.0;
            for s in 0..n {
                for t in 0..n {
                    let v: C64 = x[s].iter().zip(y[t].iter()).map(|(a, b)| a * b).sum();
                    obj += (m[(s * n + t, s * n + t)] * v).re;
                }
            }
            let violation = x.iter().chain(y).map(|v| (v.norm_squared() - 1.0).max(0.0)).fold(0.0, f64::max);
            Ok(WitnessCheck { objective: obj, violation, equality_residual: 0.0 })
        }
        Witness::Nc { x, y } => {
            let obj = (odot(x, y)? * m).trace().re;
            let (xx, xtx) = vvm_products(x);
            let (yy, yty) = vvm_products(y);
            let violation = [xx, xtx, yy, yty].iter().map(|q| (lmax(q) - 1.0).max(0.0)).fold(0.0, f64::max);
            Ok(WitnessCheck { objective: obj, violation, equality_residual: 0.0 })
        }
        Witness::Os { xr, xc, yr, yc } => {
            let prod = odot(xr, yc)?;
            let obj = (&prod * m).trace().re;
            let eq = max_abs(&(prod - odot(xc, yr)?));
            let caps = [vvm_products(xr).0, vvm_products(xc).1, vvm_products(yr).0, vvm_products(yc).1];
            let violation = caps.iter().map(|q| (lmax(q) - 1.0).max(0.0)).fold(eq, f64::max);
            Ok(WitnessCheck { objective: obj, violation, equality_residual: eq })
        }
    }
}

/// Builds the Gram matrix ⟨g_p, g_q⟩ = Σ_r conj(g_p[r]) g_q[r] of the given vectors.
pub fn gram(vectors: &[CVec]) -> CMat {
    let k = vectors.len();
    CMat::from_fn(k, k, |p, q| vectors[p].dotc(&vectors[q]))
}

/// Columns of W with W†W = G (clipping negative eigenvalues).
fn gram_factor(g: &CMat) -> Vec<CVec> {
    let e = herm_eig_unchecked((g + g.adjoint()).scale(0.5));
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > 1e-13 * top && e.values[i] > 0.0).collect();
    let k = g.nrows();
    (0..k)
        .map(|p| {
            CVec::from_iterator(
                keep.len(),
                keep.iter().map(|&i| e.vectors[(p, i)].conj() * e.values[i].sqrt()),
            )
        })
        .collect()
}

/// Reads X⃗ from conjugated Gram vectors (offset `off`) or Y⃗ from plain ones.
fn read_family(cols: &[CVec], off: usize, n: usize, conj: bool) -> VectorValuedMatrix {
    let d = cols.first().map(|c| c.len()).unwrap_or(0);
    let mats = (0..d)
        .map(|r| {
            CMat::from_fn(n, n, |a, c| {
                let z = cols[off + a * n + c][r];
                if conj { z.conj() } else { z }
            })
        })
        .collect();
    VectorValuedMatrix { n, mats }
}

/// Vectors of X⃗ in the Gram ordering: conjugated entry vectors, row-major.
pub fn family_vectors(x: &VectorValuedMatrix, conj: bool) -> Vec<CVec> {
    let n = x.n;
    (0..n * n)
        .map(|idx| {
            let (a, c) = (idx / n, idx % n);
            CVec::from_iterator(x.d(), x.mats.iter().map(|m| if conj { m[(a, c)].conj() } else { m[(a, c)] }))
        })
        .collect()
}

/// Adds the LMI Q ≼ I as S + Q = I with a fresh slack block; `q(p, p')` lists
/// the Gram entries (i, j) summed into Q[p, p'].
fn add_cap(inst: &mut SdpInstance, label: &str, n: usize, complex: bool, q: impl Fn(usize, usize) -> Vec<(usize, usize)>) {
    let slack = inst.add_block(label, n);
    for p in 0..n {
        for pp in p..n {
            let entries = q(p, pp);
            let mut re = LinearForm::new();
            re.add_re(slack, p, pp, 1.0);
            for &(i, j) in &entries {
                re.add_re(0, i, j, 1.0);
            }
            inst.add_constraint(&re, if p == pp { 1.0 } else { 0.0 });
            if complex && p != pp {
                let mut im = LinearForm::new();
                im.add_im(slack, p, pp, 1.0);
                for &(i, j) in &entries {
                    im.add_im(0, i, j, 1.0);
                }
                inst.add_constraint(&im, 0.0);
            }
        }
    }
}

/// Row form Σ_c G[f_(a,c), f_(a',c)] for the family at `off`.
fn row_form(off: usize, n: usize) -> impl Fn(usize, usize) -> Vec<(usize, usize)> {
    move |a, ap| (0..n).map(|c| (off + a * n + c, off + ap * n + c)).collect()
}

/// Column form Σ_a G[f_(a,c), f_(a,c')].
fn col_form(off: usize, n: usize) -> impl Fn(usize, usize) -> Vec<(usize, usize)> {
    move |c, cp| (0..n).map(|a| (off + a * n + c, off + a * n + cp)).collect()
}

fn objective(m: &CMat, n: usize, w_off: usize, v_off: usize, complex: bool) -> LinearForm {
    let mut obj = LinearForm::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let mu = m[(c * n + e, a * n + b)];
                    let mu = if complex { mu } else { c64(mu.re, 0.0) };
                    if mu.norm() > 0.0 {
                        obj.add(0, w_off + a * n + c, v_off + b * n + e, mu);
                    }
                }
            }
        }
    }
    obj
}

/// Gram program over 2n vectors with ‖x̄_s‖², ‖y_t‖² ≤ 1.
pub fn beta_sdp_instance(g: &ClassicalGame) -> SdpInstance {
    let n = g.n;
    let mut inst = SdpInstance::default();
    inst.add_block("gram", 2 * n);
    let mut obj = LinearForm::new();
    for s in 0..n {
        for t in 0..n {
            if g.r[(s, t)] != 0.0 {
                obj.add_re(0, s, n + t, g.r[(s, t)]);
            }
        }
    }
    inst.objective = obj.entries();
    for p in 0..2 * n {
        let s = inst.add_block(format!("slack{p}"), 1);
        let mut f = LinearForm::new();
        f.add_re(0, p, p, 1.0);
        f.add_re(s, 0, 0, 1.0);
        inst.add_constraint(&f, 1.0);
    }
    inst
}

pub fn beta_nc_instance(g: &GameMatrix) -> SdpInstance {
    let n = g.n();
    let nn = n * n;
    let complex = !g.is_real();
    let mut inst = SdpInstance::default();
    inst.add_block("gram", 2 * nn);
    inst.objective = objective(g.matrix(), n, 0, nn, complex).entries();
    add_cap(&mut inst, "xx", n, complex, row_form(0, n));
    add_cap(&mut inst, "xtx", n, complex, col_form(0, n));
    add_cap(&mut inst, "yy", n, complex, row_form(nn, n));
    add_cap(&mut inst, "yty", n, complex, col_form(nn, n));
    inst
}

/// Families at offsets 0 (wR), n² (wC), 2n² (vR), 3n² (vC).
pub fn beta_os_instance(g: &GameMatrix) -> SdpInstance {
    let n = g.n();
    let nn = n * n;
    let complex = !g.is_real();
    let (wr, wc, vr, vc) = (0, nn, 2 * nn, 3 * nn);
    let mut inst = SdpInstance::default();
    inst.add_block("gram", 4 * nn);
    inst.objective = objective(g.matrix(), n, wr, vc, complex).entries();
    for ac in 0..nn {
        for be in 0..nn {
            let mut re = LinearForm::new();
            re.add_re(0, wr + ac, vc + be, 1.0);
            re.add_re(0, wc + ac, vr + be, -1.0);
            inst.add_constraint(&re, 0.0);
            if complex {
                let mut im = LinearForm::new();
                im.add_im(0, wr + ac, vc + be, 1.0);
                im.add_im(0, wc + ac, vr + be, -1.0);
                inst.add_constraint(&im, 0.0);
            }
        }
    }
    add_cap(&mut inst, "xr", n, complex, row_form(wr, n));
    add_cap(&mut inst, "xc", n, complex, col_form(wc, n));
    add_cap(&mut inst, "yr", n, complex, row_form(vr, n));
    add_cap(&mut inst, "yc", n, complex, col_form(vc, n));
    inst
}

fn finish(sol: SdpSolution, witness: Witness) -> RelaxationResult {
    RelaxationResult { value: sol.primal_value, witness, solver_gap: sol.gap, dual_value: sol.dual_value }
}

pub fn beta_sdp(g: &ClassicalGame, tol: f64) -> Result<RelaxationResult> {
    let sol = sdp::solve(&beta_sdp_instance(g), tol)?;
    let cols = gram_factor(&sol.blocks[0]);
    let n = g.n;
    let x = cols[..n].iter().map(|v| v.map(|z| z.conj())).collect();
    let y = cols[n..].to_vec();
    Ok(finish(sol, Witness::Sdp { x, y }))
}

pub fn beta_nc(g: &GameMatrix, tol: f64) -> Result<RelaxationResult> {
    let sol = sdp::solve(&beta_nc_instance(g), tol)?;
    let n = g.n();
    let cols = gram_factor(&sol.blocks[0]);
    let x = read_family(&cols, 0, n, true);
    let y = read_family(&cols, n * n, n, false);
    Ok(finish(sol, Witness::Nc { x, y }))
}

pub fn beta_os(g: &GameMatrix, tol: f64) -> Result<RelaxationResult> {
    let sol = sdp::solve(&beta_os_instance(g), tol)?;
    let n = g.n();
    let nn = n * n;
    let cols = gram_factor(&sol.blocks[0]);
    let witness = Witness::Os {
        xr: read_family(&cols, 0, n, true),
        xc: read_family(&cols, nn, n, true),
        yr: read_family(&cols, 2 * nn, n, false),
        yc: read_family(&cols, 3 * nn, n, false),
    };
    Ok(finish(sol, witness))
}

/// Hard inequalities between lower and upper bounds, plus soft diagnostics.
pub fn check_chains(g: &GameMatrix, report: &BiasReport) -> Vec<ChainCheck> {
    let slack = 4.0 * report.tol;
    let mut out = Vec::new();
    let mut push = |label: &str, lhs: Option<f64>, rhs: Option<f64>, factor: f64, hard: bool| {
        if let (Some(l), Some(r)) = (lhs, rhs) {
            let rhs = factor * r;
            let margin = if hard { slack } else { 0.0 };
            out.push(ChainCheck { label: label.to_string(), lhs: l, rhs, hard, pass: l <= rhs + margin });
        }
    };
    let tn = Some(g.trace_norm());
    let me_max = report.me_lower.iter().map(|m| m.value).reduce(f64::max);
    push("omega <= beta_nc", report.omega_lower, report.beta_nc, 1.0, true);
    push("omega_c <= beta_nc", report.omega_c_lower, report.beta_nc, 1.0, true);
    push("omega_me <= beta_nc", me_max, report.beta_nc, 1.0, true);
    push("omega_ent <= beta_os", report.entangled_lower.as_ref().map(|e| e.value), report.beta_os, 1.0, true);
    push("omega_me <= beta_os", me_max, report.beta_os, 1.0, true);
    push("beta_nc <= beta_os", report.beta_nc, report.beta_os, 1.0, true);
    push("beta_sdp <= beta_nc", report.beta_sdp, report.beta_nc, 1.0, true);
    push("omega <= beta_sdp", report.omega_lower, report.beta_sdp, 1.0, true);
    push("beta_nc <= trace_norm", report.beta_nc, tn, 1.0, true);
    push("beta_os <= trace_norm", report.beta_os, tn, 1.0, true);
    push("beta_nc <= 2sqrt2 omega", report.beta_nc, report.omega_lower, 2.0 * 2f64.sqrt(), false);
    push("beta_nc <= 2 omega_c", report.beta_nc, report.omega_c_lower, 2.0, false);
    push("beta_os <= 2 omega_ent", report.beta_os, report.entangled_lower.as_ref().map(|e| e.value), 2.0, false);
    out
}

fn binom(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact (ω(H_n), β^nc(H_n)).
pub fn h_n_closed_forms(n: u64) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::BadArgs("n must be >= 1".into()));
    }
    let ratio = BigRational::new(BigInt::from(n + 1), BigInt::from(2 * n + 1));
    let top = binom(2 * n + 1, n);
    let omega = &ratio * &ratio * BigRational::new(&top * &top, binom(4 * n + 1, 2 * n));
    let beta = &omega / &ratio;
    Ok((omega, beta))
}

pub fn h_n_closed_forms_f64(n: u64) -> Result<(f64, f64)> {
    let (a, b) = h_n_closed_forms(n)?;
    Ok((a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN)))
}

/// X⃗ = Y⃗ = (C₁, C₂, C₃)/√2 for the first game of the H family.
pub fn h1_nc_witness() -> Witness {
    let ops = crate::games::h_operators(1).expect("n=1");
    let x = VectorValuedMatrix { n: 3, mats: ops.iter().map(|c| c.scale(0.5f64.sqrt())).collect() };
    Witness::Nc { x: x.clone(), y: x }
}

/// X_R = Y_R = (|0><i|/√n + |i><0|), X_C = Y_C = (|0><i| + |i><0|/√n), i = 1..n.
/// Meets the four norm caps with objective 1 on T_n, but X_R⊙Y_C and X_C⊙Y_R
/// differ by 1 − 1/n in the |0><i|⊗|i><0| entries, so it is feasible only for n = 1.
pub fn t_os_witness(n: usize) -> Witness {
    let s = 1.0 / (n as f64).sqrt();
    let build = |w0i: f64, wi0: f64| {
        let mats = (1..=n)
            .map(|i| {
                let mut m = CMat::zeros(n + 1, n + 1);
                m[(0, i)] = c64(w0i, 0.0);
                m[(i, 0)] = c64(wi0, 0.0);
                m
            })
            .collect();
        VectorValuedMatrix { n: n + 1, mats }
    };
    let r = build(s, 1.0);
    let c = build(1.0, s);
    Witness::Os { xr: r.clone(), xc: c.clone(), yr: r, yc: c }
}

/// Gram matrix and slack blocks representing a witness in the compiled program.
pub fn witness_blocks(inst: &SdpInstance, w: &Witness) -> Vec<CMat> {
    let vectors: Vec<CVec> = match w {
        Witness::Sdp { x, y } => x.iter().map(|v| v.map(|z| z.conj())).chain(y.iter().cloned()).collect(),
        Witness::Nc { x, y } => {
            let mut v = family_vectors(x, true);
            v.extend(family_vectors(y, false));
            v
        }
        Witness::Os { xr, xc, yr, yc } => {
            let mut v = family_vectors(xr, true);
            v.extend(family_vectors(xc, true));
            v.extend(family_vectors(yr, false));
            v.extend(family_vectors(yc, false));
            v
        }
    };
    let mut blocks = vec![gram(&vectors)];
    // Each slack block is I − Q, read back from the constraints that define it.
    for (b, blk) in inst.blocks.iter().enumerate().skip(1) {
        let mut s = CMat::zeros(blk.dim, blk.dim);
        let zero_slack: Vec<CMat> = std::iter::once(blocks[0].clone())
            .chain(inst.blocks.iter().skip(1).map(|k| CMat::zeros(k.dim, k.dim)))
            .collect();
        for c in &inst.constraints {
            let on_slack: Vec<_> = c.entries.iter().filter(|e| e.block == b).collect();
            if on_slack.len() != 1 {
                continue;
            }
            let e = on_slack[0];
            // rhs = value(G) + slack term; the slack term is Re(conj(v) S[r,c]) (x2 off-diagonal).
            let rest = c.rhs - inst.evaluate(&c.entries, &zero_slack);
            if e.r == e.c {
                s[(e.r, e.r)] = c64(rest / e.v.re, 0.0);
            } else if e.v.im == 0.0 {
                s[(e.r, e.c)].re = rest / (2.0 * e.v.re);
            } else {
                // Im part: v = i/2 ⇒ term = Im S[r,c].
                s[(e.r, e.c)].im = rest / (2.0 * e.v.im);
            }
        }
        for r in 0..blk.dim {
            for c in r + 1..blk.dim {
                s[(c, r)] = s[(r, c)].conj();
            }
        }
        blocks.push(s);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{c_game, chsh, from_classical, h_game, t_game};
    use crate::linalg::{gaussian_cmat, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn odot_d1_is_kronecker() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian_cmat(&mut r, 2, 2);
        let b = gaussian_cmat(&mut r, 2, 2);
        let x = VectorValuedMatrix::new(2, vec![a.clone()]).unwrap();
        let y = VectorValuedMatrix::new(2, vec![b.clone()]).unwrap();
        assert_eq!(odot(&x, &y).unwrap(), a.kronecker(&b));
        let z = VectorValuedMatrix::new(2, vec![]).unwrap();
        assert!(odot(&x, &z).is_err());
    }

    #[test]
    fn t_counterexample_products() {
        let n = 3;
        let mats = (1..=n)
            .map(|i| {
                let mut m = CMat::zeros(n + 1, n + 1);
                m[(i, 0)] = c64(1.0, 0.0);
                m
            })
            .collect();
        let x = VectorValuedMatrix::new(n + 1, mats).unwrap();
        let (xx, xtx) = vvm_products(&x);
        let mut d = CMat::identity(n + 1, n + 1);
        d[(0, 0)] = c64(0.0, 0.0);
        assert_eq!(xx, d);
        let mut e = CMat::zeros(n + 1, n + 1);
        e[(0, 0)] = c64(n as f64, 0.0);
        assert_eq!(xtx, e);
    }

    #[test]
    fn closed_forms() {
        let (o, b) = h_n_closed_forms(1).unwrap();
        assert_eq!(o, BigRational::new(2.into(), 5.into()));
        assert_eq!(b, BigRational::new(3.into(), 5.into()));
        let (o, b) = h_n_closed_forms(2).unwrap();
        assert_eq!(o, BigRational::new(2.into(), 7.into()));
        assert_eq!(b, BigRational::new(10.into(), 21.into()));
    }

    #[test]
    fn explicit_witnesses() {
        let g = h_game(1).unwrap();
        let c = check_witness(g.matrix(), &h1_nc_witness()).unwrap();
        assert!((c.objective - 0.6).abs() < 1e-10 && c.violation < 1e-10);
        for n in 1..=4 {
            let g = t_game(n).unwrap();
            let c = check_witness(g.matrix(), &t_os_witness(n)).unwrap();
            assert!((c.objective - 1.0).abs() < 1e-10, "{n} {c:?}");
            let Witness::Os { xr, xc, yr, yc } = t_os_witness(n) else { unreachable!() };
            for q in [vvm_products(&xr).0, vvm_products(&xc).1, vvm_products(&yr).0, vvm_products(&yc).1] {
                assert!(lmax(&q) <= 1.0 + 1e-10);
            }
            assert!((c.equality_residual - (1.0 - 1.0 / n as f64)).abs() < 1e-10, "{n} {c:?}");
        }
    }

    #[test]
    fn gram_bookkeeping() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let n = 2;
        let m = random_hermitian(&mut r, n * n);
        let g = crate::games::validate(&(m.scale(1.0 / crate::linalg::trace_norm(&m))), n).unwrap();
        let x = VectorValuedMatrix::new(n, (0..3).map(|_| gaussian_cmat(&mut r, n, n)).collect()).unwrap();
        let y = VectorValuedMatrix::new(n, (0..3).map(|_| gaussian_cmat(&mut r, n, n)).collect()).unwrap();
        let w = Witness::Nc { x: x.clone(), y: y.clone() };
        let inst = beta_nc_instance(&g);
        let blocks = witness_blocks(&inst, &w);
        let direct = (odot(&x, &y).unwrap() * g.matrix()).trace().re;
        assert!((inst.evaluate(&inst.objective, &blocks) - direct).abs() < 1e-10);
        let (xx, xtx) = vvm_products(&x);
        let (yy, yty) = vvm_products(&y);
        // slack = I − Q with Q in the compiled orientation
        let id = CMat::identity(n, n);
        assert!(crate::linalg::frob(&(&blocks[1] - (&id - &xx))) < 1e-10);
        assert!(crate::linalg::frob(&(&blocks[2] - (&id - xtx.transpose()))) < 1e-10);
        assert!(crate::linalg::frob(&(&blocks[3] - (&id - yy.transpose()))) < 1e-10);
        assert!(crate::linalg::frob(&(&blocks[4] - (&id - &yty))) < 1e-10);
        for c in &inst.constraints {
            assert!((inst.evaluate(&c.entries, &blocks) - c.rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn chsh_values() {
        let r = beta_sdp(&chsh(), 1e-7).unwrap();
        assert!((r.value - 0.5f64.sqrt()).abs() < 1e-5);
        let c = check_witness(from_classical(&chsh()).matrix(), &r.witness).unwrap();
        assert!((c.objective - r.value).abs() < 1e-6 && c.violation < 1e-6);
        let nc = beta_nc(&from_classical(&chsh()), 1e-7).unwrap();
        assert!((nc.value - r.value).abs() < 2e-4);
    }

    #[test]
    fn small_t_and_c() {
        let r = beta_nc(&t_game(2).unwrap(), 1e-7).unwrap();
        assert!((r.value - 0.5f64.sqrt()).abs() < 1e-4, "{}", r.value);
        let chk = check_witness(t_game(2).unwrap().matrix(), &r.witness).unwrap();
        assert!((chk.objective - r.value).abs() < 1e-6 && chk.violation < 1e-6, "{chk:?}");
        let o = beta_os(&t_game(1).unwrap(), 1e-7).unwrap();
        assert!((o.value - 1.0).abs() < 1e-4, "{}", o.value);
        let o = beta_os(&c_game(2).unwrap(), 1e-7).unwrap();
        assert!((o.value - 0.5).abs() < 1e-4, "{}", o.value);
    }
}
