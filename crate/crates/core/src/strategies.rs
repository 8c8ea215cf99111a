//! Strategies for the four resource classes, exact bias evaluation and the
//! explicit constructions for T_n, H_1 and rank-one games.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::games::{GameMatrix, RankOneGame};
use crate::linalg::{
    c64, frob, gaussian_cmat, herm_eig, herm_eig_unchecked, op_norm, permute_systems, permute_vector,
    polar_unitary, random_hermitian, random_unit_vector, sign_of_hermitian, svd, tensor, CMat, CVec, C64,
};

/// Limit on amplitudes (or operator entries) held densely.
pub const DENSE_LIMIT: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Unentangled { a: CMat, b: CMat },
    Complex { a: CMat, b: CMat },
    /// Shares Ψme_d; A and B act on message ⊗ C^d.
    MaxEntangled { d: usize, a: CMat, b: CMat },
    Entangled { da: usize, db: usize, a: CMat, b: CMat, psi: CVec },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyKind {
    Unentangled,
    Complex,
    MaxEntangled { d: usize },
    Entangled { da: usize, db: usize },
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Unentangled { .. } => StrategyKind::Unentangled,
            Strategy::Complex { .. } => StrategyKind::Complex,
            Strategy::MaxEntangled { d, .. } => StrategyKind::MaxEntangled { d: *d },
            Strategy::Entangled { da, db, .. } => StrategyKind::Entangled { da: *da, db: *db },
        }
    }

    pub fn operators(&self) -> (&CMat, &CMat) {
        match self {
            Strategy::Unentangled { a, b }
            | Strategy::Complex { a, b }
            | Strategy::MaxEntangled { a, b, .. }
            | Strategy::Entangled { a, b, .. } => (a, b),
        }
    }

    /// Private dimensions and the shared state as a dA × dB amplitude matrix.
    pub fn shared_state(&self) -> (usize, usize, CMat) {
        match self {
            Strategy::Unentangled { .. } | Strategy::Complex { .. } => (1, 1, CMat::identity(1, 1)),
            Strategy::MaxEntangled { d, .. } => {
                (*d, *d, CMat::identity(*d, *d).unscale((*d as f64).sqrt()))
            }
            Strategy::Entangled { da, db, psi, .. } => {
                (*da, *db, CMat::from_fn(*da, *db, |p, q| psi[p * db + q]))
            }
        }
    }

    pub fn check_shapes(&self, n: usize) -> Result<()> {
        let (da, db, _) = self.shared_state();
        let (a, b) = self.operators();
        if a.shape() != (n * da, n * da) || b.shape() != (n * db, n * db) {
            return Err(Error::DimensionMismatch(format!(
                "operators {:?} and {:?} do not act on C^{n} ⊗ C^{da} and C^{n} ⊗ C^{db}",
                a.shape(),
                b.shape()
            )));
        }
        if let Strategy::Entangled { psi, .. } = self {
            if psi.len() != da * db {
                return Err(Error::DimensionMismatch(format!("state has length {}, expected {}", psi.len(), da * db)));
            }
        }
        Ok(())
    }

    /// Checks shapes against the message dimension, norms and Hermiticity.
    pub fn check(&self, n: usize) -> Result<()> {
        self.check_shapes(n)?;
        let (a, b) = self.operators();
        if let Strategy::Entangled { psi, .. } = self {
            if (psi.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::PreconditionViolated(format!("state norm {} is not 1", psi.norm())));
            }
        }
        for op in [a, b] {
            let norm = op_norm(op);
            if norm > 1.0 + 1e-9 {
                return Err(Error::PreconditionViolated(format!("operator norm {norm} exceeds 1")));
            }
            if !matches!(self, Strategy::Complex { .. }) {
                crate::linalg::check_hermitian(op)?;
            }
        }
        Ok(())
    }

    /// Same strategy written as an entangled one (exact for every class but Complex,
    /// whose operators are kept as they are).
    pub fn to_entangled(&self) -> Strategy {
        let (da, db, psi) = self.shared_state();
        let (a, b) = self.operators();
        let psi = CVec::from_iterator(da * db, (0..da).flat_map(|p| (0..db).map(move |q| (p, q))).map(|(p, q)| psi[(p, q)]));
        Strategy::Entangled { da, db, a: a.clone(), b: b.clone(), psi }
    }
}

fn block(a: &CMat, d: usize, i: usize, ip: usize) -> CMat {
    a.view((i * d, ip * d), (d, d)).into_owned()
}

fn nonzeros(m: &CMat) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if z != C64::new(0.0, 0.0) {
                out.push((r, c, z));
            }
        }
    }
    out
}

/// Contraction engine for Tr((A⊗B)(M⊗|ψ><ψ|)) with ψ given as a dA × dB matrix.
pub(crate) struct BiasForm {
    pub n: usize,
    pub da: usize,
    pub db: usize,
    pub psi: CMat,
    entries: Vec<(usize, usize, C64)>,
}

impl BiasForm {
    pub fn new(m: &CMat, n: usize, psi: CMat) -> Self {
        let (da, db) = psi.shape();
        BiasForm { n, da, db, psi, entries: nonzeros(m) }
    }

    /// K_A with bias = Tr(A·K_A).
    pub fn effective_a(&self, b: &CMat) -> CMat {
        let (n, da, db) = (self.n, self.da, self.db);
        let psi_adj = self.psi.adjoint();
        let mut p = Vec::with_capacity(n * n);
        for j in 0..n {
            for jp in 0..n {
                p.push(&self.psi * block(b, db, j, jp).transpose() * &psi_adj);
            }
        }
        let mut k = CMat::zeros(n * da, n * da);
        for &(r, c, mu) in &self.entries {
            let (ip, jp) = (r / n, r % n);
            let (i, j) = (c / n, c % n);
            let mut view = k.view_mut((ip * da, i * da), (da, da));
            view += &p[j * n + jp] * mu;
        }
        k
    }

    /// K_B with bias = Tr(B·K_B).
    pub fn effective_b(&self, a: &CMat) -> CMat {
        let (n, da, db) = (self.n, self.da, self.db);
        let psi_t = self.psi.transpose();
        let psi_c = self.psi.map(|z| z.conj());
        let mut q = Vec::with_capacity(n * n);
        for i in 0..n {
            for ip in 0..n {
                q.push(&psi_t * block(a, da, i, ip).transpose() * &psi_c);
            }
        }
        let mut k = CMat::zeros(n * db, n * db);
        for &(r, c, mu) in &self.entries {
            let (ip, jp) = (r / n, r % n);
            let (i, j) = (c / n, c % n);
            let mut view = k.view_mut((jp * db, j * db), (db, db));
            view += &q[i * n + ip] * mu;
        }
        k
    }

    /// T on C^{dA} ⊗ C^{dB} with bias = <ψ|T|ψ>.
    pub fn state_operator(&self, a: &CMat, b: &CMat) -> CMat {
        let (n, da, db) = (self.n, self.da, self.db);
        let mut t = CMat::zeros(da * db, da * db);
        for &(r, c, mu) in &self.entries {
            let (ip, jp) = (r / n, r % n);
            let (i, j) = (c / n, c % n);
            t += tensor(&block(a, da, i, ip), &block(b, db, j, jp)) * mu;
        }
        t
    }

    pub fn value(&self, a: &CMat, b: &CMat) -> C64 {
        let k = self.effective_a(b);
        (a * k).trace()
    }
}

/// Bias of `s` in `g`. Hermitian classes return the real value (asserting the
/// imaginary residue is below 1e-9); Complex strategies return the modulus.
pub fn bias(g: &GameMatrix, s: &Strategy) -> Result<f64> {
    s.check_shapes(g.n())?;
    let (_, _, psi) = s.shared_state();
    let (a, b) = s.operators();
    let form = BiasForm::new(g.matrix(), g.n(), psi);
    let v = form.value(a, b);
    Ok(finish(s, v))
}

fn finish(s: &Strategy, v: C64) -> f64 {
    if matches!(s, Strategy::Complex { .. }) {
        v.norm()
    } else {
        assert!(v.im.abs() <= 1e-9 * v.norm().max(1.0), "Hermitian strategy produced complex bias {v}");
        v.re
    }
}

/// Reference evaluator: forms (A⊗B) and M⊗|ψ><ψ| on the full permuted space.
pub fn bias_dense(g: &GameMatrix, s: &Strategy) -> Result<f64> {
    let n = g.n();
    let (da, db, psi) = s.shared_state();
    let total = (n * n * da * db) as u128;
    if total * total > DENSE_LIMIT / 4 {
        return Err(Error::TooLarge { amplitudes: total * total, limit: DENSE_LIMIT / 4 });
    }
    let psi_vec = CVec::from_iterator(da * db, (0..da).flat_map(|p| (0..db).map(move |q| (p, q))).map(|(p, q)| psi[(p, q)]));
    let rho = &psi_vec * psi_vec.adjoint();
    let w = permute_systems(&tensor(g.matrix(), &rho), &[n, n, da, db], &[0, 2, 1, 3])?;
    let (a, b) = s.operators();
    if a.nrows() != n * da || b.nrows() != n * db {
        return Err(Error::DimensionMismatch("operator shapes".into()));
    }
    let ab = tensor(a, b);
    // Tr(XY) = Σ X_ij Y_ji
    let v = ab.iter().zip(w.transpose().iter()).map(|(x, y)| x * y).sum();
    Ok(finish(s, v))
}

/// A = B = |π0><π0| − |π1><π1|, π0,1 = |0>/√2 ± Σ_i |i>/√(2n).
pub fn t_unentangled_strategy(n: usize) -> Result<Strategy> {
    if n == 0 {
        return Err(Error::BadArgs("n must be >= 1".into()));
    }
    let d = n + 1;
    let mut p0 = CVec::zeros(d);
    let mut p1 = CVec::zeros(d);
    let s = 0.5f64.sqrt();
    let t = 1.0 / (2.0 * n as f64).sqrt();
    p0[0] = c64(s, 0.0);
    p1[0] = c64(s, 0.0);
    for i in 1..d {
        p0[i] = c64(t, 0.0);
        p1[i] = c64(-t, 0.0);
    }
    let q = &p0 * p0.adjoint() - &p1 * p1.adjoint();
    Ok(Strategy::Unentangled { a: q.clone(), b: q })
}

/// A = iC₁, B = −iC₁.
pub fn h1_unentangled_strategy() -> Strategy {
    let c1 = &crate::games::h_operators(1).expect("n=1")[0];
    Strategy::Complex { a: c1 * c64(0.0, 1.0), b: c1 * c64(0.0, -1.0) }
}

/// Both players measure {P0, P1} with P0 onto the antisymmetric subspace plus Ψme_3.
pub fn h1_me_strategy() -> Strategy {
    let p0 = h1_me_projector();
    let a = p0.scale(2.0) - CMat::identity(9, 9);
    Strategy::MaxEntangled { d: 3, a: a.clone(), b: a }
}

pub fn h1_me_projector() -> CMat {
    let ket = |i: usize, j: usize| {
        let mut v = CVec::zeros(9);
        v[3 * i + j] = c64(1.0, 0.0);
        v
    };
    let vs = [
        ket(0, 1) - ket(1, 0),
        ket(0, 2) - ket(2, 0),
        ket(1, 2) - ket(2, 1),
        ket(0, 0) + ket(1, 1) + ket(2, 2),
    ];
    let mut p = CMat::zeros(9, 9);
    for v in &vs {
        p += (v * v.adjoint()).unscale(v.norm_squared());
    }
    p
}

fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbezzlementSpec {
    pub n: usize,
    pub d: usize,
}

/// Γ_d = D^{-1/2} Σ_{j=1..d} ψ^{⊗j} ⊗ φ^{⊗(d−j)}, reordered to (A copies)(B copies).
pub fn embezzlement_state(d: usize, psi: &CVec, phi: &CVec) -> Result<CVec> {
    if d == 0 {
        return Err(Error::BadArgs("d must be >= 1".into()));
    }
    let mm = psi.len();
    if phi.len() != mm {
        return Err(Error::DimensionMismatch("psi and phi must have equal length".into()));
    }
    let m = (mm as f64).sqrt().round() as usize;
    if m * m != mm {
        return Err(Error::DimensionMismatch("states must live on C^m ⊗ C^m".into()));
    }
    let amplitudes = (mm as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if amplitudes > DENSE_LIMIT {
        return Err(Error::TooLarge { amplitudes, limit: DENSE_LIMIT });
    }
    let mut sum = CVec::zeros(mm.pow(d as u32));
    for j in 1..=d {
        let mut term = CVec::from_element(1, c64(1.0, 0.0));
        for k in 0..d {
            term = kron_vec(&term, if k < j { psi } else { phi });
        }
        sum += term;
    }
    let norm = sum.norm();
    if norm == 0.0 {
        return Err(Error::Numeric("embezzlement sum vanished".into()));
    }
    let dims = vec![m; 2 * d];
    let perm: Vec<usize> = (0..d).map(|k| 2 * k).chain((0..d).map(|k| 2 * k + 1)).collect();
    permute_vector(&sum.unscale(norm), &dims, &perm)
}

/// Cyclic shift of k copies of C^h: |x0, x1, …, x_{k-1}> ↦ |x1, …, x_{k-1}, x0>.
fn cyclic_shift(h: usize, k: usize) -> CMat {
    let dim = h.pow(k as u32);
    let mut u = CMat::zeros(dim, dim);
    for x in 0..dim {
        let top = x / h.pow(k as u32 - 1);
        let rest = x % h.pow(k as u32 - 1);
        let y = rest * h + top;
        u[(y, x)] = c64(1.0, 0.0);
    }
    u
}

fn guard_operator(dim: usize) -> Result<()> {
    let entries = (dim as u128) * (dim as u128);
    if entries > DENSE_LIMIT {
        return Err(Error::TooLarge { amplitudes: entries, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// Embezzlement strategy for T_n: controlled cyclic shift of the message into d
/// embezzling copies, then the T₁ observable on the relabeled pair. Bias 1 − 1/d.
pub fn t_entangled_strategy(n: usize, d: usize) -> Result<Strategy> {
    if n == 0 || d == 0 {
        return Err(Error::BadArgs("n and d must be >= 1".into()));
    }
    let lv = n + 1;
    // Copy level c ∈ 0..n−1 carries Ψme_n, level n is the product level.
    let mut phi = CVec::zeros(lv * lv);
    for c in 0..n {
        phi[c * lv + c] = c64(1.0 / (n as f64).sqrt(), 0.0);
    }
    let mut prod = CVec::zeros(lv * lv);
    prod[n * lv + n] = c64(1.0, 0.0);
    let gamma = embezzlement_state(d, &prod, &phi)?;
    let copies = lv.pow(d as u32);
    let priv_dim = 2 * copies;
    guard_operator(lv * priv_dim)?;

    // Extended message level e ∈ 0..=n+1 on (message, ancilla); U shifts for e ≥ 1:
    // (e, c1..cd) ↦ (c1+1, c2..cd, e−1).
    let ext = lv + 1;
    let shift = |e: usize, cs: usize| -> (usize, usize) {
        if e == 0 {
            return (0, cs);
        }
        let head = cs / lv.pow(d as u32 - 1);
        let tail = cs % lv.pow(d as u32 - 1);
        (head + 1, tail * lv + (e - 1))
    };
    let ext_dim = ext * copies;
    let mut inv = vec![0usize; ext_dim];
    for e in 0..ext {
        for cs in 0..copies {
            let (e2, c2) = shift(e, cs);
            inv[e2 * copies + c2] = e * copies + cs;
        }
    }
    // A_ext = U†(Q'⊗I)U with Q' = |0><n+1| + |n+1><0|.
    let mut pairs = Vec::with_capacity(copies);
    for cs in 0..copies {
        let x = inv[cs];
        let y = inv[(ext - 1) * copies + cs];
        pairs.push((x, y));
    }
    // (message m, ancilla a) → extended level.
    let to_local = |idx: usize| -> usize {
        let (e, cs) = (idx / copies, idx % copies);
        let (m, a) = if e <= n { (e, 0) } else { (0, 1) };
        m * priv_dim + a * copies + cs
    };
    let dim = lv * priv_dim;
    let mut a = CMat::zeros(dim, dim);
    for (x, y) in pairs {
        let (lx, ly) = (to_local(x), to_local(y));
        a[(lx, ly)] = c64(1.0, 0.0);
        a[(ly, lx)] = c64(1.0, 0.0);
    }
    // Shared state |0>_ancA |0>_ancB ⊗ Γ_d on (ancA, copiesA, ancB, copiesB).
    let mut psi = CVec::zeros(priv_dim * priv_dim);
    for p in 0..copies {
        for q in 0..copies {
            psi[p * priv_dim + q] = gamma[p * copies + q];
        }
    }
    Ok(Strategy::Entangled { da: priv_dim, db: priv_dim, a: a.clone(), b: a, psi })
}

/// |Tr((U⊗V)(M̂ ⊗ |ψ><φ|))|² for a rank-one game; U acts on C^n ⊗ H_A.
pub fn rank_one_value(g: &RankOneGame, u: &CMat, v: &CMat, psi: &CVec, phi: &CVec) -> Result<f64> {
    Ok(rank_one_amplitude(g, u, v, psi, phi)?.norm_sqr())
}

fn rank_one_amplitude(g: &RankOneGame, u: &CMat, v: &CMat, psi: &CVec, phi: &CVec) -> Result<C64> {
    let n = g.n;
    let ha = u.nrows() / n;
    let hb = v.nrows() / n;
    if u.nrows() != n * ha || v.nrows() != n * hb || psi.len() != ha * hb || phi.len() != ha * hb {
        return Err(Error::DimensionMismatch("rank-one strategy shapes".into()));
    }
    let vd = g.v_dim;
    let mut amp = c64(0.0, 0.0);
    for k in 0..vd {
        let eta_k = CVec::from_fn(n * n, |r, _| g.eta[r * vd + k]);
        let gamma_k = CVec::from_fn(n * n, |r, _| g.gamma[r * vd + k]);
        let dims = [n, n, ha, hb];
        let perm = [0, 2, 1, 3];
        let start = permute_vector(&kron_vec(&eta_k, psi), &dims, &perm)?;
        let end = permute_vector(&kron_vec(&gamma_k, phi), &dims, &perm)?;
        let moved = tensor(u, v) * start;
        amp += end.dotc(&moved);
    }
    Ok(amp)
}

/// Strategy for rank_one_to_xor(g) built from a rank-one strategy (U, V, ψ, φ):
/// players share φ ⊗ Γ_d, cyclically shift d+1 copies and apply U (resp. V)
/// controlled by the flag qubit.
pub fn rank_one_lifted_strategy(
    g: &RankOneGame,
    u: &CMat,
    v: &CMat,
    psi: &CVec,
    phi: &CVec,
    d: usize,
) -> Result<Strategy> {
    let n = g.n;
    let h = u.nrows() / n.max(1);
    if u.shape() != (n * h, n * h) || v.shape() != (n * h, n * h) {
        return Err(Error::DimensionMismatch("U and V must act on C^n ⊗ C^h with equal h".into()));
    }
    if psi.len() != h * h || phi.len() != h * h {
        return Err(Error::DimensionMismatch("states must live on C^h ⊗ C^h".into()));
    }
    let gamma = embezzlement_state(d, psi, phi)?;
    let priv_dim = h.pow(d as u32 + 1);
    guard_operator(2 * n * priv_dim)?;
    // Rotate U so the rank-one amplitude is real and non-negative.
    let amp = rank_one_amplitude(g, u, v, psi, phi)?;
    let phase = if amp.norm() > 0.0 { (amp / amp.norm()).conj() } else { c64(1.0, 0.0) };
    let build = |op: &CMat| -> CMat {
        // W = (op ⊗ I_{copies 1..d}) · (I_msg ⊗ shift) on msg ⊗ copy0 ⊗ copies.
        let rest = h.pow(d as u32);
        let w = tensor(op, &CMat::identity(rest, rest)) * tensor(&CMat::identity(n, n), &cyclic_shift(h, d + 1));
        let mut flip = CMat::zeros(2, 2);
        flip[(1, 0)] = c64(1.0, 0.0);
        let lower = tensor(&flip, &w);
        &lower + lower.adjoint()
    };
    let a = build(&(u * phase));
    let b = build(v);
    // State φ ⊗ Γ_d on (copy0 A, copy0 B, copies A, copies B) → (privA, privB).
    let rest = h.pow(d as u32);
    let joint = kron_vec(phi, &gamma);
    let psi_out = permute_vector(&joint, &[h, h, rest, rest], &[0, 2, 1, 3])?;
    Ok(Strategy::Entangled { da: priv_dim, db: priv_dim, a, b, psi: psi_out })
}

/// sqrt(1 − min{1/(4e²), (log₂ n)² / (16 log₂²(3d))}), clamped to [0, 1].
pub fn max_bias_upper_bound_tn(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadArgs("the bound needs n >= 2".into()));
    }
    if d == 0 {
        return Err(Error::BadArgs("d must be >= 1".into()));
    }
    let s = (n as f64).log2();
    let l = (3.0 * d as f64).log2();
    let e = std::f64::consts::E;
    let gap = (1.0 / (4.0 * e * e)).min(s * s / (16.0 * l * l));
    Ok((1.0 - gap).clamp(0.0, 1.0).sqrt())
}

fn dilate(op: &CMat) -> CMat {
    // [[A, S], [S, −A]] with S = sqrt(I − A²), ancilla as the last factor.
    let dim = op.nrows();
    let eig = herm_eig_unchecked((op + op.adjoint()).scale(0.5));
    let mut scaled = eig.vectors.clone();
    for (c, &l) in eig.values.iter().enumerate() {
        let s = (1.0 - l * l).max(0.0).sqrt();
        scaled.column_mut(c).scale_mut(s);
    }
    let s = &scaled * eig.vectors.adjoint();
    let mut out = CMat::zeros(2 * dim, 2 * dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(2 * r, 2 * c)] = op[(r, c)];
            out[(2 * r + 1, 2 * c + 1)] = -op[(r, c)];
            out[(2 * r, 2 * c + 1)] = s[(r, c)];
            out[(2 * r + 1, 2 * c)] = s[(r, c)];
        }
    }
    out
}

fn compress(op: &CMat, n: usize, iso: &CMat) -> CMat {
    let full = tensor(&CMat::identity(n, n), iso);
    full.adjoint() * op * full
}

/// Swap-symmetric strategy with A = B and a permutation-invariant state.
///
/// Steps: restrict to the Schmidt support; if either operator is not an
/// observable, dilate both with an ancilla qubit; then let a flag qubit select
/// between the two roles.
pub fn symmetrize(g: &GameMatrix, s: &Strategy) -> Result<Strategy> {
    let n = g.n();
    s.check(n)?;
    if matches!(s, Strategy::Complex { .. }) {
        return Err(Error::BadArgs("symmetrize needs a Hermitian strategy".into()));
    }
    if !g.is_swap_symmetric(1e-10) {
        return Err(Error::NotSwapSymmetric);
    }
    let (_, _, psi) = s.shared_state();
    let (a, b) = s.operators();
    let dec = svd(&psi)?;
    let top = dec.s.first().copied().unwrap_or(0.0);
    let r = dec.s.iter().filter(|&&x| x > 1e-12 * top).count();
    let iso_a = dec.u.columns(0, r).into_owned();
    let iso_b = dec.v.columns(0, r).map(|z| z.conj());
    let mut a2 = compress(a, n, &iso_a);
    let mut b2 = compress(b, n, &iso_b);
    let mut k = r;
    let mut core = CMat::from_fn(r, r, |p, q| if p == q { c64(dec.s[p], 0.0) } else { c64(0.0, 0.0) });
    let is_obs = |x: &CMat| frob(&(x * x - CMat::identity(x.nrows(), x.nrows()))) <= 1e-9;
    if !is_obs(&a2) || !is_obs(&b2) {
        a2 = dilate(&a2);
        b2 = dilate(&b2);
        let mut padded = CMat::zeros(2 * r, 2 * r);
        for p in 0..r {
            for q in 0..r {
                padded[(2 * p, 2 * q)] = core[(p, q)];
            }
        }
        core = padded;
        k = 2 * r;
    }
    // Flag qubit precedes the private register.
    let dim = n * 2 * k;
    let mut op = CMat::zeros(dim, dim);
    for m in 0..n {
        for mp in 0..n {
            for p in 0..k {
                for q in 0..k {
                    op[(m * 2 * k + p, mp * 2 * k + q)] = a2[(m * k + p, mp * k + q)];
                    op[(m * 2 * k + k + p, mp * 2 * k + k + q)] = b2[(m * k + p, mp * k + q)];
                }
            }
        }
    }
    let op = (&op + op.adjoint()).scale(0.5);
    let w = 0.5f64.sqrt();
    let pd = 2 * k;
    let mut state = CVec::zeros(pd * pd);
    for p in 0..k {
        for q in 0..k {
            state[p * pd + (k + q)] += core[(p, q)] * w;
            state[(k + p) * pd + q] += core[(q, p)] * w;
        }
    }
    Ok(Strategy::Entangled { da: pd, db: pd, a: op.clone(), b: op, psi: state })
}

fn random_observable(rng: &mut ChaCha8Rng, dim: usize) -> CMat {
    sign_of_hermitian(&random_hermitian(rng, dim)).expect("Hermitian by construction")
}

/// Random observables (sign of a Gaussian Hermitian matrix), random unitaries for
/// the complex class and a random unit state; deterministic in `seed`.
pub fn random_strategy(kind: StrategyKind, g: &GameMatrix, seed: u64) -> Strategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    match kind {
        StrategyKind::Unentangled => {
            Strategy::Unentangled { a: random_observable(&mut rng, n), b: random_observable(&mut rng, n) }
        }
        StrategyKind::Complex => {
            let a = polar_unitary(&gaussian_cmat(&mut rng, n, n)).expect("square");
            let b = polar_unitary(&gaussian_cmat(&mut rng, n, n)).expect("square");
            Strategy::Complex { a, b }
        }
        StrategyKind::MaxEntangled { d } => Strategy::MaxEntangled {
            d,
            a: random_observable(&mut rng, n * d),
            b: random_observable(&mut rng, n * d),
        },
        StrategyKind::Entangled { da, db } => Strategy::Entangled {
            da,
            db,
            a: random_observable(&mut rng, n * da),
            b: random_observable(&mut rng, n * db),
            psi: random_unit_vector(&mut rng, da * db),
        },
    }
}

/// Spectrum of a Hermitian operator, descending (test convenience).
pub fn spectrum(h: &CMat) -> Result<Vec<f64>> {
    Ok(herm_eig(h)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{h_game, t_game, t_rank_one, rank_one_to_xor};

    #[test]
    fn zero_operators_give_zero() {
        let g = h_game(1).unwrap();
        let s = Strategy::Unentangled { a: CMat::zeros(3, 3), b: CMat::zeros(3, 3) };
        assert_eq!(bias(&g, &s).unwrap(), 0.0);
    }

    #[test]
    fn t_unentangled_bias() {
        for n in 1..=6 {
            let g = t_game(n).unwrap();
            let s = t_unentangled_strategy(n).unwrap();
            let expect = 1.0 / (n as f64).sqrt();
            assert!((bias(&g, &s).unwrap() - expect).abs() < 1e-12);
            assert!((bias_dense(&g, &s).unwrap() - expect).abs() < 1e-12);
            assert!((op_norm(s.operators().0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h1_strategies() {
        let g = h_game(1).unwrap();
        let s = h1_unentangled_strategy();
        assert!((bias(&g, &s).unwrap() - 0.4).abs() < 1e-12);
        let a = s.operators().0;
        assert!(op_norm(&(a.adjoint() * a)) <= 1.0 + 1e-12);
        let me = h1_me_strategy();
        assert!((bias(&g, &me).unwrap() - 5.0 / 9.0).abs() < 1e-12);
        assert!((bias_dense(&g, &me).unwrap() - 5.0 / 9.0).abs() < 1e-12);
        let a = me.operators().0;
        assert!(frob(&(a * a - CMat::identity(9, 9))) < 1e-12);
        let rank = herm_eig(&h1_me_projector()).unwrap().values.iter().filter(|&&l| l > 0.5).count();
        assert_eq!(rank, 4);
    }

    #[test]
    fn embezzlement_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_unit_vector(&mut rng, 4);
        let phi = random_unit_vector(&mut rng, 4);
        assert!((embezzlement_state(1, &psi, &phi).unwrap() - &psi).norm() < 1e-14);
        let g = embezzlement_state(3, &psi, &phi).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        let mut e0 = CVec::zeros(4);
        e0[0] = c64(1.0, 0.0);
        let mut e3 = CVec::zeros(4);
        e3[3] = c64(1.0, 0.0);
        // orthogonal ψ, φ: each basis term carries amplitude 1/√d
        let g = embezzlement_state(3, &e0, &e3).unwrap();
        let nz: Vec<f64> = g.iter().filter(|z| z.norm() > 1e-14).map(|z| z.norm()).collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.iter().all(|x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-14));
        let big = CVec::zeros(64);
        assert!(matches!(embezzlement_state(5, &big, &big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn t_entangled_small() {
        let g = t_game(2).unwrap();
        let s = t_entangled_strategy(2, 2).unwrap();
        s.check(3).unwrap();
        assert!((bias(&g, &s).unwrap() - 0.5).abs() < 1e-10);
        let (_, _, psi) = s.shared_state();
        let (a, b) = s.operators();
        let t = BiasForm::new(g.matrix(), 3, psi.clone()).state_operator(a, b);
        let v = CVec::from_iterator(psi.len(), psi.transpose().iter().copied());
        assert!(((v.adjoint() * t * &v)[(0, 0)].re - 0.5).abs() < 1e-10);
        let g1 = t_game(1).unwrap();
        let s1 = t_entangled_strategy(1, 2).unwrap();
        assert!((bias_dense(&g1, &s1).unwrap() - 0.5).abs() < 1e-10);
        assert!((bias(&g1, &s1).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn lifted_strategy_on_t2() {
        let rg = t_rank_one(2).unwrap();
        let h = 3;
        let n = 3;
        // swap message and private register: |x>|y> ↦ |y>|x>
        let swap = CMat::from_fn(n * h, n * h, |r, c| {
            let (x, y) = (c / h, c % h);
            if r == y * h + x { c64(1.0, 0.0) } else { c64(0.0, 0.0) }
        });
        let psi = rg.gamma.clone();
        let phi = rg.eta.clone();
        let value = rank_one_value(&rg, &swap, &swap, &psi, &phi).unwrap();
        assert!((value - 1.0).abs() < 1e-12);
        let game = rank_one_to_xor(&rg);
        for d in [1, 2] {
            let s = rank_one_lifted_strategy(&rg, &swap, &swap, &psi, &phi, d).unwrap();
            let b = bias(&game, &s).unwrap();
            assert!(b >= (1.0 - 2.0 / d as f64) * value.sqrt() - 1e-8);
            assert!((b - (1.0 - 1.0 / d as f64)).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_arithmetic() {
        let e = std::f64::consts::E;
        let expect = (1.0 - (1.0 / (4.0 * e * e)).min(1.0 / (16.0 * 3f64.log2().powi(2)))).sqrt();
        assert!((max_bias_upper_bound_tn(2, 1).unwrap() - expect).abs() < 1e-15);
        assert!(max_bias_upper_bound_tn(1, 1).is_err());
        let mut prev = 0.0;
        for d in 1..50 {
            let b = max_bias_upper_bound_tn(5, d).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn symmetrize_preserves_bias() {
        let g = h_game(1).unwrap();
        let s = random_strategy(StrategyKind::Entangled { da: 2, db: 2 }, &g, 11);
        let before = bias(&g, &s).unwrap();
        let sym = symmetrize(&g, &s).unwrap();
        let after = bias(&g, &sym).unwrap();
        assert!((before - after).abs() < 1e-8);
        let a = sym.operators().0;
        assert!(frob(&(a * a - CMat::identity(a.nrows(), a.nrows()))) < 1e-8);
        let lopsided = nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25]);
        let skew = crate::games::from_classical(&crate::games::ClassicalGame::new(lopsided).unwrap());
        assert!(matches!(symmetrize(&skew, &s), Err(Error::NotSwapSymmetric)));
    }

    #[test]
    fn random_strategy_is_seeded() {
        let g = h_game(1).unwrap();
        let k = StrategyKind::MaxEntangled { d: 2 };
        assert_eq!(random_strategy(k, &g, 5), random_strategy(k, &g, 5));
        assert_ne!(random_strategy(k, &g, 5), random_strategy(k, &g, 6));
    }
}
