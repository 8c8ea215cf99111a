//! Quantum XOR game matrices: validation, the named families, classical
//! embedding, tensor products and protocol/rank-one conversions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, check_hermitian, herm_eig, is_real, partial_trace, permutation_sign, permute_systems, svd,
    tensor, trace_norm, CMat, CVec, Factor, C64, RANK_TOL,
};

/// A Hermitian operator on C^n ⊗ C^n with trace norm at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct GameMatrix {
    n: usize,
    m: CMat,
}

impl GameMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(&self.m)
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.m, 1e-15)
    }

    /// The classical game this matrix embeds, when M is real and diagonal.
    pub fn as_classical(&self) -> Option<ClassicalGame> {
        let n = self.n;
        let dim = n * n;
        for r in 0..dim {
            for c in 0..dim {
                let z = self.m[(r, c)];
                if (r != c && z.norm() > 1e-14) || z.im.abs() > 1e-14 {
                    return None;
                }
            }
        }
        let r = DMatrix::from_fn(n, n, |s, t| self.m[(s * n + t, s * n + t)].re);
        Some(ClassicalGame { n, r })
    }

    /// M ↦ F·M·F with F swapping the two message registers.
    pub fn swapped(&self) -> GameMatrix {
        let m = permute_systems(&self.m, &[self.n, self.n], &[1, 0]).expect("square game");
        GameMatrix { n: self.n, m }
    }

    pub fn is_swap_symmetric(&self, tol: f64) -> bool {
        crate::linalg::frob(&(self.swapped().m - &self.m)) <= tol
    }
}

/// Validates and symmetrizes an n²×n² matrix.
pub fn validate(m: &CMat, n: usize) -> Result<GameMatrix> {
    if m.nrows() != n * n || m.ncols() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "game matrix must be {0}x{0} for n={n}, got {1}x{2}",
            n * n,
            m.nrows(),
            m.ncols()
        )));
    }
    let h = check_hermitian(m)?;
    let norm = trace_norm(&h);
    if norm > 1.0 + 1e-8 {
        return Err(Error::TraceNormExceeded { norm });
    }
    Ok(GameMatrix { n, m: h })
}

/// Classical XOR game: coefficient R[s,t] = (−1)^{f(s,t)} π(s,t).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalGame {
    pub n: usize,
    pub r: DMatrix<f64>,
}

impl ClassicalGame {
    pub fn new(r: DMatrix<f64>) -> Result<Self> {
        if r.nrows() != r.ncols() {
            return Err(Error::NotSquare { rows: r.nrows(), cols: r.ncols() });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        let total: f64 = r.iter().map(|x| x.abs()).sum();
        if total > 1.0 + 1e-10 {
            return Err(Error::TraceNormExceeded { norm: total });
        }
        Ok(ClassicalGame { n: r.nrows(), r })
    }

    pub fn l1(&self) -> f64 {
        self.r.iter().map(|x| x.abs()).sum()
    }
}

pub fn chsh() -> ClassicalGame {
    let r = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.25, -0.25]);
    ClassicalGame { n: 2, r }
}

pub fn from_classical(g: &ClassicalGame) -> GameMatrix {
    let n = g.n;
    let mut m = CMat::zeros(n * n, n * n);
    for s in 0..n {
        for t in 0..n {
            m[(s * n + t, s * n + t)] = c64(g.r[(s, t)], 0.0);
        }
    }
    GameMatrix { n, m }
}

/// The one-dimensional game with M = [1].
pub fn trivial_game() -> GameMatrix {
    GameMatrix { n: 1, m: CMat::identity(1, 1) }
}

/// Distinguishing (|00> ± Σ_i |ii>/√n)/√2; local dimension n+1.
pub fn t_game(n: usize) -> Result<GameMatrix> {
    if n == 0 {
        return Err(Error::BadArgs("t_game needs n >= 1".into()));
    }
    let d = n + 1;
    let mut m = CMat::zeros(d * d, d * d);
    let w = 1.0 / (2.0 * (n as f64).sqrt());
    for i in 1..=n {
        let ii = i * d + i;
        m[(0, ii)] = c64(w, 0.0);
        m[(ii, 0)] = c64(w, 0.0);
    }
    Ok(GameMatrix { n: d, m })
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Sorted k-subsets of {1..m} in lexicographic order.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..=m {
            if m - x + 1 < k - cur.len() {
                break;
            }
            cur.push(x);
            rec(x + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// The operators C_1..C_{2n+1} on the span of n-subsets of [2n+1].
pub fn h_operators(n: usize) -> Result<Vec<CMat>> {
    if n == 0 {
        return Err(Error::BadArgs("h_game needs n >= 1".into()));
    }
    let m = 2 * n + 1;
    let basis = subsets(m, n);
    let index = |s: &[usize]| basis.binary_search_by(|b| b.as_slice().cmp(s)).expect("subset in basis");
    let dim = basis.len();
    let mut ops = Vec::with_capacity(m);
    for i in 1..=m {
        let mut c = CMat::zeros(dim, dim);
        for (col, s) in basis.iter().enumerate() {
            if s.contains(&i) {
                continue;
            }
            let comp: Vec<usize> = (1..=m).filter(|x| *x != i && !s.contains(x)).collect();
            let mut perm = s.clone();
            perm.push(i);
            perm.extend_from_slice(&comp);
            let eps = permutation_sign(&perm)?;
            c[(index(&comp), col)] = c64(eps as f64, 0.0);
        }
        ops.push(c);
    }
    Ok(ops)
}

/// M(H_n) = C(4n+1, 2n)^{-1} Σ_i C_i ⊗ C_i.
pub fn h_game(n: usize) -> Result<GameMatrix> {
    let ops = h_operators(n)?;
    let dim = ops[0].nrows();
    let mut m = CMat::zeros(dim * dim, dim * dim);
    for c in &ops {
        m += tensor(c, c);
    }
    let norm = binomial(4 * n as u64 + 1, 2 * n as u64) as f64;
    Ok(GameMatrix { n: dim, m: m.unscale(norm) })
}

/// Distinguishing (|0,k> ± |k,0>)/√2 for uniform k in 1..n; local dimension n+1.
pub fn c_game(n: usize) -> Result<GameMatrix> {
    if n == 0 {
        return Err(Error::BadArgs("c_game needs n >= 1".into()));
    }
    let d = n + 1;
    let mut m = CMat::zeros(d * d, d * d);
    let w = c64(1.0 / (2.0 * n as f64), 0.0);
    for k in 1..=n {
        let (a, b) = (k, k * d);
        m[(a, b)] += w;
        m[(b, a)] += w;
    }
    Ok(GameMatrix { n: d, m })
}

/// M₁⊗M₂ with registers ordered (A₁A₂)(B₁B₂).
pub fn tensor_games(g1: &GameMatrix, g2: &GameMatrix) -> GameMatrix {
    let raw = tensor(&g1.m, &g2.m);
    let m = permute_systems(&raw, &[g1.n, g1.n, g2.n, g2.n], &[0, 2, 1, 3]).expect("consistent dims");
    GameMatrix { n: g1.n * g2.n, m: (&m + m.adjoint()).scale(0.5) }
}

#[derive(Clone, Debug)]
pub struct RefereeOutcome {
    pub p: f64,
    pub parity: u8,
    pub phi: CVec,
}

#[derive(Clone, Debug)]
pub struct RefereeProtocol {
    pub outcomes: Vec<RefereeOutcome>,
    pub reject_probability: f64,
}

impl RefereeProtocol {
    pub fn reconstruct(&self, dim: usize) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        for o in &self.outcomes {
            let s = if o.parity == 0 { o.p } else { -o.p };
            m += (&o.phi * o.phi.adjoint()).scale(s);
        }
        m
    }
}

pub fn to_referee_protocol(g: &GameMatrix) -> RefereeProtocol {
    let eig = herm_eig(&g.m).expect("validated game is Hermitian");
    let mut outcomes = Vec::new();
    for (k, &l) in eig.values.iter().enumerate() {
        if l.abs() <= 1e-12 {
            continue;
        }
        outcomes.push(RefereeOutcome {
            p: l.abs(),
            parity: if l > 0.0 { 0 } else { 1 },
            phi: eig.vectors.column(k).into_owned(),
        });
    }
    let total: f64 = outcomes.iter().map(|o| o.p).sum();
    RefereeProtocol { outcomes, reject_probability: 1.0 - total }
}

/// Label of the local basis used by [`to_product_state_protocol`].
pub const PRODUCT_BASIS: &str = "identity+generalized-gell-mann, each scaled to trace norm 1";

#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub weight: f64,
    pub sign: i8,
    pub left: CMat,
    pub right: CMat,
    pub left_label: String,
    pub right_label: String,
}

#[derive(Clone, Debug)]
pub struct ProductStateProtocol {
    pub basis: &'static str,
    pub terms: Vec<ProductTerm>,
}

impl ProductStateProtocol {
    pub fn reconstruct(&self) -> Option<CMat> {
        let mut it = self.terms.iter();
        let first = it.next()?;
        let mut m = tensor(&first.left, &first.right).scale(first.weight * first.sign as f64);
        for t in it {
            m += tensor(&t.left, &t.right).scale(t.weight * t.sign as f64);
        }
        Some(m)
    }
}

/// Identity and generalized Gell-Mann matrices (unnormalized), with labels.
fn gell_mann_basis(n: usize) -> Vec<(String, CMat)> {
    let mut out = vec![("I".to_string(), CMat::identity(n, n))];
    for j in 0..n {
        for k in (j + 1)..n {
            let mut s = CMat::zeros(n, n);
            s[(j, k)] = c64(1.0, 0.0);
            s[(k, j)] = c64(1.0, 0.0);
            out.push((format!("S{j}{k}"), s));
            let mut a = CMat::zeros(n, n);
            a[(j, k)] = c64(0.0, -1.0);
            a[(k, j)] = c64(0.0, 1.0);
            out.push((format!("A{j}{k}"), a));
        }
    }
    for l in 1..n {
        let w = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = CMat::zeros(n, n);
        for j in 0..l {
            d[(j, j)] = c64(w, 0.0);
        }
        d[(l, l)] = c64(-w * l as f64, 0.0);
        out.push((format!("D{l}"), d));
    }
    out
}

/// Expansion of M in products of trace-norm-one Hermitian basis elements.
pub fn to_product_state_protocol(g: &GameMatrix) -> ProductStateProtocol {
    let n = g.n;
    let basis: Vec<(String, CMat, f64)> = gell_mann_basis(n)
        .into_iter()
        .map(|(l, b)| {
            let tn = trace_norm(&b);
            let hs = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
            (l, b, tn / hs)
        })
        .collect();
    // N_j[a,a'] = Σ_{b,b'} M[(a,b),(a',b')] B_j[b',b]
    let mut terms = Vec::new();
    for (lj, bj, fj) in &basis {
        let nj = CMat::from_fn(n, n, |a, ap| {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..n {
                for bp in 0..n {
                    let x = bj[(bp, b)];
                    if x != C64::new(0.0, 0.0) {
                        acc += g.m[(a * n + b, ap * n + bp)] * x;
                    }
                }
            }
            acc
        });
        for (li, bi, fi) in &basis {
            let t: C64 = (0..n)
                .flat_map(|a| (0..n).map(move |ap| (a, ap)))
                .map(|(a, ap)| nj[(a, ap)] * bi[(ap, a)])
                .sum();
            let coeff = t.re * fi * fj;
            if coeff.abs() <= 1e-14 {
                continue;
            }
            let tn_i = trace_norm(bi);
            let tn_j = trace_norm(bj);
            terms.push(ProductTerm {
                weight: coeff.abs(),
                sign: if coeff >= 0.0 { 1 } else { -1 },
                left: bi.unscale(tn_i),
                right: bj.unscale(tn_j),
                left_label: li.clone(),
                right_label: lj.clone(),
            });
        }
    }
    ProductStateProtocol { basis: PRODUCT_BASIS, terms }
}

/// η, γ ∈ C^n ⊗ C^n ⊗ C^v, with composite index ((a·n + b)·v + k).
#[derive(Clone, Debug)]
pub struct RankOneGame {
    pub n: usize,
    pub v_dim: usize,
    pub eta: CVec,
    pub gamma: CVec,
    /// Trace norm of the source game; M = scale · M̂ after normalization.
    pub scale: f64,
}

impl RankOneGame {
    pub fn new(n: usize, v_dim: usize, eta: CVec, gamma: CVec) -> Result<Self> {
        let len = n * n * v_dim;
        if eta.len() != len || gamma.len() != len {
            return Err(Error::DimensionMismatch(format!("vectors must have length {len}")));
        }
        for v in [&eta, &gamma] {
            if (v.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::PreconditionViolated("eta and gamma must be unit vectors".into()));
            }
        }
        Ok(RankOneGame { n, v_dim, eta, gamma, scale: 1.0 })
    }
}

/// M̂ = Tr_V |η><γ|.
pub fn rank_one_matrix(g: &RankOneGame) -> CMat {
    let outer = &g.eta * g.gamma.adjoint();
    let nn = g.n * g.n;
    partial_trace(&outer, nn, g.v_dim, Factor::Second).expect("consistent dims")
}

pub fn xor_to_rank_one(g: &GameMatrix) -> Result<RankOneGame> {
    let dec = svd(&g.m)?;
    let top = dec.s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::ZeroGame);
    }
    let rank = dec.s.iter().filter(|&&s| s > RANK_TOL * top).count();
    let nn = g.n * g.n;
    let mut eta = CVec::zeros(nn * rank);
    let mut gamma = CVec::zeros(nn * rank);
    for i in 0..rank {
        let w = dec.s[i].sqrt();
        for r in 0..nn {
            eta[r * rank + i] = dec.u[(r, i)] * w;
            gamma[r * rank + i] = dec.v[(r, i)] * w;
        }
    }
    let scale: f64 = dec.s[..rank].iter().sum();
    let norm = scale.sqrt();
    Ok(RankOneGame { n: g.n, v_dim: rank, eta: eta.unscale(norm), gamma: gamma.unscale(norm), scale })
}

/// ½(|00><11| ⊗ M̂ + h.c.) with each player's register ordered (flag, message).
pub fn rank_one_to_xor(g: &RankOneGame) -> GameMatrix {
    let mh = rank_one_matrix(g);
    let mut flip = CMat::zeros(4, 4);
    flip[(0, 3)] = c64(0.5, 0.0);
    let raw = tensor(&flip, &mh);
    let raw = &raw + raw.adjoint();
    let n = g.n;
    let m = permute_systems(&raw, &[2, 2, n, n], &[0, 2, 1, 3]).expect("consistent dims");
    GameMatrix { n: 2 * n, m }
}

/// η = |0>|0>, γ = Ψme_n on levels 1..n, trivial referee space.
pub fn t_rank_one(n: usize) -> Result<RankOneGame> {
    if n == 0 {
        return Err(Error::BadArgs("t_rank_one needs n >= 1".into()));
    }
    let d = n + 1;
    let mut eta = CVec::zeros(d * d);
    eta[0] = c64(1.0, 0.0);
    let mut gamma = CVec::zeros(d * d);
    let w = 1.0 / (n as f64).sqrt();
    for i in 1..=n {
        gamma[i * d + i] = c64(w, 0.0);
    }
    RankOneGame::new(d, 1, eta, gamma)
}
