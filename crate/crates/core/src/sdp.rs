//! Complex-block semidefinite programs in standard form and a primal-dual
//! interior-point solver working on a real symmetric embedding.
//!
//! Primal: maximize Σ_b Re Tr(C_b† Z_b) s.t. Σ_b Re Tr(F_qb† Z_b) = rhs_q, Z_b ⪰ 0.
//! Dual:   minimize rhs·y s.t. Σ_q y_q F_q − C ⪰ 0.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{c64, herm_eig_unchecked, CMat, C64};

type RMat = DMatrix<f64>;

/// One stored entry of a sparse Hermitian coefficient matrix; only r ≤ c is
/// stored and the (c, r) entry is the conjugate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub r: usize,
    pub c: usize,
    pub v: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub label: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub entries: Vec<Entry>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpInstance {
    pub blocks: Vec<Block>,
    pub objective: Vec<Entry>,
    pub constraints: Vec<Constraint>,
}

/// Accumulates the real-linear functional Z ↦ Re Σ coef · Z_b[p, q] as
/// stored Hermitian entries.
#[derive(Clone, Debug, Default)]
pub struct LinearForm {
    terms: BTreeMap<(usize, usize, usize), C64>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds Re(coef · Z_b[p, q]).
    pub fn add(&mut self, block: usize, p: usize, q: usize, coef: C64) {
        let (key, v) = if p == q {
            ((block, p, p), c64(coef.re, 0.0))
        } else if p < q {
            ((block, p, q), coef.conj() * 0.5)
        } else {
            ((block, q, p), coef * 0.5)
        };
        *self.terms.entry(key).or_insert(c64(0.0, 0.0)) += v;
    }

    /// Adds Re Z_b[p, q].
    pub fn add_re(&mut self, block: usize, p: usize, q: usize, w: f64) {
        self.add(block, p, q, c64(w, 0.0));
    }

    /// Adds Im Z_b[p, q].
    pub fn add_im(&mut self, block: usize, p: usize, q: usize, w: f64) {
        self.add(block, p, q, c64(0.0, -w));
    }

    pub fn entries(&self) -> Vec<Entry> {
        self.terms
            .iter()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(&(block, r, c), &v)| Entry { block, r, c, v })
            .collect()
    }
}

impl SdpInstance {
    pub fn add_block(&mut self, label: impl Into<String>, dim: usize) -> usize {
        self.blocks.push(Block { label: label.into(), dim });
        self.blocks.len() - 1
    }

    pub fn add_constraint(&mut self, form: &LinearForm, rhs: f64) {
        self.constraints.push(Constraint { entries: form.entries(), rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let check = |e: &Entry| -> Result<()> {
            let blk = self
                .blocks
                .get(e.block)
                .ok_or_else(|| Error::Format(format!("entry refers to missing block {}", e.block)))?;
            if e.r > e.c || e.c >= blk.dim {
                return Err(Error::Format(format!("entry ({}, {}) invalid for block of dim {}", e.r, e.c, blk.dim)));
            }
            if e.r == e.c && e.v.im.abs() > 1e-12 {
                return Err(Error::NotHermitian { residual: e.v.im.abs() });
            }
            if !e.v.re.is_finite() || !e.v.im.is_finite() {
                return Err(Error::Numeric("non-finite coefficient".into()));
            }
            Ok(())
        };
        if self.blocks.iter().any(|b| b.dim == 0) {
            return Err(Error::Format("block dimensions must be >= 1".into()));
        }
        self.objective.iter().try_for_each(check)?;
        for c in &self.constraints {
            c.entries.iter().try_for_each(check)?;
            if !c.rhs.is_finite() {
                return Err(Error::Numeric("non-finite rhs".into()));
            }
        }
        Ok(())
    }

    /// Σ_b Re Tr(F_b† Z_b) for stored entries.
    pub fn evaluate(&self, entries: &[Entry], z: &[CMat]) -> f64 {
        entries
            .iter()
            .map(|e| {
                let zv = z[e.block][(e.r, e.c)];
                if e.r == e.c {
                    e.v.re * zv.re
                } else {
                    2.0 * (e.v.conj() * zv).re
                }
            })
            .sum()
    }

    /// Dense Hermitian matrix of stored entries restricted to one block.
    pub fn dense(&self, entries: &[Entry], block: usize) -> CMat {
        let dim = self.blocks[block].dim;
        let mut m = CMat::zeros(dim, dim);
        for e in entries.iter().filter(|e| e.block == block) {
            if e.r == e.c {
                m[(e.r, e.r)] += c64(e.v.re, 0.0);
            } else {
                m[(e.r, e.c)] += e.v;
                m[(e.c, e.r)] += e.v.conj();
            }
        }
        m
    }

    fn block_is_real(&self, block: usize) -> bool {
        let real = |es: &[Entry]| es.iter().filter(|e| e.block == block).all(|e| e.v.im == 0.0);
        real(&self.objective) && self.constraints.iter().all(|c| real(&c.entries))
    }
}

/// Sparse symmetric matrix over a block: (block, i, j, v) with i ≤ j.
type SymEntries = Vec<(usize, usize, usize, f64)>;

#[derive(Clone, Debug)]
pub struct RealSdp {
    pub dims: Vec<usize>,
    pub objective: SymEntries,
    pub constraints: Vec<SymEntries>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMap {
    /// Hermitian block of dim m stored as the real symmetric 2m block [[Re, −Im], [Im, Re]].
    Doubled,
    /// Block whose data are all real; the real part of Z is enough.
    Real,
}

#[derive(Clone, Debug)]
pub struct RealEmbedding {
    pub sdp: RealSdp,
    pub maps: Vec<BlockMap>,
}

fn push_sym(out: &mut SymEntries, b: usize, i: usize, j: usize, v: f64) {
    if v != 0.0 {
        out.push((b, i.min(j), i.max(j), v));
    }
}

fn embed_entries(entries: &[Entry], inst: &SdpInstance, maps: &[BlockMap]) -> SymEntries {
    let mut out = Vec::new();
    for e in entries {
        let m = inst.blocks[e.block].dim;
        match maps[e.block] {
            BlockMap::Real => push_sym(&mut out, e.block, e.r, e.c, e.v.re),
            BlockMap::Doubled => {
                // ½[[Re F, −Im F], [Im F, Re F]]; Tr of it against the embedding is Re Tr(F†Z).
                let (r, c, re, im) = (e.r, e.c, e.v.re * 0.5, e.v.im * 0.5);
                push_sym(&mut out, e.block, r, c, re);
                push_sym(&mut out, e.block, m + r, m + c, re);
                if r != c {
                    push_sym(&mut out, e.block, r, m + c, -im);
                    push_sym(&mut out, e.block, c, m + r, im);
                }
            }
        }
    }
    out
}

fn embed_with(inst: &SdpInstance, maps: Vec<BlockMap>) -> RealEmbedding {
    let dims = inst
        .blocks
        .iter()
        .zip(&maps)
        .map(|(b, m)| if *m == BlockMap::Doubled { 2 * b.dim } else { b.dim })
        .collect();
    let objective = embed_entries(&inst.objective, inst, &maps);
    let constraints = inst.constraints.iter().map(|c| embed_entries(&c.entries, inst, &maps)).collect();
    let rhs = inst.constraints.iter().map(|c| c.rhs).collect();
    RealEmbedding { sdp: RealSdp { dims, objective, constraints, rhs }, maps }
}

/// Doubles every block: H ↦ [[Re H, −Im H], [Im H, Re H]]. Coefficient matrices
/// are halved so that embedded values equal the complex ones.
pub fn real_embedding(inst: &SdpInstance) -> RealEmbedding {
    embed_with(inst, vec![BlockMap::Doubled; inst.blocks.len()])
}

/// Like [`real_embedding`] but keeps blocks with purely real data at their size:
/// for such a block Re Z is feasible whenever Z is and has the same objective.
pub fn real_embedding_compact(inst: &SdpInstance) -> RealEmbedding {
    let maps = (0..inst.blocks.len())
        .map(|b| if inst.block_is_real(b) { BlockMap::Real } else { BlockMap::Doubled })
        .collect();
    embed_with(inst, maps)
}

impl RealEmbedding {
    /// Maps embedded blocks back to Hermitian ones (averaging the two copies).
    pub fn back_map(&self, blocks: &[RMat]) -> Vec<CMat> {
        blocks
            .iter()
            .zip(&self.maps)
            .map(|(y, map)| match map {
                BlockMap::Real => y.map(|x| c64(x, 0.0)),
                BlockMap::Doubled => {
                    let m = y.nrows() / 2;
                    CMat::from_fn(m, m, |i, j| {
                        c64(
                            0.5 * (y[(i, j)] + y[(m + i, m + j)]),
                            0.5 * (y[(m + i, j)] - y[(i, m + j)]),
                        )
                    })
                }
            })
            .collect()
    }

    /// Embeds Hermitian blocks.
    pub fn forward(&self, z: &[CMat]) -> Vec<RMat> {
        z.iter()
            .zip(&self.maps)
            .map(|(h, map)| match map {
                BlockMap::Real => h.map(|x| x.re),
                BlockMap::Doubled => {
                    let m = h.nrows();
                    RMat::from_fn(2 * m, 2 * m, |i, j| {
                        let (bi, bj) = (i / m, j / m);
                        let x = h[(i % m, j % m)];
                        match (bi, bj) {
                            (0, 0) | (1, 1) => x.re,
                            (0, 1) => -x.im,
                            _ => x.im,
                        }
                    })
                }
            })
            .collect()
    }
}

impl RealSdp {
    pub fn apply(entries: &SymEntries, x: &[RMat]) -> f64 {
        entries
            .iter()
            .map(|&(b, i, j, v)| if i == j { v * x[b][(i, i)] } else { 2.0 * v * x[b][(i, j)] })
            .sum()
    }

    fn dense_into(&self, entries: &SymEntries, scale: f64, out: &mut [RMat]) {
        for &(b, i, j, v) in entries {
            out[b][(i, j)] += scale * v;
            if i != j {
                out[b][(j, i)] += scale * v;
            }
        }
    }

    fn zeros(&self) -> Vec<RMat> {
        self.dims.iter().map(|&d| RMat::zeros(d, d)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub blocks: Vec<CMat>,
    pub y: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub tol: f64,
    pub certified: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, feas_tol: 1e-9, max_iterations: 120 }
    }
}

pub fn solve(inst: &SdpInstance, tol: f64) -> Result<SdpSolution> {
    solve_with(inst, SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_with(inst: &SdpInstance, opts: SolverOptions) -> Result<SdpSolution> {
    inst.validate()?;
    let emb = real_embedding_compact(inst);
    let out = solve_real(&emb.sdp, opts);
    let wrap = |raw: RealSolution, certified: bool| SdpSolution {
        blocks: emb.back_map(&raw.x),
        y: raw.y,
        primal_value: raw.primal,
        dual_value: raw.dual,
        gap: raw.dual - raw.primal,
        iterations: raw.iterations,
        tol: opts.tol,
        certified,
    };
    match out {
        Ok(raw) => Ok(wrap(raw, true)),
        Err(RealFailure::MaxIterations(raw)) => {
            let sol = wrap(raw, false);
            Err(Error::MaxIterations { iterations: sol.iterations, gap: sol.gap })
        }
        Err(RealFailure::Other(e)) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct RealSolution {
    pub x: Vec<RMat>,
    pub y: Vec<f64>,
    pub z: Vec<RMat>,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
}

#[derive(Debug)]
pub enum RealFailure {
    MaxIterations(RealSolution),
    Other(Error),
}

impl From<Error> for RealFailure {
    fn from(e: Error) -> Self {
        RealFailure::Other(e)
    }
}

/// Expanded nonzeros (both triangles) grouped by block, per constraint.
struct Expanded {
    by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
}

impl Expanded {
    fn new(sdp: &RealSdp, active: &[usize]) -> Self {
        let mut by_block: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>> = vec![Vec::new(); sdp.dims.len()];
        for (row, &k) in active.iter().enumerate() {
            let mut per: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for &(b, i, j, v) in &sdp.constraints[k] {
                let list = per.entry(b).or_default();
                list.push((i, j, v));
                if i != j {
                    list.push((j, i, v));
                }
            }
            for (b, list) in per {
                by_block[b].push((row, list));
            }
        }
        Expanded { by_block }
    }

    /// M_ij = Tr(A_i X A_j Z⁻¹).
    fn schur(&self, m: usize, x: &[RMat], zinv: &[RMat]) -> RMat {
        let mut out = RMat::zeros(m, m);
        for (b, rows) in self.by_block.iter().enumerate() {
            let (xb, zb) = (&x[b], &zinv[b]);
            for (ai, (i, ei)) in rows.iter().enumerate() {
                for (j, ej) in rows[ai..].iter() {
                    let mut acc = 0.0;
                    for &(p, q, v) in ei {
                        for &(r, s, w) in ej {
                            acc += v * w * xb[(q, r)] * zb[(s, p)];
                        }
                    }
                    out[(*i, *j)] += acc;
                    if i != j {
                        out[(*j, *i)] += acc;
                    }
                }
            }
        }
        out
    }
}

fn sym(m: RMat) -> RMat {
    let t = m.transpose();
    (m + t) * 0.5
}

fn chol_inverse(m: &RMat) -> Option<RMat> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Largest α ≤ cap with X + αΔX ⪰ 0 (X ≻ 0).
fn max_step(x: &[RMat], dx: &[RMat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let chol = match Cholesky::new(xb.clone()) {
            Some(c) => c,
            None => return 0.0,
        };
        let l = chol.l();
        let lin = match l.clone().solve_lower_triangular(db) {
            Some(t) => t,
            None => return 0.0,
        };
        let w = match l.solve_lower_triangular(&lin.transpose()) {
            Some(t) => t,
            None => return 0.0,
        };
        let lam = sym(w).symmetric_eigenvalues().min();
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    alpha
}

fn frob_r(m: &[RMat]) -> f64 {
    m.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &[RMat], b: &[RMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Independent constraint rows; errors when a dependent row has an inconsistent rhs.
fn independent_rows(sdp: &RealSdp) -> Result<Vec<usize>> {
    let m = sdp.constraints.len();
    let keyed: Vec<BTreeMap<(usize, usize, usize), f64>> = sdp
        .constraints
        .iter()
        .map(|c| {
            let mut map = BTreeMap::new();
            for &(b, i, j, v) in c {
                *map.entry((b, i, j)).or_insert(0.0) += v;
            }
            map
        })
        .collect();
    let mut gram = RMat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let (small, large) = if keyed[i].len() <= keyed[j].len() { (&keyed[i], &keyed[j]) } else { (&keyed[j], &keyed[i]) };
            let mut acc = 0.0;
            for (k, v) in small {
                if let Some(w) = large.get(k) {
                    let weight = if k.1 == k.2 { 1.0 } else { 2.0 };
                    acc += weight * v * w;
                }
            }
            gram[(i, j)] = acc;
            gram[(j, i)] = acc;
        }
    }
    // Incremental Cholesky of the Gram matrix over the rows kept so far.
    let mut chosen: Vec<usize> = Vec::new();
    let mut l = RMat::zeros(m, m);
    let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let bscale = 1.0 + sdp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for k in 0..m {
        let r = chosen.len();
        let mut w = vec![0.0; r];
        for s in 0..r {
            let acc: f64 = (0..s).map(|t| l[(s, t)] * w[t]).sum();
            w[s] = (gram[(chosen[s], k)] - acc) / l[(s, s)];
        }
        let resid = gram[(k, k)] - w.iter().map(|x| x * x).sum::<f64>();
        if resid > 1e-10 * scale.max(gram[(k, k)]) {
            for (t, &wt) in w.iter().enumerate() {
                l[(r, t)] = wt;
            }
            l[(r, r)] = resid.sqrt();
            chosen.push(k);
        } else {
            // A_k = Σ c_s A_chosen[s] with Lᵀc = w.
            let mut c = vec![0.0; r];
            for s in (0..r).rev() {
                let acc: f64 = (s + 1..r).map(|t| l[(t, s)] * c[t]).sum();
                c[s] = (w[s] - acc) / l[(s, s)];
            }
            let implied: f64 = chosen.iter().zip(&c).map(|(&row, cs)| cs * sdp.rhs[row]).sum();
            if (implied - sdp.rhs[k]).abs() > 1e-8 * bscale {
                return Err(Error::Infeasible(format!(
                    "constraint {k} is a linear combination of earlier constraints but its rhs {} differs from the implied {}",
                    sdp.rhs[k], implied
                )));
            }
        }
    }
    Ok(chosen)
}

/// HKM primal-dual path following with Mehrotra predictor-corrector.
pub fn solve_real(sdp: &RealSdp, opts: SolverOptions) -> std::result::Result<RealSolution, RealFailure> {
    let nb = sdp.dims.len();
    let active = independent_rows(sdp)?;
    let m = active.len();
    let b: DVector<f64> = DVector::from_iterator(m, active.iter().map(|&k| sdp.rhs[k]));
    let rows: Vec<&SymEntries> = active.iter().map(|&k| &sdp.constraints[k]).collect();
    let expanded = Expanded::new(sdp, &active);
    let mut c = sdp.zeros();
    sdp.dense_into(&sdp.objective, 1.0, &mut c);
    let c_norm = frob_r(&c);
    let b_norm = b.norm();

    if c_norm == 0.0 && b_norm == 0.0 {
        let x = sdp.zeros();
        let y = vec![0.0; sdp.constraints.len()];
        return Ok(RealSolution { z: sdp.zeros(), x, y, primal: 0.0, dual: 0.0, iterations: 0 });
    }

    let a_norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|&(_, i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>().sqrt())
        .collect();
    let total_dim: usize = sdp.dims.iter().sum();
    let sq = (total_dim as f64).sqrt();
    let mut xi: f64 = 10.0f64.max(sq);
    for k in 0..m {
        xi = xi.max(sq * (1.0 + b[k].abs()) / (1.0 + a_norms[k]));
    }
    let eta = 10.0f64.max(sq).max(c_norm).max(a_norms.iter().cloned().fold(0.0, f64::max));
    let mut x: Vec<RMat> = sdp.dims.iter().map(|&d| RMat::identity(d, d) * xi).collect();
    let mut z: Vec<RMat> = sdp.dims.iter().map(|&d| RMat::identity(d, d) * eta).collect();
    let mut y = DVector::<f64>::zeros(m);

    let a_op = |x: &[RMat]| -> DVector<f64> { DVector::from_iterator(m, rows.iter().map(|r| RealSdp::apply(r, x))) };
    let at_op = |y: &DVector<f64>| -> Vec<RMat> {
        let mut out = sdp.zeros();
        for (k, r) in rows.iter().enumerate() {
            if y[k] != 0.0 {
                sdp.dense_into(r, y[k], &mut out);
            }
        }
        out
    };

    let mut best: Option<RealSolution> = None;
    let pack = |x: &[RMat], y: &DVector<f64>, z: &[RMat], it: usize| {
        let mut full = vec![0.0; sdp.constraints.len()];
        for (k, &row) in active.iter().enumerate() {
            full[row] = y[k];
        }
        RealSolution {
            x: x.to_vec(),
            y: full,
            z: z.to_vec(),
            primal: RealSdp::apply(&sdp.objective, x),
            dual: b.dot(y),
            iterations: it,
        }
    };

    let n_total = total_dim as f64;
    for it in 0..opts.max_iterations {
        let ax = a_op(&x);
        let rp = &b - &ax;
        let aty = at_op(&y);
        let rd: Vec<RMat> = (0..nb).map(|k| &c[k] - &aty[k] + &z[k]).collect();
        let pobj = RealSdp::apply(&sdp.objective, &x);
        let dobj = b.dot(&y);
        let mu = inner(&x, &z) / n_total;
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = frob_r(&rd) / (1.0 + c_norm);
        let gap = dobj - pobj;
        let rel_gap = gap.abs() / 1f64.max(pobj.abs());
        let cur = pack(&x, &y, &z, it);
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && gap >= -1e-8 * 1f64.max(pobj.abs()) && rel_gap <= 0.5 * opts.tol {
            return Ok(cur);
        }
        let trace_x: f64 = x.iter().map(|b| b.trace()).sum();
        if trace_x > 1e10 * xi && pinf < 1e-6 {
            return Err(RealFailure::Other(Error::Unbounded(format!(
                "primal iterates diverge (trace {trace_x:.3e}) while staying feasible"
            ))));
        }
        if y.amax() > 1e10 * (1.0 + eta) && dinf < 1e-6 {
            return Err(RealFailure::Other(Error::Infeasible(format!(
                "dual iterates diverge (|y| {:.3e}); no strictly feasible primal point",
                y.amax()
            ))));
        }
        best = Some(match best {
            Some(bst) if (bst.dual - bst.primal).abs() <= gap.abs() => bst,
            _ => cur,
        });

        let mut zinv = Vec::with_capacity(nb);
        for zb in &z {
            match chol_inverse(zb) {
                Some(inv) => zinv.push(sym(inv)),
                None => return Err(RealFailure::MaxIterations(best.expect("set above"))),
            }
        }
        let mut schur = expanded.schur(m, &x, &zinv);
        let diag_max = (0..m).map(|k| schur[(k, k)]).fold(0.0, f64::max).max(1e-300);
        let factor = {
            let mut f = Cholesky::new(schur.clone());
            let mut ridge = 1e-14 * diag_max;
            while f.is_none() && ridge < 1e-4 * diag_max {
                for k in 0..m {
                    schur[(k, k)] += ridge;
                }
                f = Cholesky::new(schur.clone());
                ridge *= 100.0;
            }
            match f {
                Some(f) => f,
                None => return Err(RealFailure::MaxIterations(best.expect("set above"))),
            }
        };
        // X·Rd·Z⁻¹ enters every right-hand side.
        let x_rd_zinv: Vec<RMat> = (0..nb).map(|k| &x[k] * &rd[k] * &zinv[k]).collect();
        let a_x_rd_zinv = a_op_nonsym(&rows, &x_rd_zinv);

        let direction = |rc: &[RMat]| -> (Vec<RMat>, DVector<f64>, Vec<RMat>) {
            // rc = R·Z⁻¹ with R the centering/corrector term.
            let rhs = a_op_nonsym(&rows, rc) + &a_x_rd_zinv - &b;
            let dy = factor.solve(&rhs);
            let atdy = at_op(&dy);
            let dz: Vec<RMat> = (0..nb).map(|k| &atdy[k] - &rd[k]).collect();
            let dx: Vec<RMat> = (0..nb).map(|k| sym(&rc[k] - &x[k] - &x[k] * &dz[k] * &zinv[k])).collect();
            (dx, dy, dz)
        };

        // Predictor.
        let zero_rc: Vec<RMat> = sdp.zeros();
        let (dxp, _dyp, dzp) = direction(&zero_rc);
        let ap = (max_step(&x, &dxp)).min(1.0);
        let ad = (max_step(&z, &dzp)).min(1.0);
        let xa: Vec<RMat> = (0..nb).map(|k| &x[k] + &dxp[k] * ap).collect();
        let za: Vec<RMat> = (0..nb).map(|k| &z[k] + &dzp[k] * ad).collect();
        let mu_aff = inner(&xa, &za) / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // Corrector: R = σμI − ΔXp ΔZp.
        let rc: Vec<RMat> = (0..nb)
            .map(|k| {
                let d = sdp.dims[k];
                (RMat::identity(d, d) * (sigma * mu) - &dxp[k] * &dzp[k]) * &zinv[k]
            })
            .collect();
        let (dx, dy, dz) = direction(&rc);
        let tau = 0.95;
        let ap = (tau * max_step(&x, &dx)).min(1.0);
        let ad = (tau * max_step(&z, &dz)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            return Err(RealFailure::MaxIterations(best.expect("set above")));
        }
        for k in 0..nb {
            x[k] = sym(&x[k] + &dx[k] * ap);
            z[k] = sym(&z[k] + &dz[k] * ad);
        }
        y += &dy * ad;
    }
    let last = pack(&x, &y, &z, opts.max_iterations);
    Err(RealFailure::MaxIterations(last))
}

/// Tr(A_k Y) for a possibly non-symmetric Y.
fn a_op_nonsym(rows: &[&SymEntries], yb: &[RMat]) -> DVector<f64> {
    DVector::from_iterator(
        rows.len(),
        rows.iter().map(|r| {
            r.iter()
                .map(|&(b, i, j, v)| if i == j { v * yb[b][(i, i)] } else { v * (yb[b][(i, j)] + yb[b][(j, i)]) })
                .sum::<f64>()
        }),
    )
}

#[derive(Clone, Debug)]
pub struct CertReport {
    pub pass: bool,
    pub violations: Vec<String>,
    pub max_residual: f64,
    pub min_eigenvalue: f64,
    pub dual_min_eigenvalue: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
}

/// Recomputes residuals, PSD slack of Z and of the dual slack, and the gap.
pub fn certify(inst: &SdpInstance, sol: &SdpSolution) -> CertReport {
    let mut violations = Vec::new();
    if sol.blocks.len() != inst.blocks.len() || sol.y.len() != inst.constraints.len() {
        violations.push("solution shape does not match instance".to_string());
        return CertReport {
            pass: false,
            violations,
            max_residual: f64::INFINITY,
            min_eigenvalue: f64::NEG_INFINITY,
            dual_min_eigenvalue: f64::NEG_INFINITY,
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            gap: f64::NAN,
        };
    }
    let rhs_scale = inst.constraints.iter().fold(1.0f64, |a, c| a.max(c.rhs.abs()));
    let mut max_residual = 0.0f64;
    for (q, c) in inst.constraints.iter().enumerate() {
        let r = (inst.evaluate(&c.entries, &sol.blocks) - c.rhs).abs();
        max_residual = max_residual.max(r);
        if r > 1e-7 * rhs_scale {
            violations.push(format!("constraint {q} residual {r:.3e}"));
        }
    }
    let mut min_eig = f64::INFINITY;
    let mut dual_min = f64::INFINITY;
    let mut c_scale = 1.0f64;
    for (b, blk) in inst.blocks.iter().enumerate() {
        let zb = &sol.blocks[b];
        let l = herm_eig_unchecked((zb + zb.adjoint()).scale(0.5)).values.last().copied().unwrap_or(0.0);
        min_eig = min_eig.min(l);
        if l < -1e-8 {
            violations.push(format!("block {} ({}) has eigenvalue {l:.3e}", b, blk.label));
        }
        let cb = inst.dense(&inst.objective, b);
        c_scale = c_scale.max(crate::linalg::frob(&cb));
        let mut s = -cb;
        for (q, c) in inst.constraints.iter().enumerate() {
            if sol.y[q] != 0.0 {
                s += inst.dense(&c.entries, b).scale(sol.y[q]);
            }
        }
        let dl = herm_eig_unchecked(s).values.last().copied().unwrap_or(0.0);
        dual_min = dual_min.min(dl);
    }
    if dual_min < -1e-7 * c_scale {
        violations.push(format!("dual slack has eigenvalue {dual_min:.3e}"));
    }
    let primal = inst.evaluate(&inst.objective, &sol.blocks);
    let dual: f64 = inst.constraints.iter().zip(&sol.y).map(|(c, y)| c.rhs * y).sum();
    let gap = dual - primal;
    let scale = 1f64.max(primal.abs());
    if gap < -1e-7 * scale {
        violations.push(format!("negative gap {gap:.3e}"));
    }
    if gap > sol.tol * scale {
        violations.push(format!("gap {gap:.3e} exceeds tolerance {:.1e}", sol.tol));
    }
    CertReport {
        pass: violations.is_empty(),
        violations,
        max_residual,
        min_eigenvalue: if min_eig.is_finite() { min_eig } else { 0.0 },
        dual_min_eigenvalue: if dual_min.is_finite() { dual_min } else { 0.0 },
        primal_value: primal,
        dual_value: dual,
        gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(dim: usize) -> SdpInstance {
        let mut inst = SdpInstance::default();
        inst.add_block("z", dim);
        inst
    }

    #[test]
    fn trace_with_unit_entry() {
        let mut inst = single(1);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 0, 1.0);
        inst.objective = obj.entries();
        let mut f = LinearForm::new();
        f.add_re(0, 0, 0, 1.0);
        inst.add_constraint(&f, 1.0);
        let sol = solve(&inst, 1e-8).unwrap();
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
        assert!(certify(&inst, &sol).pass);
    }

    #[test]
    fn off_diagonal_with_unit_diagonal() {
        let mut inst = single(2);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 1, 1.0);
        obj.add_re(0, 1, 0, 1.0);
        inst.objective = obj.entries();
        for k in 0..2 {
            let mut f = LinearForm::new();
            f.add_re(0, k, k, 1.0);
            inst.add_constraint(&f, 1.0);
        }
        let sol = solve(&inst, 1e-8).unwrap();
        assert!((sol.primal_value - 2.0).abs() < 1e-7);
        assert!((sol.blocks[0][(0, 1)].re - 1.0).abs() < 1e-4);
        let rep = certify(&inst, &sol);
        assert!(rep.pass, "{:?}", rep.violations);
    }

    #[test]
    fn complex_objective_uses_doubled_block() {
        // maximize Im Z01 s.t. diag = 1 → 1 at Z01 = i
        let mut inst = single(2);
        let mut obj = LinearForm::new();
        obj.add_im(0, 0, 1, 1.0);
        inst.objective = obj.entries();
        for k in 0..2 {
            let mut f = LinearForm::new();
            f.add_re(0, k, k, 1.0);
            inst.add_constraint(&f, 1.0);
        }
        assert_eq!(real_embedding_compact(&inst).maps, vec![BlockMap::Doubled]);
        let sol = solve(&inst, 1e-8).unwrap();
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
        assert!((sol.blocks[0][(0, 1)].im - 1.0).abs() < 1e-4);
    }

    #[test]
    fn inconsistent_rows_are_infeasible() {
        let mut inst = single(1);
        let mut f = LinearForm::new();
        f.add_re(0, 0, 0, 1.0);
        inst.add_constraint(&f, 1.0);
        inst.add_constraint(&f, 2.0);
        assert!(matches!(solve(&inst, 1e-6), Err(Error::Infeasible(_))));
    }

    #[test]
    fn negative_diagonal_is_infeasible() {
        let mut inst = single(1);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 0, 1.0);
        inst.objective = obj.entries();
        let mut f = LinearForm::new();
        f.add_re(0, 0, 0, 1.0);
        inst.add_constraint(&f, -1.0);
        assert!(matches!(solve(&inst, 1e-6), Err(Error::Infeasible(_))));
    }

    #[test]
    fn free_direction_is_unbounded() {
        let mut inst = single(2);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 0, 1.0);
        inst.objective = obj.entries();
        let mut f = LinearForm::new();
        f.add_re(0, 1, 1, 1.0);
        inst.add_constraint(&f, 1.0);
        assert!(matches!(solve(&inst, 1e-6), Err(Error::Unbounded(_))));
    }

    #[test]
    fn duplicate_consistent_rows_are_dropped() {
        let mut inst = single(2);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 1, 2.0);
        inst.objective = obj.entries();
        for k in 0..2 {
            let mut f = LinearForm::new();
            f.add_re(0, k, k, 1.0);
            inst.add_constraint(&f, 1.0);
            inst.add_constraint(&f, 1.0);
        }
        let sol = solve(&inst, 1e-8).unwrap();
        assert!((sol.primal_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn zero_instance_certifies() {
        let inst = single(3);
        let sol = solve(&inst, 1e-6).unwrap();
        assert_eq!(sol.primal_value, 0.0);
        assert!(certify(&inst, &sol).pass);
    }

    #[test]
    fn corrupted_solution_fails() {
        let mut inst = single(2);
        let mut obj = LinearForm::new();
        obj.add_re(0, 0, 1, 2.0);
        inst.objective = obj.entries();
        for k in 0..2 {
            let mut f = LinearForm::new();
            f.add_re(0, k, k, 1.0);
            inst.add_constraint(&f, 1.0);
        }
        let mut sol = solve(&inst, 1e-8).unwrap();
        sol.blocks[0][(0, 0)] = c64(-3.0, 0.0);
        let rep = certify(&inst, &sol);
        assert!(!rep.pass);
        assert!(rep.violations.iter().any(|v| v.contains("eigenvalue")));
        assert!(rep.violations.iter().any(|v| v.contains("constraint 0")));
    }

    #[test]
    fn embedding_of_scalar_block() {
        let mut inst = single(1);
        let mut f = LinearForm::new();
        f.add_re(0, 0, 0, 1.0);
        inst.add_constraint(&f, 1.0);
        let emb = real_embedding(&inst);
        assert_eq!(emb.sdp.dims, vec![2]);
        let y = emb.forward(&[CMat::from_element(1, 1, c64(0.7, 0.0))]);
        assert_eq!(y[0], RMat::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 0.7]));
        assert!((RealSdp::apply(&emb.sdp.constraints[0], &y) - 0.7).abs() < 1e-15);
        let back = emb.back_map(&y);
        assert_eq!(back[0][(0, 0)], c64(0.7, 0.0));
    }
}
