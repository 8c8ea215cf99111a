//! Dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative Frobenius tolerance for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-10;
/// Relative threshold (against the largest singular value) for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn ensure_square(a: &CMat) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

/// ‖A − A†‖_F / max(‖A‖_F, tiny).
pub fn hermitian_residual(a: &CMat) -> f64 {
    let diff = frob(&(a - a.adjoint()));
    let scale = frob(a);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Validates Hermiticity and returns (A + A†)/2.
pub fn check_hermitian(a: &CMat) -> Result<CMat> {
    ensure_square(a)?;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite entry".into()));
    }
    let residual = hermitian_residual(a);
    if residual > HERM_TOL {
        return Err(Error::NotHermitian { residual });
    }
    Ok((a + a.adjoint()).scale(0.5))
}

pub fn is_real(a: &CMat, tol: f64) -> bool {
    a.iter().all(|z| z.im.abs() <= tol)
}

#[derive(Clone, Debug)]
pub struct HermEig {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMat,
}

pub fn herm_eig(h: &CMat) -> Result<HermEig> {
    let h = check_hermitian(h)?;
    Ok(herm_eig_unchecked(h))
}

pub(crate) fn herm_eig_unchecked(h: CMat) -> HermEig {
    let n = h.nrows();
    if n == 0 {
        return HermEig { values: vec![], vectors: h };
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermEig { values, vectors }
}

#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    /// Non-negative, sorted descending.
    pub s: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn rank(&self) -> usize {
        let top = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > RANK_TOL * top && x > 0.0).count()
    }
}

/// A = U·diag(S)·V† with min(rows, cols) singular triples.
pub fn svd(a: &CMat) -> Result<Svd> {
    let (r, c) = a.shape();
    let m = r.min(c);
    if m == 0 {
        return Ok(Svd { u: CMat::zeros(r, 0), s: vec![], v: CMat::zeros(c, 0) });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite entry in svd input".into()));
    }
    let dec = SVD::try_new(a.clone(), true, true, 5.0 * f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("svd did not converge".into()))?;
    let u = dec.u.expect("u requested");
    let vt = dec.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = CMat::from_fn(r, m, |i, k| u[(i, order[k])]);
    let v = CMat::from_fn(c, m, |i, k| vt[(order[k], i)].conj());
    Ok(Svd { u, s, v })
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows().min(a.ncols()) == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Kronecker product; row (i, j) of A⊗B is i·rows(B) + j.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Traces out `which` factor of an operator on C^{d1}⊗C^{d2}.
pub fn partial_trace(p: &CMat, d1: usize, d2: usize, which: Factor) -> Result<CMat> {
    if p.nrows() != d1 * d2 || p.ncols() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, factors {d1}x{d2}",
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(match which {
        Factor::Second => CMat::from_fn(d1, d1, |i, k| {
            (0..d2).map(|j| p[(i * d2 + j, k * d2 + j)]).sum()
        }),
        Factor::First => CMat::from_fn(d2, d2, |j, l| {
            (0..d1).map(|i| p[(i * d2 + j, i * d2 + l)]).sum()
        }),
    })
}

/// Index map for `permute_systems`: `map[old] = new`.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let k = dims.len();
    if perm.len() != k {
        return Err(Error::BadPermutation(format!("{} factors, permutation of length {}", k, perm.len())));
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::BadPermutation(format!("{perm:?} is not a permutation of 0..{k}")));
        }
        seen[p] = true;
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; k];
    for (old, slot) in map.iter_mut().enumerate() {
        let mut rem = old;
        for f in (0..k).rev() {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        let mut new = 0;
        for (pos, &p) in perm.iter().enumerate() {
            new = new * new_dims[pos] + digits[p];
        }
        *slot = new;
    }
    Ok(map)
}

/// Reorders tensor factors of a state: factor `j` of the output is factor
/// `perm[j]` of the input (so `|i_0 … i_{k-1}> -> |i_{perm[0]} … i_{perm[k-1]}>`).
pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> Result<CVec> {
    let total: usize = dims.iter().product();
    if v.len() != total {
        return Err(Error::DimensionMismatch(format!("vector length {} vs dims {dims:?}", v.len())));
    }
    let map = permutation_index_map(dims, perm)?;
    let mut out = CVec::zeros(total);
    for (old, &new) in map.iter().enumerate() {
        out[new] = v[old];
    }
    Ok(out)
}

/// Same convention as [`permute_vector`], applied as P·M·P†.
pub fn permute_systems(m: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, dims {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let map = permutation_index_map(dims, perm)?;
    let mut out = CMat::zeros(total, total);
    for c in 0..total {
        for r in 0..total {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Spectral sign; eigenvalues with |λ| < 1e-12 go to +1.
pub fn sign_of_hermitian(k: &CMat) -> Result<CMat> {
    let eig = herm_eig(k)?;
    Ok(spectral_sign(&eig))
}

pub(crate) fn spectral_sign(eig: &HermEig) -> CMat {
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (c, &l) in eig.values.iter().enumerate() {
        if l <= -1e-12 {
            scaled.column_mut(c).neg_mut();
        }
    }
    let out = &scaled * eig.vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    (&out + out.adjoint()).scale(0.5)
}

/// A = V·U† for K = UΣV†, so Tr(A·K) = ‖K‖₁.
pub fn polar_unitary(k: &CMat) -> Result<CMat> {
    ensure_square(k)?;
    let dec = svd(k)?;
    Ok(&dec.v * dec.u.adjoint())
}

#[derive(Clone, Debug)]
pub struct Gsvd {
    pub u1: CMat,
    pub u2: CMat,
    /// n × k, full column rank.
    pub r: CMat,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub k: usize,
}

impl Gsvd {
    /// R·[D | 0] for the given diagonal.
    pub fn padded(&self, d: &[f64], cols: usize) -> CMat {
        let mut out = CMat::zeros(self.r.nrows(), cols);
        for j in 0..self.k {
            let col = self.r.column(j) * c64(d[j], 0.0);
            out.set_column(j, &col);
        }
        out
    }
}

/// Gram–Schmidt over `cols` followed by standard basis vectors; returns a dim×dim unitary
/// whose first columns span the same space as `cols` (in order).
fn complete_unitary(cols: &[CVec], dim: usize) -> CMat {
    let mut basis: Vec<CVec> = Vec::with_capacity(dim);
    let push = |v: &CVec, basis: &mut Vec<CVec>, force: bool| {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let nrm = w.norm();
        if force || nrm > 1e-6 {
            basis.push(w.unscale(nrm));
            true
        } else {
            false
        }
    };
    for v in cols {
        push(v, &mut basis, true);
    }
    let mut e = 0;
    while basis.len() < dim && e < dim {
        let mut unit = CVec::zeros(dim);
        unit[e] = c64(1.0, 0.0);
        push(&unit, &mut basis, false);
        e += 1;
    }
    CMat::from_columns(&basis)
}

/// Generalized SVD: A1·U1 = R·[D1|0], A2·U2 = R·[D2|0], D1² + D2² = I.
pub fn gsvd(a1: &CMat, a2: &CMat) -> Result<Gsvd> {
    let (n, d) = a1.shape();
    if a2.shape() != (n, d) {
        return Err(Error::DimensionMismatch("A1 and A2 must have the same shape".into()));
    }
    if n > d {
        return Err(Error::DimensionMismatch(format!("gsvd needs n <= d, got n={n}, d={d}")));
    }
    // [A1 A2][A1 A2]† = R R†; R0 = W_k Σ_k.
    let mut stacked = CMat::zeros(n, 2 * d);
    stacked.view_mut((0, 0), (n, d)).copy_from(a1);
    stacked.view_mut((0, d), (n, d)).copy_from(a2);
    let dec = svd(&stacked)?;
    let k = dec.rank();
    let w = dec.u.columns(0, k).into_owned();
    let sig = &dec.s[..k];
    // K_i = R0⁺ A_i = Σ⁻¹ W† A_i, so K1K1† + K2K2† = I_k.
    let mut k1 = w.adjoint() * a1;
    let mut k2 = w.adjoint() * a2;
    for (i, &s) in sig.iter().enumerate() {
        k1.row_mut(i).unscale_mut(s);
        k2.row_mut(i).unscale_mut(s);
    }
    // Common left rotation Q diagonalizing K1K1†.
    let g1 = &k1 * k1.adjoint();
    let eig = herm_eig_unchecked((&g1 + g1.adjoint()).scale(0.5));
    let q = eig.vectors;
    let d1: Vec<f64> = eig.values.iter().map(|&l| l.clamp(0.0, 1.0).sqrt()).collect();
    let d2: Vec<f64> = eig.values.iter().map(|&l| (1.0 - l.clamp(0.0, 1.0)).sqrt()).collect();
    // R = R0·Q = W·Σ·Q.
    let mut sq = q.clone();
    for (i, &s) in sig.iter().enumerate() {
        sq.row_mut(i).scale_mut(s);
    }
    let r = &w * sq;
    let u1 = right_factor(&(q.adjoint() * &k1), &d1, d);
    let u2 = right_factor(&(q.adjoint() * &k2), &d2, d);
    Ok(Gsvd { u1, u2, r, d1, d2, k })
}

/// Given rows r_i with ‖r_i‖ = d_i and mutually orthogonal, builds a unitary whose
/// column i is r_i†/d_i whenever d_i is resolvable.
fn right_factor(rows: &CMat, dvals: &[f64], d: usize) -> CMat {
    let k = dvals.len();
    let mut cols: Vec<CVec> = Vec::with_capacity(d);
    let mut pending = Vec::new();
    for i in 0..k {
        let v: CVec = rows.row(i).adjoint().unscale(dvals[i].max(f64::MIN_POSITIVE));
        if dvals[i] > 1e-7 && (v.norm() - 1.0).abs() < 1e-3 {
            cols.push(v);
        } else {
            pending.push(i);
        }
    }
    // Orthonormal columns for resolvable indices, then completion.
    let full = complete_unitary(&cols, d);
    let mut out = CMat::zeros(d, d);
    let mut next_resolved = 0;
    let mut next_free = cols.len();
    for i in 0..d {
        let src = if i < k && !pending.contains(&i) {
            let s = next_resolved;
            next_resolved += 1;
            s
        } else {
            let s = next_free;
            next_free += 1;
            s
        };
        out.set_column(i, &full.column(src));
    }
    out
}

/// Isometries V1, V2 (d × d', orthonormal rows) making the column pairs
/// ((A1V1)_i, (B2V2)_i) and ((A2V2)_i, (B1V1)_i) non-negatively proportional.
pub fn proportionality_isometries(
    a1: &CMat,
    a2: &CMat,
    b1: &CMat,
    b2: &CMat,
) -> Result<(CMat, CMat)> {
    let (n, d) = a1.shape();
    for m in [a2, b1, b2] {
        if m.shape() != (n, d) {
            return Err(Error::DimensionMismatch("all four matrices must share a shape".into()));
        }
    }
    let lhs = a1 * b1.adjoint();
    let rhs = a2 * b2.adjoint();
    let scale = 1.0f64.max(frob(&lhs)).max(frob(&rhs));
    let resid = frob(&(&lhs - &rhs));
    if resid > 1e-8 * scale {
        return Err(Error::PreconditionViolated(format!("A1B1† - A2B2† has norm {resid:.3e}")));
    }
    // Pad columns when n > d; the padding isometry is [I_d | 0].
    let dp = d.max(n);
    let pad = |m: &CMat| {
        let mut out = CMat::zeros(n, dp);
        out.view_mut((0, 0), (n, d)).copy_from(m);
        out
    };
    let g = gsvd(&pad(a1), &pad(a2))?;
    let k = g.k;
    let dprime = 2 * dp - k;
    let mut v1 = CMat::zeros(dp, dprime);
    let mut v2 = CMat::zeros(dp, dprime);
    for j in 0..k {
        v1.set_column(j, &g.u1.column(j));
        v2.set_column(j, &g.u2.column(j));
    }
    for j in k..dp {
        v1.set_column(j, &g.u1.column(j));
        v2.set_column(j + dp - k, &g.u2.column(j));
    }
    let v1 = v1.rows(0, d).into_owned();
    let v2 = v2.rows(0, d).into_owned();
    Ok((v1, v2))
}

/// Parity of a permutation of 1..m.
pub fn permutation_sign(perm: &[usize]) -> Result<i8> {
    let m = perm.len();
    let mut seen = vec![false; m];
    for &p in perm {
        if p == 0 || p > m || seen[p - 1] {
            return Err(Error::NotAPermutation);
        }
        seen[p - 1] = true;
    }
    // Cycle decomposition: each cycle of length L contributes L-1 transpositions.
    let mut visited = vec![false; m];
    let mut transpositions = 0usize;
    for start in 0..m {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = perm[i] - 1;
            len += 1;
        }
        transpositions += len - 1;
    }
    Ok(if transpositions % 2 == 0 { 1 } else { -1 })
}

pub fn gaussian_cmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn gaussian_rmat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c64(rng.sample::<f64, _>(StandardNormal), 0.0))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = gaussian_cmat(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = gaussian_cmat(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let col = q.column(j) * ph;
        q.set_column(j, &col);
    }
    q
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v: CVec = gaussian_cmat(rng, n, 1).column(0).into_owned();
    let nrm = v.norm();
    v.unscale(nrm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn diag(v: &[f64]) -> CMat {
        CMat::from_fn(v.len(), v.len(), |i, j| if i == j { c64(v[i], 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn herm_eig_small_cases() {
        let e = herm_eig(&CMat::identity(2, 2)).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let e = herm_eig(&diag(&[3.0, -1.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_reconstructs() {
        let mut r = rng(1);
        let u = random_unitary(&mut r, 6);
        let lam = [2.5, 1.0, 0.3, -0.2, -1.1, -4.0];
        let h = &u * diag(&lam) * u.adjoint();
        let e = herm_eig(&h).unwrap();
        for (a, b) in e.values.iter().zip(lam.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let rec = &e.vectors * diag(&e.values) * e.vectors.adjoint();
        assert!(frob(&(rec - &h)) <= 1e-10 * frob(&h).max(1.0));
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(frob(&(gram - CMat::identity(6, 6))) <= 1e-10 * 6.0);
    }

    #[test]
    fn herm_eig_rejects() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(herm_eig(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(herm_eig(&CMat::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn svd_cases() {
        let z = svd(&CMat::zeros(3, 3)).unwrap();
        assert!(z.s.iter().all(|&x| x == 0.0));
        let mut r = rng(2);
        let u = random_unit_vector(&mut r, 3);
        let v = random_unit_vector(&mut r, 4);
        let rank1 = &u * v.adjoint();
        let s = svd(&rank1).unwrap().s;
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1..].iter().all(|&x| x < 1e-12), "{s:?}");
        let a = gaussian_cmat(&mut r, 4, 7);
        let d = svd(&a).unwrap();
        let rec = &d.u * diag(&d.s) * d.v.adjoint();
        assert!(frob(&(rec - &a)) <= 1e-10 * frob(&a));
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn norms() {
        assert!((trace_norm(&CMat::identity(4, 4)) - 4.0).abs() < 1e-12);
        assert!((op_norm(&CMat::identity(3, 3)) - 1.0).abs() < 1e-12);
        assert!((op_norm(&CMat::identity(3, 3).scale(2.0)) - 2.0).abs() < 1e-12);
        let mut r = rng(3);
        let u = random_unitary(&mut r, 5);
        let v = random_unitary(&mut r, 5);
        let c = &u * diag(&[1.0, 0.9, 0.5, 0.1, 0.0]) * v.adjoint();
        assert!(op_norm(&c) <= 1.0 + 1e-12);
    }

    #[test]
    fn tensor_identities() {
        let i2 = CMat::identity(2, 2);
        assert_eq!(tensor(&i2, &i2), CMat::identity(4, 4));
        let mut r = rng(4);
        let (a, b, c, d) = (
            gaussian_cmat(&mut r, 2, 2),
            gaussian_cmat(&mut r, 2, 2),
            gaussian_cmat(&mut r, 2, 2),
            gaussian_cmat(&mut r, 2, 2),
        );
        let lhs = tensor(&a, &b) * tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        assert!(frob(&(lhs - rhs)) < 1e-12);
        assert!((tensor(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
        // composite index (i, j) -> i*b + j
        let mut e0 = CMat::zeros(2, 2);
        e0[(1, 0)] = c64(1.0, 0.0);
        let mut e1 = CMat::zeros(3, 3);
        e1[(2, 1)] = c64(1.0, 0.0);
        assert_eq!(tensor(&e0, &e1)[(5, 1)], c64(1.0, 0.0));
    }

    #[test]
    fn partial_trace_cases() {
        let p = tensor(&CMat::identity(2, 2), &CMat::identity(3, 3));
        assert_eq!(partial_trace(&p, 2, 3, Factor::Second).unwrap(), CMat::identity(2, 2).scale(3.0));
        let mut me = CVec::zeros(4);
        me[0] = c64(0.5f64.sqrt(), 0.0);
        me[3] = c64(0.5f64.sqrt(), 0.0);
        let rho = &me * me.adjoint();
        let red = partial_trace(&rho, 2, 2, Factor::First).unwrap();
        assert!(frob(&(red - CMat::identity(2, 2).scale(0.5))) < 1e-15);
        assert!(partial_trace(&p, 3, 3, Factor::First).is_err());
    }

    #[test]
    fn permute_cases() {
        let mut r = rng(5);
        let v = random_unit_vector(&mut r, 24);
        assert_eq!(permute_vector(&v, &[2, 3, 4], &[0, 1, 2]).unwrap(), v);
        let mut e01 = CVec::zeros(4);
        e01[1] = c64(1.0, 0.0);
        let sw = permute_vector(&e01, &[2, 2], &[1, 0]).unwrap();
        assert_eq!(sw[2], c64(1.0, 0.0));
        assert!(permute_vector(&v, &[2, 3, 4], &[0, 0, 1]).is_err());
    }

    #[test]
    fn permute_matches_kronecker_swap() {
        let mut r = rng(6);
        let a = gaussian_cmat(&mut r, 2, 2);
        let b = gaussian_cmat(&mut r, 3, 3);
        let swapped = permute_systems(&tensor(&a, &b), &[2, 3], &[1, 0]).unwrap();
        assert!(frob(&(swapped - tensor(&b, &a))) < 1e-14);
    }

    #[test]
    fn sign_cases() {
        let s = sign_of_hermitian(&diag(&[2.0, -3.0])).unwrap();
        assert!(frob(&(s - diag(&[1.0, -1.0]))) < 1e-14);
        let s = sign_of_hermitian(&CMat::zeros(3, 3)).unwrap();
        assert!(frob(&(s - CMat::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn polar_cases() {
        let a = polar_unitary(&CMat::identity(3, 3)).unwrap();
        assert!(frob(&(a - CMat::identity(3, 3))) < 1e-12);
        let mut r = rng(7);
        let u = random_unitary(&mut r, 4);
        let a = polar_unitary(&u).unwrap();
        assert!(frob(&(&a - u.adjoint())) < 1e-10);
        assert!(((&a * &u).trace() - c64(4.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn permutation_sign_cases() {
        assert_eq!(permutation_sign(&[1, 2, 3, 4]).unwrap(), 1);
        assert_eq!(permutation_sign(&[2, 1, 3]).unwrap(), -1);
        assert_eq!(permutation_sign(&[2, 3, 1]).unwrap(), 1);
        assert!(matches!(permutation_sign(&[1, 1]), Err(Error::NotAPermutation)));
        assert!(matches!(permutation_sign(&[0, 1]), Err(Error::NotAPermutation)));
    }

    #[test]
    fn gsvd_trivial() {
        let i = CMat::identity(3, 3);
        let g = gsvd(&i, &CMat::zeros(3, 3)).unwrap();
        assert_eq!(g.k, 3);
        assert!(g.d1.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(g.d2.iter().all(|&x| x.abs() < 1e-12));
        let g = gsvd(&i, &i).unwrap();
        let s = 0.5f64.sqrt();
        assert!(g.d1.iter().chain(g.d2.iter()).all(|&x| (x - s).abs() < 1e-12));
        assert!(frob(&(&i * &g.u1 - g.padded(&g.d1, 3))) < 1e-10);
        assert!(frob(&(&i * &g.u2 - g.padded(&g.d2, 3))) < 1e-10);
    }

    #[test]
    fn proportionality_trivial() {
        let mut r = rng(8);
        let a = gaussian_cmat(&mut r, 3, 4);
        let b = gaussian_cmat(&mut r, 3, 4);
        let (v1, v2) = proportionality_isometries(&a, &a, &b, &b).unwrap();
        assert!(frob(&(&v1 * v1.adjoint() - CMat::identity(4, 4))) < 1e-10);
        assert!(frob(&(&v2 * v2.adjoint() - CMat::identity(4, 4))) < 1e-10);
        let z = CMat::zeros(2, 3);
        let (v1, _) = proportionality_isometries(&z, &z, &z, &z).unwrap();
        assert!(frob(&(&v1 * v1.adjoint() - CMat::identity(3, 3))) < 1e-10);
        let bad = proportionality_isometries(&a, &b, &a, &a);
        assert!(matches!(bad, Err(Error::PreconditionViolated(_))));
    }
}
