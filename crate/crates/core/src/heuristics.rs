//! Lower bounds on the biases by alternating (see-saw) maximization.
//!
//! Each half-step is exact for its block: for Hermitian classes the best
//! contraction against K is sign(K), for the complex class it is the polar
//! unitary, and for the shared state it is a top eigenvector.

use nalgebra::Schur;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::games::GameMatrix;
use crate::linalg::{c64, herm_eig_unchecked, polar_unitary, random_hermitian, spectral_sign, CMat, CVec, C64};
use crate::strategies::{bias, BiasForm, Strategy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub improvement_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { restarts: 50, max_iters: 500, improvement_tol: 1e-9, seed: 0 }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || !(self.improvement_tol > 0.0) {
            return Err(Error::BadArgs("restarts must be >= 1 and improvement_tol > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HeuristicResult {
    pub value: f64,
    pub strategy: Strategy,
    pub iterations_used: usize,
    pub restart_values: Vec<f64>,
}

fn hermitian_part(k: CMat) -> CMat {
    (&k + k.adjoint()).scale(0.5)
}

/// K with bias = Tr(A·K) for the given B and shared state (dA × dB amplitude
/// matrix; use [[1]] for product strategies).
pub fn effective_operator_for_a(g: &GameMatrix, b: &CMat, psi: &CMat) -> Result<CMat> {
    let n = g.n();
    if b.shape() != (n * psi.ncols(), n * psi.ncols()) {
        return Err(Error::DimensionMismatch(format!("B is {:?}, expected {}x{}", b.shape(), n * psi.ncols(), n * psi.ncols())));
    }
    let k = BiasForm::new(g.matrix(), n, psi.clone()).effective_a(b);
    if crate::linalg::hermitian_residual(b) <= 1e-12 {
        let res = crate::linalg::frob(&(&k - k.adjoint()));
        assert!(res <= 1e-9 * crate::linalg::frob(&k).max(1.0), "effective operator not Hermitian: {res}");
    }
    Ok(k)
}

/// K with bias = Tr(B·K) for the given A and shared state.
pub fn effective_operator_for_b(g: &GameMatrix, a: &CMat, psi: &CMat) -> Result<CMat> {
    let n = g.n();
    if a.shape() != (n * psi.nrows(), n * psi.nrows()) {
        return Err(Error::DimensionMismatch(format!("A is {:?}, expected {}x{}", a.shape(), n * psi.nrows(), n * psi.nrows())));
    }
    Ok(BiasForm::new(g.matrix(), n, psi.clone()).effective_b(a))
}

fn sign_step(k: CMat) -> CMat {
    spectral_sign(&herm_eig_unchecked(hermitian_part(k)))
}

fn polar_step(k: &CMat) -> CMat {
    polar_unitary(k).expect("square effective operator")
}

fn rng_for(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn scale_of(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

/// Two-block see-saw shared by the product and maximally entangled classes.
struct TwoBlock<'a> {
    form: BiasForm,
    complex: bool,
    cfg: &'a OptimizerConfig,
}

impl TwoBlock<'_> {
    fn value(&self, a: &CMat, b: &CMat) -> f64 {
        let v = self.form.value(a, b);
        if self.complex { v.norm() } else { v.re }
    }

    fn step(&self, k: CMat) -> CMat {
        if self.complex { polar_step(&k) } else { sign_step(k) }
    }

    /// Runs from B, returning (A, B, value, cycles).
    fn run(&self, mut b: CMat) -> (CMat, CMat, f64, usize) {
        let mut a = self.step(self.form.effective_a(&b));
        let mut value = self.value(&a, &b);
        let mut cycles = 0;
        while cycles < self.cfg.max_iters {
            cycles += 1;
            let start = value;
            b = self.step(self.form.effective_b(&a));
            let v1 = self.value(&a, &b);
            assert!(v1 >= value - scale_of(value), "see-saw decreased: {value} -> {v1}");
            a = self.step(self.form.effective_a(&b));
            let v2 = self.value(&a, &b);
            assert!(v2 >= v1 - scale_of(v1), "see-saw decreased: {v1} -> {v2}");
            value = v2;
            if value - start < self.cfg.improvement_tol {
                break;
            }
        }
        (a, b, value, cycles)
    }
}

struct Best {
    strategy: Option<Strategy>,
    value: f64,
    iterations: usize,
    values: Vec<f64>,
}

impl Best {
    fn new() -> Self {
        Best { strategy: None, value: f64::NEG_INFINITY, iterations: 0, values: Vec::new() }
    }

    fn offer(&mut self, s: Strategy, v: f64, iters: usize) {
        self.values.push(v);
        self.iterations += iters;
        if v > self.value {
            self.value = v;
            self.strategy = Some(s);
        }
    }

    fn finish(self, g: &GameMatrix) -> Result<HeuristicResult> {
        let strategy = self.strategy.expect("at least one restart");
        let value = bias(g, &strategy)?;
        let mut restart_values = self.values;
        // Reported restart values use the same evaluator as `value`.
        let top = restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if let Some(x) = restart_values.iter_mut().find(|x| **x == top) {
            *x = value;
        }
        Ok(HeuristicResult { value, strategy, iterations_used: self.iterations, restart_values })
    }
}

fn random_start(seed: u64, restart: usize, dim: usize, complex: bool) -> CMat {
    let mut rng = rng_for(seed, restart);
    if complex {
        polar_step(&crate::linalg::gaussian_cmat(&mut rng, dim, dim))
    } else {
        sign_step(random_hermitian(&mut rng, dim))
    }
}

fn product_psi() -> CMat {
    CMat::identity(1, 1)
}

fn two_block_search(
    g: &GameMatrix,
    cfg: &OptimizerConfig,
    psi: CMat,
    complex: bool,
    warm: Option<CMat>,
    wrap: impl Fn(CMat, CMat) -> Strategy,
) -> Result<HeuristicResult> {
    cfg.validate()?;
    let dim = g.n() * psi.ncols();
    let engine = TwoBlock { form: BiasForm::new(g.matrix(), g.n(), psi), complex, cfg };
    let mut best = Best::new();
    for r in 0..cfg.restarts {
        let b0 = match (r, &warm) {
            (0, Some(b)) => b.clone(),
            (0, None) => CMat::identity(dim, dim),
            _ => random_start(cfg.seed, r, dim, complex),
        };
        let (a, b, v, it) = engine.run(b0);
        best.offer(wrap(a, b), v, it);
    }
    best.finish(g)
}

/// Unentangled bias lower bound.
pub fn omega_lower(g: &GameMatrix, cfg: &OptimizerConfig) -> Result<HeuristicResult> {
    two_block_search(g, cfg, product_psi(), false, None, |a, b| Strategy::Unentangled { a, b })
}

/// Complex bias lower bound; restart 0 starts from the unentangled optimum.
pub fn omega_c_lower(g: &GameMatrix, cfg: &OptimizerConfig) -> Result<HeuristicResult> {
    let warm = omega_lower(g, cfg)?;
    omega_c_lower_from(g, cfg, &warm.strategy)
}

pub fn omega_c_lower_from(g: &GameMatrix, cfg: &OptimizerConfig, warm: &Strategy) -> Result<HeuristicResult> {
    let (_, b) = warm.operators();
    if b.shape() != (g.n(), g.n()) {
        return Err(Error::DimensionMismatch("warm start must be a product strategy".into()));
    }
    two_block_search(g, cfg, product_psi(), true, Some(b.clone()), |a, b| Strategy::Complex { a, b })
}

/// X ⊗ |0><1| + X† ⊗ |1><0|: Hermitian, with the ancilla as the last factor.
fn hermitian_dilation(x: &CMat) -> CMat {
    let mut e01 = CMat::zeros(2, 2);
    e01[(0, 1)] = c64(1.0, 0.0);
    x.kronecker(&e01) + x.adjoint().kronecker(&e01.transpose())
}

/// Embeds a product strategy into the maximally entangled class at dimension d:
/// real operators as X ⊗ I_d; complex ones (d even) through the Hermitian
/// dilation on one EPR pair, which realizes Re Tr((A⊗B)M), after rotating the
/// phase of A so that this is the modulus.
pub fn embed_in_me(g: &GameMatrix, s: &Strategy, d: usize) -> Result<Strategy> {
    match s {
        Strategy::Unentangled { a, b } => {
            let id = CMat::identity(d, d);
            Ok(Strategy::MaxEntangled { d, a: a.kronecker(&id), b: b.kronecker(&id) })
        }
        Strategy::Complex { a, b } if d % 2 == 0 => {
            let v = BiasForm::new(g.matrix(), g.n(), product_psi()).value(a, b);
            let phase = if v.norm() > 0.0 { v.conj() / v.norm() } else { c64(1.0, 0.0) };
            let a = a * phase;
            let id = CMat::identity(d / 2, d / 2);
            Ok(Strategy::MaxEntangled {
                d,
                a: hermitian_dilation(&a).kronecker(&id),
                b: hermitian_dilation(b).kronecker(&id),
            })
        }
        _ => Err(Error::BadArgs(format!("cannot embed a {:?} strategy at d = {d}", s.kind()))),
    }
}

/// Maximally entangled bias lower bound at local dimension d. Restart 0 embeds
/// the complex optimum when d is even and the unentangled one otherwise.
pub fn me_lower(g: &GameMatrix, d: usize, cfg: &OptimizerConfig) -> Result<HeuristicResult> {
    if d == 0 {
        return Err(Error::BadArgs("d must be >= 1".into()));
    }
    let real = omega_lower(g, cfg)?;
    let warm = if d % 2 == 0 {
        let cplx = omega_c_lower_from(g, cfg, &real.strategy)?;
        if cplx.value >= real.value { cplx.strategy } else { real.strategy }
    } else {
        real.strategy
    };
    me_lower_from(g, d, cfg, &embed_in_me(g, &warm, d)?)
}

pub fn me_lower_from(g: &GameMatrix, d: usize, cfg: &OptimizerConfig, warm: &Strategy) -> Result<HeuristicResult> {
    let psi = CMat::identity(d, d).unscale((d as f64).sqrt());
    let (_, b) = warm.operators();
    if b.shape() != (g.n() * d, g.n() * d) {
        return Err(Error::DimensionMismatch("warm start has the wrong dimension".into()));
    }
    two_block_search(g, cfg, psi, false, Some(b.clone()), |a, b| Strategy::MaxEntangled { d, a, b })
}

/// Pads operators on C^n ⊗ C^d to C^n ⊗ C^{d'} (d' ≥ d) with zeros.
fn pad_operator(x: &CMat, n: usize, d: usize, dp: usize) -> CMat {
    let mut out = CMat::zeros(n * dp, n * dp);
    for i in 0..n {
        for ip in 0..n {
            out.view_mut((i * dp, ip * dp), (d, d)).copy_from(&x.view((i * d, ip * d), (d, d)));
        }
    }
    out
}

/// Writes any Hermitian-class strategy as an entangled one on larger registers.
pub fn embed_in_entangled(g: &GameMatrix, s: &Strategy, da: usize, db: usize) -> Result<Strategy> {
    if matches!(s, Strategy::Complex { .. }) {
        return Err(Error::BadArgs("complex strategies have no entangled form".into()));
    }
    let (sa, sb, psi) = s.shared_state();
    if sa > da || sb > db {
        return Err(Error::DimensionMismatch(format!("cannot fit {sa}x{sb} into {da}x{db}")));
    }
    let (a, b) = s.operators();
    let n = g.n();
    let mut state = CVec::zeros(da * db);
    for p in 0..sa {
        for q in 0..sb {
            state[p * db + q] = psi[(p, q)];
        }
    }
    Ok(Strategy::Entangled { da, db, a: pad_operator(a, n, sa, da), b: pad_operator(b, n, sb, db), psi: state })
}

/// Top-|λ| unit eigenvector with its largest-magnitude entry made real positive.
fn top_eigvec(t: &CMat) -> (f64, CVec) {
    let eig = herm_eig_unchecked(hermitian_part(t.clone()));
    let k = eig.values.len();
    let idx = if eig.values[0].abs() >= eig.values[k - 1].abs() { 0 } else { k - 1 };
    let mut v: CVec = eig.vectors.column(idx).into_owned();
    let mut pivot = 0;
    for i in 0..v.len() {
        if v[i].norm() > v[pivot].norm() + 1e-12 {
            pivot = i;
        }
    }
    if v[pivot].norm() > 0.0 {
        let ph = v[pivot].conj() / v[pivot].norm();
        v *= ph;
    }
    (eig.values[idx], v)
}

fn psi_matrix(v: &CVec, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, db, |p, q| v[p * db + q])
}

/// Three-block see-saw over (A, B, ψ). Restart 0 pads the maximally entangled
/// optimum at d = min(dA, dB).
pub fn entangled_lower(g: &GameMatrix, da: usize, db: usize, cfg: &OptimizerConfig) -> Result<HeuristicResult> {
    if da == 0 || db == 0 {
        return Err(Error::BadArgs("dimensions must be >= 1".into()));
    }
    let me = me_lower(g, da.min(db), cfg)?;
    entangled_lower_from(g, da, db, cfg, Some(&embed_in_entangled(g, &me.strategy, da, db)?))
}

pub fn entangled_lower_from(
    g: &GameMatrix,
    da: usize,
    db: usize,
    cfg: &OptimizerConfig,
    warm: Option<&Strategy>,
) -> Result<HeuristicResult> {
    cfg.validate()?;
    let n = g.n();
    let mut best = Best::new();
    for r in 0..cfg.restarts {
        let (mut a, mut b, mut psi) = match (r, warm) {
            (0, Some(Strategy::Entangled { da: wa, db: wb, a, b, psi })) if *wa == da && *wb == db => {
                (a.clone(), b.clone(), psi.clone())
            }
            (0, Some(_)) => return Err(Error::DimensionMismatch("warm start has the wrong shape".into())),
            _ => {
                let mut rng = rng_for(cfg.seed, r);
                let a = random_hermitian(&mut rng, n * da);
                let b = sign_step(random_hermitian(&mut rng, n * db));
                let psi = crate::linalg::random_unit_vector(&mut rng, da * db);
                (a, b, psi)
            }
        };
        let mut value = f64::NEG_INFINITY;
        let mut cycles = 0;
        while cycles < cfg.max_iters {
            cycles += 1;
            let start = value;
            let form = BiasForm::new(g.matrix(), n, psi_matrix(&psi, da, db));
            a = sign_step(form.effective_a(&b));
            let v1 = form.value(&a, &b).re;
            assert!(v1 >= value - scale_of(value), "see-saw decreased: {value} -> {v1}");
            b = sign_step(form.effective_b(&a));
            let v2 = form.value(&a, &b).re;
            assert!(v2 >= v1 - scale_of(v1), "see-saw decreased: {v1} -> {v2}");
            let (lam, v) = top_eigvec(&form.state_operator(&a, &b));
            if lam < 0.0 {
                a = -a;
            }
            psi = v;
            value = lam.abs();
            assert!(value >= v2 - scale_of(v2), "see-saw decreased: {v2} -> {value}");
            if value - start < cfg.improvement_tol {
                break;
            }
        }
        best.offer(Strategy::Entangled { da, db, a, b, psi }, value, cycles);
    }
    best.finish(g)
}

/// Rounds a complex strategy to real signs: eigen-decompose the unitaries,
/// scan 720 global phases, then flip single signs while that helps.
pub fn round_complex_to_real(g: &GameMatrix, s: &Strategy) -> Result<Strategy> {
    let (a, b) = match s {
        Strategy::Complex { a, b } => (a, b),
        _ => return Err(Error::BadArgs("expected a complex strategy".into())),
    };
    s.check_shapes(g.n())?;
    let unitary = |x: &CMat| -> Result<CMat> {
        let id = CMat::identity(x.nrows(), x.ncols());
        if crate::linalg::frob(&(x.adjoint() * x - id)) <= 1e-8 { Ok(x.clone()) } else { polar_unitary(x) }
    };
    let (ua, la) = unitary_eigen(&unitary(a)?);
    let (ub, lb) = unitary_eigen(&unitary(b)?);
    let n = g.n();
    // c[i][j] = <u_i v_j| M |u_i v_j>
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let w = ua.column(i).kronecker(&ub.column(j));
                    (w.adjoint() * g.matrix() * &w)[(0, 0)].re
                })
                .collect()
        })
        .collect();
    let score = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * y[j] * c[i][j];
            }
        }
        s.abs()
    };
    let sgn = |z: f64| if z >= 0.0 { 1.0 } else { -1.0 };
    let mut best_x = vec![1.0; n];
    let mut best_y = vec![1.0; n];
    let mut best = f64::NEG_INFINITY;
    for step in 0..720 {
        let th = step as f64 * std::f64::consts::PI / 360.0;
        let rot = C64::from_polar(1.0, -th);
        let x: Vec<f64> = la.iter().map(|l| sgn((rot * l).re)).collect();
        let y: Vec<f64> = lb.iter().map(|l| sgn((rot.conj() * l).re)).collect();
        let v = score(&x, &y);
        if v > best + 1e-15 {
            best = v;
            best_x = x;
            best_y = y;
        }
    }
    loop {
        let mut improved = false;
        for k in 0..2 * n {
            let (vec, i) = if k < n { (&mut best_x, k) } else { (&mut best_y, k - n) };
            vec[i] = -vec[i];
            let v = score(&best_x, &best_y);
            if v > best + 1e-12 {
                best = v;
                improved = true;
            } else {
                let (vec, i) = if k < n { (&mut best_x, k) } else { (&mut best_y, k - n) };
                vec[i] = -vec[i];
            }
        }
        if !improved {
            break;
        }
    }
    let build = |u: &CMat, signs: &[f64]| -> CMat {
        let mut scaled = u.clone();
        for (i, &s) in signs.iter().enumerate() {
            if s < 0.0 {
                scaled.column_mut(i).neg_mut();
            }
        }
        hermitian_part(&scaled * u.adjoint())
    };
    let mut a2 = build(&ua, &best_x);
    let b2 = build(&ub, &best_y);
    if BiasForm::new(g.matrix(), n, product_psi()).value(&a2, &b2).re < 0.0 {
        a2 = -a2;
    }
    Ok(Strategy::Unentangled { a: a2, b: b2 })
}

/// Eigenvectors (orthonormalized columns) and eigenvalues of a unitary.
fn unitary_eigen(u: &CMat) -> (CMat, Vec<C64>) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let vals = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    (q, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{chsh, from_classical, h_game, t_game};
    use crate::linalg::{gaussian_cmat, random_hermitian};

    fn cfg(restarts: usize) -> OptimizerConfig {
        OptimizerConfig { restarts, ..OptimizerConfig::default() }
    }

    #[test]
    fn effective_operators_reproduce_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = h_game(1).unwrap();
        let psi = gaussian_cmat(&mut rng, 2, 3);
        let psi = psi.unscale(psi.norm());
        let a = random_hermitian(&mut rng, 6);
        let b = random_hermitian(&mut rng, 9);
        let s = Strategy::Entangled {
            da: 2,
            db: 3,
            a: a.clone(),
            b: b.clone(),
            psi: CVec::from_iterator(6, psi.transpose().iter().copied()),
        };
        let v = crate::strategies::bias_dense(&g, &s).unwrap();
        let ka = effective_operator_for_a(&g, &b, &psi).unwrap();
        let kb = effective_operator_for_b(&g, &a, &psi).unwrap();
        assert!(((&a * ka).trace().re - v).abs() < 1e-10);
        assert!(((&b * kb).trace().re - v).abs() < 1e-10);
        assert!(effective_operator_for_a(&g, &CMat::zeros(3, 3), &psi).is_err());
    }

    #[test]
    fn classical_effective_operator_is_diagonal() {
        let g = from_classical(&chsh());
        let mut b = CMat::identity(2, 2);
        b[(1, 1)] = c64(-1.0, 0.0);
        let k = effective_operator_for_a(&g, &b, &product_psi()).unwrap();
        assert!((k[(0, 0)].re - 0.0).abs() < 1e-15 && (k[(1, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(k[(0, 1)], c64(0.0, 0.0));
        let z = effective_operator_for_a(&g, &CMat::zeros(2, 2), &product_psi()).unwrap();
        assert_eq!(z, CMat::zeros(2, 2));
    }

    #[test]
    fn chsh_chain() {
        let g = from_classical(&chsh());
        let r = omega_lower(&g, &cfg(5)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6);
        let c = omega_c_lower(&g, &cfg(5)).unwrap();
        assert!((c.value - 0.5f64.sqrt()).abs() < 1e-4, "{}", c.value);
        let rounded = round_complex_to_real(&g, &c.strategy).unwrap();
        assert!(bias(&g, &rounded).unwrap() >= 0.5 - 1e-6);
        let me = me_lower(&g, 2, &cfg(3)).unwrap();
        assert!(me.value >= c.value - 1e-6);
    }

    #[test]
    fn t_and_h_values() {
        let g = t_game(3).unwrap();
        let r = omega_lower(&g, &cfg(10)).unwrap();
        assert!((r.value - 1.0 / 3f64.sqrt()).abs() < 1e-3);
        let h = h_game(1).unwrap();
        let r = omega_lower(&h, &cfg(10)).unwrap();
        assert!((r.value - 0.4).abs() < 1e-3);
        let t1 = t_game(1).unwrap();
        let e = entangled_lower(&t1, 1, 1, &cfg(3)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let g = h_game(1).unwrap();
        let a = me_lower(&g, 2, &cfg(4)).unwrap();
        let b = me_lower(&g, 2, &cfg(4)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.strategy, b.strategy);
        assert_eq!(a.restart_values, b.restart_values);
    }

    #[test]
    fn real_strategy_is_a_fixed_point_of_rounding() {
        let g = from_classical(&chsh());
        let r = omega_lower(&g, &cfg(3)).unwrap();
        let (a, b) = r.strategy.operators();
        let s = Strategy::Complex { a: a.clone(), b: b.clone() };
        let out = round_complex_to_real(&g, &s).unwrap();
        let (a2, b2) = out.operators();
        let sign = if (a2 - a).norm() < 1e-9 { 1.0 } else { -1.0 };
        assert!((a2 - a.scale(sign)).norm() < 1e-9);
        assert!((b2 - b).norm() < 1e-9);
    }
}
