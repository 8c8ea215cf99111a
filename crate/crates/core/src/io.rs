//! JSON file formats: games, strategies, SDP instances, relaxation results.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{validate, GameMatrix};
use crate::linalg::{c64, CMat, CVec};
use crate::relaxations::{RelaxationResult, VectorValuedMatrix, Witness};
use crate::sdp::{Block, CertReport, Constraint, Entry, SdpInstance, SdpSolution};
use crate::strategies::Strategy;

pub const GAME_FORMAT: &str = "xorq-game-v1";
pub const STRATEGY_FORMAT: &str = "xorq-strategy-v1";
pub const SDP_FORMAT: &str = "xorq-sdp-v1";
pub const RESULT_FORMAT: &str = "xorq-result-v1";
pub const SOLUTION_FORMAT: &str = "xorq-sdp-solution-v1";

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn check_format(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!("expected format {expected:?}, found {found:?}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct GameEntry {
    pub c: usize,
    pub im: f64,
    pub r: usize,
    pub re: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub entries: Vec<GameEntry>,
    pub format: String,
    pub n: usize,
}

pub fn game_to_file(g: &GameMatrix) -> GameFile {
    let m = g.matrix();
    let mut entries = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.norm() > 0.0 {
                entries.push(GameEntry { c, im: z.im, r, re: z.re });
            }
        }
    }
    GameFile { entries, format: GAME_FORMAT.into(), n: g.n() }
}

pub fn game_from_file(f: &GameFile) -> Result<GameMatrix> {
    check_format(&f.format, GAME_FORMAT)?;
    if f.n == 0 {
        return Err(Error::Format("n must be >= 1".into()));
    }
    let dim = f.n * f.n;
    let mut m = CMat::zeros(dim, dim);
    for e in &f.entries {
        if e.r >= dim || e.c >= dim {
            return Err(Error::Format(format!("entry ({}, {}) outside {dim}x{dim}", e.r, e.c)));
        }
        m[(e.r, e.c)] += c64(e.re, e.im);
    }
    validate(&m, f.n)
}

pub fn game_to_json(g: &GameMatrix) -> Result<Vec<u8>> {
    to_json_bytes(&game_to_file(g))
}

pub fn game_from_json(bytes: &[u8]) -> Result<GameMatrix> {
    let f: GameFile = serde_json::from_slice(bytes)?;
    game_from_file(&f)
}

pub fn read_game(path: &Path) -> Result<GameMatrix> {
    game_from_json(&std::fs::read(path)?)
}

pub fn write_game(path: &Path, g: &GameMatrix) -> Result<()> {
    write_atomic(path, &game_to_json(g)?)
}

fn mat_pairs(m: &CMat) -> Vec<[f64; 2]> {
    (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| [m[(r, c)].re, m[(r, c)].im]).collect()
}

fn pairs_mat(p: &[[f64; 2]], dim: usize, what: &str) -> Result<CMat> {
    if p.len() != dim * dim {
        return Err(Error::Format(format!("{what} has {} entries, expected {}", p.len(), dim * dim)));
    }
    Ok(CMat::from_fn(dim, dim, |r, c| c64(p[r * dim + c][0], p[r * dim + c][1])))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    #[serde(rename = "A")]
    pub a: Vec<[f64; 2]>,
    #[serde(rename = "B")]
    pub b: Vec<[f64; 2]>,
    #[serde(rename = "dA")]
    pub da: usize,
    #[serde(rename = "dB")]
    pub db: usize,
    pub format: String,
    pub kind: String,
    pub n: usize,
    #[serde(default)]
    pub psi: Vec<[f64; 2]>,
}

pub fn strategy_to_file(s: &Strategy, n: usize) -> StrategyFile {
    let (da, db, _) = s.shared_state();
    let (a, b) = s.operators();
    let (kind, psi) = match s {
        Strategy::Unentangled { .. } => ("unentangled", vec![]),
        Strategy::Complex { .. } => ("complex", vec![]),
        Strategy::MaxEntangled { .. } => ("maxent", vec![]),
        Strategy::Entangled { psi, .. } => ("entangled", psi.iter().map(|z| [z.re, z.im]).collect()),
    };
    StrategyFile { a: mat_pairs(a), b: mat_pairs(b), da, db, format: STRATEGY_FORMAT.into(), kind: kind.into(), n, psi }
}

pub fn strategy_from_file(f: &StrategyFile) -> Result<(usize, Strategy)> {
    check_format(&f.format, STRATEGY_FORMAT)?;
    let a = pairs_mat(&f.a, f.n * f.da, "A")?;
    let b = pairs_mat(&f.b, f.n * f.db, "B")?;
    let s = match f.kind.as_str() {
        "unentangled" | "complex" if f.da != 1 || f.db != 1 => {
            return Err(Error::Format("product strategies need dA = dB = 1".into()))
        }
        "unentangled" => Strategy::Unentangled { a, b },
        "complex" => Strategy::Complex { a, b },
        "maxent" if f.da != f.db => return Err(Error::Format("maxent needs dA = dB".into())),
        "maxent" => Strategy::MaxEntangled { d: f.da, a, b },
        "entangled" => {
            if f.psi.len() != f.da * f.db {
                return Err(Error::Format(format!("psi has {} entries, expected {}", f.psi.len(), f.da * f.db)));
            }
            let psi = CVec::from_iterator(f.psi.len(), f.psi.iter().map(|p| c64(p[0], p[1])));
            Strategy::Entangled { da: f.da, db: f.db, a, b, psi }
        }
        other => return Err(Error::Format(format!("unknown strategy kind {other:?}"))),
    };
    s.check(f.n)?;
    Ok((f.n, s))
}

pub fn strategy_to_json(s: &Strategy, n: usize) -> Result<Vec<u8>> {
    to_json_bytes(&strategy_to_file(s, n))
}

pub fn strategy_from_json(bytes: &[u8]) -> Result<(usize, Strategy)> {
    strategy_from_file(&serde_json::from_slice(bytes)?)
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SdpEntry {
    pub b: usize,
    pub c: usize,
    pub im: f64,
    pub r: usize,
    pub re: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SdpBlock {
    pub dim: usize,
    pub label: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SdpConstraint {
    pub entries: Vec<SdpEntry>,
    pub rhs: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SdpFile {
    pub blocks: Vec<SdpBlock>,
    pub constraints: Vec<SdpConstraint>,
    pub format: String,
    pub objective: Vec<SdpEntry>,
}

fn entries_out(es: &[Entry]) -> Vec<SdpEntry> {
    es.iter().map(|e| SdpEntry { b: e.block, c: e.c, im: e.v.im, r: e.r, re: e.v.re }).collect()
}

fn entries_in(es: &[SdpEntry]) -> Vec<Entry> {
    es.iter().map(|e| Entry { block: e.b, r: e.r, c: e.c, v: c64(e.re, e.im) }).collect()
}

pub fn sdp_to_file(inst: &SdpInstance) -> SdpFile {
    SdpFile {
        blocks: inst.blocks.iter().map(|b| SdpBlock { dim: b.dim, label: b.label.clone() }).collect(),
        constraints: inst
            .constraints
            .iter()
            .map(|c| SdpConstraint { entries: entries_out(&c.entries), rhs: c.rhs })
            .collect(),
        format: SDP_FORMAT.into(),
        objective: entries_out(&inst.objective),
    }
}

pub fn sdp_from_file(f: &SdpFile) -> Result<SdpInstance> {
    check_format(&f.format, SDP_FORMAT)?;
    let inst = SdpInstance {
        blocks: f.blocks.iter().map(|b| Block { label: b.label.clone(), dim: b.dim }).collect(),
        objective: entries_in(&f.objective),
        constraints: f
            .constraints
            .iter()
            .map(|c| Constraint { entries: entries_in(&c.entries), rhs: c.rhs })
            .collect(),
    };
    inst.validate()?;
    Ok(inst)
}

pub fn sdp_to_json(inst: &SdpInstance) -> Result<Vec<u8>> {
    to_json_bytes(&sdp_to_file(inst))
}

pub fn sdp_from_json(bytes: &[u8]) -> Result<SdpInstance> {
    sdp_from_file(&serde_json::from_slice(bytes)?)
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CertFile {
    pub dual_min_eigenvalue: f64,
    pub gap: f64,
    pub max_residual: f64,
    pub min_eigenvalue: f64,
    pub pass: bool,
    pub violations: Vec<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub blocks: Vec<Vec<[f64; 2]>>,
    pub certificate: CertFile,
    pub dual_value: f64,
    pub format: String,
    pub gap: f64,
    pub iterations: usize,
    pub primal_value: f64,
    pub tol: f64,
    pub y: Vec<f64>,
}

pub fn solution_to_file(sol: &SdpSolution, cert: &CertReport) -> SolutionFile {
    SolutionFile {
        blocks: sol.blocks.iter().map(mat_pairs).collect(),
        certificate: CertFile {
            dual_min_eigenvalue: cert.dual_min_eigenvalue,
            gap: cert.gap,
            max_residual: cert.max_residual,
            min_eigenvalue: cert.min_eigenvalue,
            pass: cert.pass,
            violations: cert.violations.clone(),
        },
        dual_value: sol.dual_value,
        format: SOLUTION_FORMAT.into(),
        gap: sol.gap,
        iterations: sol.iterations,
        primal_value: sol.primal_value,
        tol: sol.tol,
        y: sol.y.clone(),
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct WitnessFile {
    /// Family name → list of row-major component matrices (or vectors for β^sdp).
    pub families: std::collections::BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    pub kind: String,
    pub n: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ResultFile {
    pub dual_value: f64,
    pub format: String,
    pub relaxation: String,
    pub solver_gap: f64,
    pub value: f64,
    pub witness: WitnessFile,
}

fn vvm_out(x: &VectorValuedMatrix) -> Vec<Vec<[f64; 2]>> {
    x.mats.iter().map(mat_pairs).collect()
}

fn vvm_in(p: &[Vec<[f64; 2]>], n: usize) -> Result<VectorValuedMatrix> {
    let mats = p.iter().map(|m| pairs_mat(m, n, "witness component")).collect::<Result<Vec<_>>>()?;
    VectorValuedMatrix::new(n, mats)
}

pub fn result_to_file(name: &str, r: &RelaxationResult) -> ResultFile {
    let mut families = std::collections::BTreeMap::new();
    let (kind, n) = match &r.witness {
        Witness::Sdp { x, y } => {
            let vecs = |v: &[CVec]| v.iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect()).collect();
            families.insert("x".to_string(), vecs(x));
            families.insert("y".to_string(), vecs(y));
            ("sdp", x.len())
        }
        Witness::Nc { x, y } => {
            families.insert("x".to_string(), vvm_out(x));
            families.insert("y".to_string(), vvm_out(y));
            ("nc", x.n)
        }
        Witness::Os { xr, xc, yr, yc } => {
            families.insert("x_c".to_string(), vvm_out(xc));
            families.insert("x_r".to_string(), vvm_out(xr));
            families.insert("y_c".to_string(), vvm_out(yc));
            families.insert("y_r".to_string(), vvm_out(yr));
            ("os", xr.n)
        }
    };
    ResultFile {
        dual_value: r.dual_value,
        format: RESULT_FORMAT.into(),
        relaxation: name.into(),
        solver_gap: r.solver_gap,
        value: r.value,
        witness: WitnessFile { families, kind: kind.into(), n },
    }
}

pub fn result_from_file(f: &ResultFile) -> Result<RelaxationResult> {
    check_format(&f.format, RESULT_FORMAT)?;
    let w = &f.witness;
    let fam = |k: &str| w.families.get(k).ok_or_else(|| Error::Format(format!("missing witness family {k}")));
    let witness = match w.kind.as_str() {
        "sdp" => {
            let vecs = |v: &Vec<Vec<[f64; 2]>>| -> Vec<CVec> {
                v.iter().map(|c| CVec::from_iterator(c.len(), c.iter().map(|p| c64(p[0], p[1])))).collect()
            };
            Witness::Sdp { x: vecs(fam("x")?), y: vecs(fam("y")?) }
        }
        "nc" => Witness::Nc { x: vvm_in(fam("x")?, w.n)?, y: vvm_in(fam("y")?, w.n)? },
        "os" => Witness::Os {
            xr: vvm_in(fam("x_r")?, w.n)?,
            xc: vvm_in(fam("x_c")?, w.n)?,
            yr: vvm_in(fam("y_r")?, w.n)?,
            yc: vvm_in(fam("y_c")?, w.n)?,
        },
        other => return Err(Error::Format(format!("unknown witness kind {other:?}"))),
    };
    Ok(RelaxationResult { value: f.value, witness, solver_gap: f.solver_gap, dual_value: f.dual_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{h_game, t_game};
    use crate::strategies::t_entangled_strategy;

    #[test]
    fn game_round_trip_and_stable_bytes() {
        let g = h_game(1).unwrap();
        let bytes = game_to_json(&g).unwrap();
        assert_eq!(game_from_json(&bytes).unwrap(), g);
        assert_eq!(bytes, game_to_json(&game_from_json(&bytes).unwrap()).unwrap());
        assert!(game_from_json(b"{\"format\":\"nope\",\"n\":1,\"entries\":[]}").is_err());
        assert!(game_from_json(b"not json").is_err());
    }

    #[test]
    fn strategy_round_trip() {
        let s = t_entangled_strategy(1, 2).unwrap();
        let bytes = strategy_to_json(&s, 2).unwrap();
        let (n, back) = strategy_from_json(&bytes).unwrap();
        assert_eq!(n, 2);
        assert_eq!(back, s);
    }

    #[test]
    fn sdp_round_trip() {
        let inst = crate::relaxations::beta_nc_instance(&t_game(1).unwrap());
        let bytes = sdp_to_json(&inst).unwrap();
        assert_eq!(sdp_from_json(&bytes).unwrap(), inst);
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.json");
        write_game(&p, &t_game(2).unwrap()).unwrap();
        assert_eq!(read_game(&p).unwrap(), t_game(2).unwrap());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
