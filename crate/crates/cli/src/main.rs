use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Deserialize;
use xorq::games::{self, ClassicalGame, GameMatrix};
use xorq::heuristics::{entangled_lower, me_lower, omega_c_lower_from, omega_lower, OptimizerConfig};
use xorq::io;
use xorq::linalg::{c64, trace_norm, CMat};
use xorq::relaxations::{self, check_chains};
use xorq::report::{self, BiasReport, EntangledValue, MeValue, TableRow};
use xorq::sdp;

#[derive(Parser)]
#[command(name = "xorq", version, about = "Bias bounds for quantum XOR games")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a game file (xorq-game-v1).
    Game(GameArgs),
    /// Compute lower and upper bounds on the biases of a game.
    Bias(BiasArgs),
    /// Reference tables.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Direct access to the SDP solver.
    #[command(subcommand)]
    Sdp(SdpCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Relative solver tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// See-saw restarts per quantity.
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn cfg(&self) -> Result<OptimizerConfig, Failure> {
        if !(self.tol > 0.0) {
            return Err(Failure::Args("--tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Failure::Args("--restarts must be >= 1".into()));
        }
        Ok(OptimizerConfig { restarts: self.restarts, seed: self.seed, ..OptimizerConfig::default() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GameName {
    Chsh,
    Tn,
    Hn,
    Cn,
    ClassicalFile,
    MatrixFile,
    Tensor,
}

#[derive(Args, Debug)]
struct GameArgs {
    #[arg(long, value_enum)]
    name: GameName,
    /// Size parameter for tn, hn and cn.
    #[arg(long)]
    param: Option<usize>,
    /// Input file(s): one for classical-file and matrix-file, two game files for tensor.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Rescale file input to unit trace norm.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BiasArgs {
    /// Game file (xorq-game-v1).
    game: PathBuf,
    /// Comma-separated: omega, omega-c, me:<d>, ent:<dA>x<dB>, beta-sdp, beta-nc, beta-os, chains.
    #[arg(long, default_value = "omega,omega-c,beta-nc,beta-os,chains")]
    quantities: String,
    /// Include per-quantity runtimes (breaks byte stability).
    #[arg(long)]
    runtimes: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Computed-vs-expected table; with --out PREFIX writes PREFIX.csv and PREFIX.json.
    #[command(name = "paper-table")]
    ReferenceTable(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Relaxation {
    Sdp,
    Nc,
    Os,
}

#[derive(Subcommand)]
enum SdpCmd {
    /// Solve an instance file (xorq-sdp-v1) and print the certified solution.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the relaxation instance of a game.
    Instance {
        game: PathBuf,
        #[arg(long, value_enum)]
        relaxation: Relaxation,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Args(String),
    Solver(String),
}

impl From<xorq::Error> for Failure {
    fn from(e: xorq::Error) -> Self {
        use xorq::Error::*;
        match e {
            Infeasible(_) | Unbounded(_) | MaxIterations { .. } | Numeric(_) => Failure::Solver(e.to_string()),
            _ => Failure::Args(e.to_string()),
        }
    }
}

const EXIT_CHAIN: u8 = 3;

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => io::write_atomic(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(xorq::Error::from)?;
        }
    }
    Ok(())
}

fn json_bytes(v: &serde_json::Value) -> Result<Vec<u8>, Failure> {
    Ok(io::to_json_bytes(v)?)
}

fn param(a: &GameArgs) -> Result<usize, Failure> {
    a.param.ok_or_else(|| Failure::Args(format!("--name {:?} needs --param", a.name).to_lowercase()))
}

fn single_input(a: &GameArgs) -> Result<&Path, Failure> {
    match a.input.as_slice() {
        [p] => Ok(p),
        _ => Err(Failure::Args("expected exactly one --input".into())),
    }
}

fn read_text(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::Args(format!("{}: {e}", p.display())))
}

/// Whitespace- or comma-separated rows of R[s,t]; '#' starts a comment.
fn parse_classical(text: &str, normalize: bool) -> Result<ClassicalGame, Failure> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Failure::Args(format!("line {}: {t:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Args("classical file must hold a non-empty square matrix".into()));
    }
    let mut r = DMatrix::from_fn(n, n, |s, t| rows[s][t]);
    if normalize {
        let total: f64 = r.iter().map(|x| x.abs()).sum();
        if total > 0.0 {
            r /= total;
        }
    }
    Ok(ClassicalGame::new(r)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    n: usize,
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

fn parse_matrix(text: &str, normalize: bool) -> Result<GameMatrix, Failure> {
    let f: MatrixFile = serde_json::from_str(text).map_err(|e| Failure::Args(format!("matrix file: {e}")))?;
    let dim = f.n * f.n;
    let shape_ok = |m: &Vec<Vec<f64>>| m.len() == dim && m.iter().all(|r| r.len() == dim);
    if f.n == 0 || !shape_ok(&f.re) || !f.im.as_ref().is_none_or(shape_ok) {
        return Err(Failure::Args(format!("matrix file must hold {dim}x{dim} arrays")));
    }
    let mut m = CMat::from_fn(dim, dim, |r, c| c64(f.re[r][c], f.im.as_ref().map_or(0.0, |im| im[r][c])));
    if normalize {
        let t = trace_norm(&m);
        if t > 0.0 {
            m = m.unscale(t);
        }
    }
    Ok(games::validate(&m, f.n)?)
}

fn cmd_game(a: GameArgs) -> Result<u8, Failure> {
    let g = match a.name {
        GameName::Chsh => games::from_classical(&games::chsh()),
        GameName::Tn => games::t_game(param(&a)?)?,
        GameName::Hn => games::h_game(param(&a)?)?,
        GameName::Cn => games::c_game(param(&a)?)?,
        GameName::ClassicalFile => games::from_classical(&parse_classical(&read_text(single_input(&a)?)?, a.normalize)?),
        GameName::MatrixFile => parse_matrix(&read_text(single_input(&a)?)?, a.normalize)?,
        GameName::Tensor => match a.input.as_slice() {
            [x, y] => games::tensor_games(&io::read_game(x)?, &io::read_game(y)?),
            _ => return Err(Failure::Args("tensor needs exactly two --input game files".into())),
        },
    };
    emit(&a.out, &io::game_to_json(&g)?)?;
    Ok(0)
}

#[derive(Clone, Debug, PartialEq)]
enum Quantity {
    Omega,
    OmegaC,
    Me(usize),
    Ent(usize, usize),
    BetaSdp,
    BetaNc,
    BetaOs,
    Chains,
}

fn parse_dim(s: &str, what: &str) -> Result<usize, Failure> {
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(d),
        _ => Err(Failure::Args(format!("bad dimension {s:?} in {what}"))),
    }
}

fn parse_quantities(s: &str) -> Result<Vec<Quantity>, Failure> {
    let mut out = Vec::new();
    for q in s.split(',').map(str::trim).filter(|q| !q.is_empty()) {
        let parsed = match q {
            "omega" => Quantity::Omega,
            "omega-c" => Quantity::OmegaC,
            "beta-sdp" => Quantity::BetaSdp,
            "beta-nc" => Quantity::BetaNc,
            "beta-os" => Quantity::BetaOs,
            "chains" => Quantity::Chains,
            _ => {
                if let Some(d) = q.strip_prefix("me:") {
                    Quantity::Me(parse_dim(d, q)?)
                } else if let Some(dims) = q.strip_prefix("ent:") {
                    let (a, b) = dims.split_once('x').ok_or_else(|| Failure::Args(format!("expected ent:<dA>x<dB>, got {q:?}")))?;
                    Quantity::Ent(parse_dim(a, q)?, parse_dim(b, q)?)
                } else {
                    return Err(Failure::Args(format!("unknown quantity {q:?}")));
                }
            }
        };
        if !out.contains(&parsed) {
            out.push(parsed);
        }
    }
    if out.is_empty() {
        return Err(Failure::Args("no quantities requested".into()));
    }
    Ok(out)
}

fn game_label(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn bias_report(g: &GameMatrix, label: &str, qs: &[Quantity], common: &Common) -> Result<BiasReport, Failure> {
    let cfg = common.cfg()?;
    let tol = common.tol;
    let mut rep = BiasReport {
        game: label.to_string(),
        n: g.n(),
        trace_norm: g.trace_norm(),
        seed: cfg.seed,
        restarts: cfg.restarts,
        tol,
        ..BiasReport::default()
    };
    let classical = g.as_classical();
    if qs.contains(&Quantity::BetaSdp) && classical.is_none() {
        return Err(Failure::Args("beta-sdp needs a classical (diagonal) game".into()));
    }
    let mut omega_strategy = None;
    for q in qs {
        let t0 = Instant::now();
        let key = match q {
            Quantity::Omega | Quantity::OmegaC => {
                if omega_strategy.is_none() {
                    eprintln!("xorq: omega_lower");
                    let r = omega_lower(g, &cfg)?;
                    rep.omega_lower = Some(r.value);
                    omega_strategy = Some(r.strategy);
                }
                if *q == Quantity::OmegaC {
                    eprintln!("xorq: omega_c_lower");
                    let warm = omega_strategy.as_ref().expect("computed above");
                    rep.omega_c_lower = Some(omega_c_lower_from(g, &cfg, warm)?.value);
                    "omega_c_lower".to_string()
                } else {
                    "omega_lower".to_string()
                }
            }
            Quantity::Me(d) => {
                eprintln!("xorq: me_lower d={d}");
                rep.me_lower.push(MeValue { d: *d, value: me_lower(g, *d, &cfg)?.value });
                format!("me_lower[d={d}]")
            }
            Quantity::Ent(da, db) => {
                eprintln!("xorq: entangled_lower {da}x{db}");
                rep.entangled_lower = Some(EntangledValue { da: *da, db: *db, value: entangled_lower(g, *da, *db, &cfg)?.value });
                format!("entangled_lower[{da}x{db}]")
            }
            Quantity::BetaSdp => {
                eprintln!("xorq: beta_sdp");
                let cg = classical.as_ref().expect("checked above");
                rep.beta_sdp = Some(relaxations::beta_sdp(cg, tol)?.value);
                "beta_sdp".to_string()
            }
            Quantity::BetaNc => {
                eprintln!("xorq: beta_nc");
                rep.beta_nc = Some(relaxations::beta_nc(g, tol)?.value);
                "beta_nc".to_string()
            }
            Quantity::BetaOs => {
                eprintln!("xorq: beta_os");
                rep.beta_os = Some(relaxations::beta_os(g, tol)?.value);
                "beta_os".to_string()
            }
            Quantity::Chains => continue,
        };
        rep.runtimes.insert(key, t0.elapsed().as_secs_f64());
    }
    rep.chains = check_chains(g, &rep);
    Ok(rep)
}

fn cmd_bias(a: BiasArgs) -> Result<u8, Failure> {
    let qs = parse_quantities(&a.quantities)?;
    let g = io::read_game(&a.game)?;
    let rep = bias_report(&g, &game_label(&a.game), &qs, &a.common)?;
    let bytes = match a.common.format {
        Format::Json => json_bytes(&rep.to_json(a.runtimes))?,
        Format::Csv => rep.to_csv(a.runtimes).into_bytes(),
        Format::Text => rep.to_text(a.runtimes).into_bytes(),
    };
    emit(&a.common.out, &bytes)?;
    let failures = rep.hard_failures();
    if !failures.is_empty() {
        for c in failures {
            eprintln!("xorq: chain check failed: {} ({} > {})", c.label, c.lhs, c.rhs);
        }
        return Ok(EXIT_CHAIN);
    }
    Ok(0)
}

fn table_text(rows: &[TableRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:<24} {} {} {} tol {} {}\n",
            r.game,
            r.quantity,
            report::fmt12(r.computed),
            r.relation.symbol(),
            report::fmt12(r.expected),
            report::fmt12(r.tol),
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    out
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_reference_table(c: Common) -> Result<u8, Failure> {
    let cfg = c.cfg()?;
    eprintln!("xorq: running the reference corpus");
    let rows = report::reference_table(&cfg, c.tol)?;
    let csv = report::table_csv(&rows);
    let json = json_bytes(&report::table_json(&rows))?;
    match &c.out {
        Some(prefix) => {
            io::write_atomic(&with_extension(prefix, "csv"), csv.as_bytes())?;
            io::write_atomic(&with_extension(prefix, "json"), &json)?;
        }
        None => {
            let bytes = match c.format {
                Format::Json => json,
                Format::Csv => csv.into_bytes(),
                Format::Text => table_text(&rows).into_bytes(),
            };
            emit(&None, &bytes)?;
        }
    }
    let failed: Vec<&TableRow> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("xorq: {} {} = {} fails {} {}", r.game, r.quantity, r.computed, r.relation.symbol(), r.expected);
    }
    Ok(if failed.is_empty() { 0 } else { EXIT_CHAIN })
}

fn cmd_sdp(c: SdpCmd) -> Result<u8, Failure> {
    match c {
        SdpCmd::Solve { instance, tol, out } => {
            if !(tol > 0.0) {
                return Err(Failure::Args("--tol must be positive".into()));
            }
            let inst = io::sdp_from_json(&std::fs::read(&instance).map_err(xorq::Error::from)?)?;
            let sol = sdp::solve(&inst, tol)?;
            let cert = sdp::certify(&inst, &sol);
            emit(&out, &io::to_json_bytes(&io::solution_to_file(&sol, &cert))?)?;
            if !cert.pass {
                return Err(Failure::Solver(format!("certificate failed: {}", cert.violations.join("; "))));
            }
            Ok(0)
        }
        SdpCmd::Instance { game, relaxation, out } => {
            let g = io::read_game(&game)?;
            let inst = match relaxation {
                Relaxation::Sdp => {
                    let cg = g.as_classical().ok_or_else(|| Failure::Args("the sdp relaxation needs a classical game".into()))?;
                    relaxations::beta_sdp_instance(&cg)
                }
                Relaxation::Nc => relaxations::beta_nc_instance(&g),
                Relaxation::Os => relaxations::beta_os_instance(&g),
            };
            emit(&out, &io::sdp_to_json(&inst)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Game(a) => cmd_game(a),
        Cmd::Bias(a) => cmd_bias(a),
        Cmd::Report(ReportCmd::ReferenceTable(c)) => cmd_reference_table(c),
        Cmd::Sdp(c) => cmd_sdp(c),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Args(msg)) => {
            eprintln!("xorq: error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("xorq: solver failure: {msg}");
            ExitCode::from(4)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_parse() {
        let q = parse_quantities("omega, me:3,ent:2x4,beta-os,omega").unwrap();
        assert_eq!(q, vec![Quantity::Omega, Quantity::Me(3), Quantity::Ent(2, 4), Quantity::BetaOs]);
        assert!(parse_quantities("me:0").is_err());
        assert!(parse_quantities("ent:2").is_err());
        assert!(parse_quantities("beta").is_err());
        assert!(parse_quantities(" , ").is_err());
    }

    #[test]
    fn classical_text() {
        let g = parse_classical("# chsh\n0.25 0.25\n0.25,-0.25\n", false).unwrap();
        assert_eq!(g, games::chsh());
        let g = parse_classical("1 1\n1 -1\n", true).unwrap();
        assert_eq!(g, games::chsh());
        assert!(parse_classical("1 1\n1 -1\n", false).is_err());
        assert!(parse_classical("1 2 3\n", false).is_err());
    }

    #[test]
    fn matrix_json() {
        let g = parse_matrix(r#"{"n":1,"re":[[2.0]]}"#, true).unwrap();
        assert_eq!(g.matrix()[(0, 0)], c64(1.0, 0.0));
        assert!(parse_matrix(r#"{"n":1,"re":[[2.0]]}"#, false).is_err());
        assert!(parse_matrix(r#"{"n":2,"re":[[1.0]]}"#, false).is_err());
    }
}
