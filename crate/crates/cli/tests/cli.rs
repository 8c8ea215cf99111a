use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use xorq::games::{from_classical, chsh, t_game};
use xorq::io;

fn xorq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xorq")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn game_files_match_generators() {
    let dir = tempfile::tempdir().unwrap();
    let tn = path(dir.path(), "t3.json");
    let o = xorq(&["game", "--name", "tn", "--param", "3", "--out", &tn]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&tn).unwrap(), io::game_to_json(&t_game(3).unwrap()).unwrap());

    let o = xorq(&["game", "--name", "chsh"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, io::game_to_json(&from_classical(&chsh())).unwrap());
    assert_eq!(xorq(&["game", "--name", "chsh"]).stdout, o.stdout);
}

#[test]
fn file_based_games() {
    let dir = tempfile::tempdir().unwrap();
    let r = path(dir.path(), "r.txt");
    std::fs::write(&r, "1 1\n1 -1\n").unwrap();
    let o = xorq(&["game", "--name", "classical-file", "--input", &r, "--normalize"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, io::game_to_json(&from_classical(&chsh())).unwrap());
    assert_eq!(xorq(&["game", "--name", "classical-file", "--input", &r]).status.code(), Some(2));

    let m = path(dir.path(), "m.json");
    std::fs::write(&m, r#"{"n": 1, "re": [[-1.0]]}"#).unwrap();
    let o = xorq(&["game", "--name", "matrix-file", "--input", &m]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let c = path(dir.path(), "c2.json");
    assert_eq!(xorq(&["game", "--name", "cn", "--param", "2", "--out", &c]).status.code(), Some(0));
    let o = xorq(&["game", "--name", "tensor", "--input", &c, "--input", &c]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["n"], 9);
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(xorq(&["game", "--name", "nope"]).status.code(), Some(2));
    assert_eq!(xorq(&["game", "--name", "tn"]).status.code(), Some(2));
    assert_eq!(xorq(&["bias", "/nonexistent/game.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "g.json");
    xorq(&["game", "--name", "tn", "--param", "2", "--out", &g]);
    assert_eq!(xorq(&["bias", &g, "--quantities", "omega,bogus"]).status.code(), Some(2));
    assert_eq!(xorq(&["bias", &g, "--quantities", "beta-sdp"]).status.code(), Some(2));
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"format\": \"xorq-sdp-v1\", \"blocks\": 3}").unwrap();
    assert_eq!(xorq(&["sdp", "solve", &bad]).status.code(), Some(2));
}

#[test]
fn bias_on_t2() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "t2.json");
    xorq(&["game", "--name", "tn", "--param", "2", "--out", &g]);
    let o = xorq(&["bias", &g, "--quantities", "beta-nc,beta-os", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["beta_nc"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-3);
    assert!((v["beta_os"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(v.get("runtimes").is_none());
    let again = xorq(&["bias", &g, "--quantities", "beta-nc,beta-os", "--format", "json"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn bias_on_h1_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "h1.json");
    xorq(&["game", "--name", "hn", "--param", "1", "--out", &g]);
    let q = "omega,omega-c,me:3,beta-nc,beta-os,chains";
    let o = xorq(&["bias", &g, "--quantities", q, "--restarts", "20", "--format", "json", "--runtimes"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let f = |k: &str| v[k].as_f64().unwrap();
    assert!((f("omega_lower") - 0.4).abs() < 1e-3);
    assert!((f("omega_c_lower") - 0.4).abs() < 1e-3);
    assert!(v["me_lower"][0]["value"].as_f64().unwrap() >= 5.0 / 9.0 - 1e-3);
    assert!((f("beta_nc") - 0.6).abs() < 1e-3);
    assert!((f("beta_os") - 0.6).abs() < 1e-3);
    assert!(v["chains"].as_array().unwrap().iter().all(|c| c["pass"] == true || c["hard"] == false));
    assert!(v["runtimes"].is_object());
}

#[test]
fn bias_on_zero_game() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(dir.path(), "zero.json");
    std::fs::write(&g, r#"{"entries": [], "format": "xorq-game-v1", "n": 2}"#).unwrap();
    let o = xorq(&["bias", &g, "--quantities", "omega,omega-c,beta-nc,beta-os", "--restarts", "3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for k in ["omega_lower", "omega_c_lower", "beta_nc", "beta_os"] {
        let line = text.lines().find(|l| l.starts_with(&format!("{k},"))).unwrap();
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-6, "{line}");
    }
}

#[test]
fn sdp_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trivial = path(dir.path(), "trivial.json");
    std::fs::write(
        &trivial,
        r#"{"blocks":[{"dim":1,"label":"z"}],"constraints":[{"entries":[{"b":0,"c":0,"im":0.0,"r":0,"re":1.0}],"rhs":1.0}],"format":"xorq-sdp-v1","objective":[{"b":0,"c":0,"im":0.0,"r":0,"re":1.0}]}"#,
    )
    .unwrap();
    let o = xorq(&["sdp", "solve", &trivial]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["primal_value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["certificate"]["pass"], true);

    let g = path(dir.path(), "chsh.json");
    let inst = path(dir.path(), "chsh-sdp.json");
    xorq(&["game", "--name", "chsh", "--out", &g]);
    assert_eq!(xorq(&["sdp", "instance", &g, "--relaxation", "sdp", "--out", &inst]).status.code(), Some(0));
    let v = stdout_json(&xorq(&["sdp", "solve", &inst]));
    assert!((v["primal_value"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-4);
}

#[test]
fn infeasible_sdp_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "infeasible.json");
    std::fs::write(
        &p,
        r#"{"blocks":[{"dim":1,"label":"z"}],"constraints":[{"entries":[{"b":0,"c":0,"im":0.0,"r":0,"re":1.0}],"rhs":-1.0}],"format":"xorq-sdp-v1","objective":[]}"#,
    )
    .unwrap();
    let o = xorq(&["sdp", "solve", &p]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn reference_table_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = path(dir.path(), "table");
    let o = xorq(&["report", "paper-table", "--restarts", "10", "--out", &prefix]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(format!("{prefix}.csv")).unwrap();
    assert!(csv.starts_with("game,quantity,relation,computed,expected,tol,pass\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",pass")));
    assert!(csv.contains("h2,beta_nc (closed form)"));
    let json: Value = serde_json::from_slice(&std::fs::read(format!("{prefix}.json")).unwrap()).unwrap();
    assert!(json["rows"].as_array().unwrap().iter().all(|r| r["tol"].is_number()));
}
