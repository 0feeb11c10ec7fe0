use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bddsp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, n: usize, density: f64, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let o = run(&[
        "generate",
        "--n",
        &n.to_string(),
        "--density",
        &density.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        p(&path),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn example(dir: &Path) -> PathBuf {
    let path = dir.join("example.txt");
    let o = run(&["generate", "--example", "--out", p(&path)]);
    assert_eq!(code(&o), 0);
    path
}

/// Records of a report CSV as maps from column name to value.
fn records(path: &Path) -> Vec<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            let fields = split_csv(l);
            assert_eq!(fields.len(), header.len(), "{l}");
            header.iter().cloned().zip(fields).collect()
        })
        .collect()
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            _ => out.last_mut().unwrap().push(c),
        }
    }
    out
}

fn field<'a>(rec: &'a [(String, String)], name: &str) -> &'a str {
    &rec.iter().find(|(k, _)| k == name).unwrap_or_else(|| panic!("no column {name}")).1
}

fn objective(rec: &[(String, String)]) -> f64 {
    field(rec, "objective").parse().unwrap()
}

#[test]
fn generate_rounds_the_edge_count_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = generate(dir.path(), "a.txt", 5, 0.6, 1);
    let b = generate(dir.path(), "b.txt", 5, 0.6, 1);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("edge ")).count(), 6);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn usage_errors_exit_with_four() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.txt");
    assert_eq!(code(&run(&["generate", "--n", "5", "--density", "0", "--out", p(&out)])), 4);
    assert_eq!(code(&run(&["solve", "--instance", p(&out), "--method", "simplex"])), 4);
    assert_eq!(code(&run(&["solve", "--instance", p(&dir.path().join("missing"))])), 4);
    let inst = example(dir.path());
    assert_eq!(
        code(&run(&["solve", "--instance", p(&inst), "--cvar", "--lambda", "1", "--alpha", "1.5"])),
        4
    );
    assert_eq!(code(&run(&["solve", "--instance", p(&inst), "--cvar"])), 4);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn worked_example_solves_to_two_with_every_method() {
    let dir = TempDir::new().unwrap();
    let inst = example(dir.path());
    let out = dir.path().join("report.csv");
    for m in ["bdd-cost", "bdd-cap", "lshaped"] {
        let o = run(&["solve", "--instance", p(&inst), "--method", m, "--scenarios", "1", "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{m}: {}", stdout(&o));
        assert!(stdout(&o).contains("objective 2"), "{}", stdout(&o));
    }
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert_eq!(field(r, "status"), "optimal");
        assert_eq!(objective(r), 2.0);
        assert_eq!(field(r, "gap"), "0");
    }
    assert_eq!(field(&recs[0], "cost_nodes"), "11");
    assert_eq!(field(&recs[1], "cap_nodes"), "19");
}

#[test]
fn methods_agree_and_cvar_with_zero_weight_is_risk_neutral() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "g.txt", 7, 0.4, 9);
    let out = dir.path().join("r.csv");
    let base = ["solve", "--instance", p(&inst), "--scenarios", "5", "--scenario-seed", "3", "--out", p(&out)];
    for extra in [
        vec!["--method", "bdd-cap"],
        vec!["--method", "lshaped"],
        vec!["--method", "bdd-cost", "--pure-benders"],
        vec!["--method", "bdd-cost", "--cvar", "--lambda", "0", "--alpha", "0.9"],
    ] {
        let o = bin().args(base).args(&extra).output().unwrap();
        assert_eq!(code(&o), 0, "{extra:?}");
    }
    let recs = records(&out);
    let first = objective(&recs[0]);
    for r in &recs {
        assert!((objective(r) - first).abs() < 1e-9, "{r:?}");
    }
    assert_eq!(field(&recs[3], "cvar_lambda"), "0");
}

#[test]
fn reports_are_reproducible_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "g.txt", 6, 0.5, 4);
    let out = dir.path().join("r.csv");
    for _ in 0..2 {
        let o = run(&["solve", "--instance", p(&inst), "--scenarios", "4", "--method", "bdd-cap", "--out", p(&out)]);
        assert_eq!(code(&o), 0);
    }
    let strip = |r: &Vec<(String, String)>| -> Vec<(String, String)> {
        r.iter().filter(|(k, _)| !k.ends_with("_s")).cloned().collect()
    };
    let recs = records(&out);
    assert_eq!(strip(&recs[0]), strip(&recs[1]));
}

#[test]
fn node_budget_override_reports_a_memory_limit() {
    let dir = TempDir::new().unwrap();
    let inst = example(dir.path());
    let out = dir.path().join("r.csv");
    let o = bin()
        .args(["solve", "--instance", p(&inst), "--method", "bdd-cap", "--out", p(&out)])
        .env("BDDSP_NODE_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(code(&o), 5);
    assert_eq!(field(&records(&out)[0], "status"), "memory-limit");
    let o = bin()
        .args(["solve", "--instance", p(&inst), "--method", "bdd-cap"])
        .env("BDDSP_MEMORY_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(code(&o), 5);
}

#[test]
fn dump_and_log_files_are_written() {
    let dir = TempDir::new().unwrap();
    let inst = example(dir.path());
    let dumps = dir.path().join("dumps");
    let log = dir.path().join("log.csv");
    let o = run(&[
        "solve", "--instance", p(&inst), "--method", "bdd-cost", "--dump-bdd", p(&dumps), "--log", p(&log),
    ]);
    assert_eq!(code(&o), 0);
    let dump = std::fs::read_to_string(dumps.join("example_s0.bdd")).unwrap();
    assert!(dump.starts_with("bdd cost vars 5 nodes 11"));
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("round,lower_bound,upper_bound"));
}

#[test]
fn compare_writes_one_row_per_instance_and_method() {
    let dir = TempDir::new().unwrap();
    let insts = dir.path().join("insts");
    std::fs::create_dir(&insts).unwrap();
    for (i, seed) in [1u64, 2, 3].into_iter().enumerate() {
        generate(&insts, &format!("i{i}.txt"), 6, 0.5, seed);
    }
    let out = dir.path().join("cmp.csv");
    let o = run(&["--jobs", "2", "compare", "--instances", p(&insts), "--scenarios", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let recs = records(&out);
    assert_eq!(recs.len(), 9);
    let mean = |col: &str| {
        let v: Vec<f64> = recs.iter().filter_map(|r| field(r, col).parse().ok()).collect();
        assert_eq!(v.len(), 3);
        v.iter().sum::<f64>() / 3.0
    };
    assert!(mean("cost_nodes") <= mean("cap_nodes"));
    for chunk in recs.chunks(3) {
        let o = objective(&chunk[0]);
        assert!(chunk.iter().all(|r| (objective(r) - o).abs() < 1e-9));
    }

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = dir.path().join("none.csv");
    assert_eq!(code(&run(&["compare", "--instances", p(&empty), "--out", p(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("instance,method,"));
}

#[test]
fn compare_records_bad_files_and_continues() {
    let dir = TempDir::new().unwrap();
    generate(dir.path(), "good.txt", 5, 0.5, 1);
    std::fs::write(dir.path().join("bad.txt"), "vertices x\n").unwrap();
    let out = dir.path().join("cmp.csv");
    std::fs::create_dir(dir.path().join("sub")).unwrap();
    let o = run(&["compare", "--instances", p(dir.path()), "--methods", "bdd-cost", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let recs = records(&out);
    // cmp.csv itself does not exist yet when the directory is listed
    assert_eq!(recs.len(), 2);
    assert_eq!(field(&recs[0], "status"), "error");
    assert_eq!(field(&recs[1], "status"), "optimal");
}

#[test]
fn saa_table_has_one_row_per_count() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "g.txt", 6, 0.5, 8);
    let out = dir.path().join("saa.csv");
    let o = run(&[
        "saa", "--instance", p(&inst), "--counts", "5,10", "--reps", "3", "--eval", "50", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    assert!(table.contains("95% CI on Lower Bound"));
    assert_eq!(table.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);

    let o = run(&[
        "saa", "--instance", p(&inst), "--counts", "6", "--reps", "1", "--eval-on-training", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[8].parse::<f64>().unwrap(), 0.0, "{text}");
}
