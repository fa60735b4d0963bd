use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cascade-epr"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file as numbers, with "none" as `None`.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines
        .map(|l| l.split(',').map(|c| c.parse().ok()).collect())
        .collect();
    (header, data)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn equal_rate_curve_is_exponential() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("family.csv");
    let o = run(&["run", scenario("lambda_family.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("[lambda=0.2] var_minus never falls below the vacuum level"));
    let (header, data) = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header.len(), 6);
    let col = header.iter().position(|h| h == "var_minus[lambda=1]").unwrap();
    assert_eq!(header[0], "Gamma1_t");
    for row in &data {
        let x = row[0].unwrap();
        assert!((row[col].unwrap() - 2.0 * (-2.0 * x).exp()).abs() < 1e-11);
    }
}

#[test]
fn reproducible_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let path = scenario("epsilon_family_lambda1.toml");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = run(&[
            "run",
            path.to_str().unwrap(),
            "--engine",
            "adiabatic",
            "--reproducible",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(!text.contains("generated at"));
    let text = std::fs::read_to_string(&path).unwrap();
    let no_path = write(dir.path(), "s.toml", &text.replace("path = \"epsilon_family_lambda1.csv\"\n", ""));
    let o = run(&["run", no_path.to_str().unwrap(), "--engine", "adiabatic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("# generated at unix time"));
    assert!(stderr(&o).contains("min var_minus"));
}

#[test]
fn sweep_marks_rows_without_minimum() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        scenario("lambda_sweep_eps1.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let (header, data) = rows(&text);
    assert_eq!(header, ["lambda", "min_var_minus", "t_min", "n1_at_min", "n2_at_min"]);
    assert_eq!(data.len(), 471);
    for row in &data {
        let lambda = row[0].unwrap();
        assert_eq!(row[1].is_none(), lambda <= 0.25, "lambda {lambda}");
    }
    // ordered by value
    assert!(data.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn single_value_sweep_equals_run_summary() {
    let dir = TempDir::new().unwrap();
    let base = write(
        dir.path(),
        "base.toml",
        r#"
name = "base"
engine = "analytic"
[grid]
t_end = 3.0
step = 0.001
[reduced]
gamma1 = 0.5
lambda = 2.0
epsilon = 0.8
[output]
time_axis = "gamma1_t"
"#,
    );
    let spec = write(
        dir.path(),
        "one.toml",
        r#"
name = "one"
parameter = "epsilon"
values = 0.8
reductions = ["min_var_minus", "t_min", "n1_at_min", "n2_at_min"]
base_file = "base.toml"
"#,
    );
    let o = run(&["sweep", spec.to_str().unwrap(), "--reproducible"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, data) = rows(&stdout(&o));
    assert_eq!(data.len(), 1);
    let r = run(&["run", base.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    let summary = stdout(&r);
    for v in &data[0][1..] {
        let s = cascade_epr::runner::format_number(v.unwrap());
        assert!(summary.contains(&s), "{s} not in {summary}");
    }
}

#[test]
fn compare_reports_gaps() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cmp.csv");
    let o = run(&[
        "compare",
        scenario("epsilon_family_lambda2.toml").to_str().unwrap(),
        "--engine",
        "analytic,adiabatic",
    ]);
    assert_eq!(o.status.code(), Some(2), "multi-curve scenario should be rejected");
    assert!(stderr(&o).contains("single curve"));

    let s = write(
        dir.path(),
        "s.toml",
        r#"
name = "overlay"
engine = "full"
[grid]
t_end = 300.0
[reduced]
gamma1 = 0.01
lambda = 2.0
epsilon = 1.0
[effective]
kappa1 = 1.0
kappa2 = 1.0
epsilon = 1.0
omega1 = { kind = "constant", value = 0.1 }
omega2 = { kind = "constant", value = 0.1414213562373095 }
[output]
columns = ["var_minus", "n1"]
every = 100
"#,
    );
    let o = run(&[
        "compare",
        s.to_str().unwrap(),
        "--engine",
        "analytic,adiabatic,full",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    let gap = |line: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(line))
            .unwrap_or_else(|| panic!("{line} missing from {report}"))
            .rsplit(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(gap("gap adiabatic vs analytic: var_minus") < 1e-8);
    assert!(gap("max gap full vs analytic") > 1e-3);
    let (header, _) = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(
        header,
        ["t", "var_minus_analytic", "n1_analytic", "var_minus_adiabatic", "n1_adiabatic", "var_minus_full", "n1_full"]
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = run(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(missing.status.code(), Some(4));

    let bad = write(dir.path(), "bad.toml", "name = \"x\"\nengine = \"analytic\"\n[grid]\nt_end = 1.0\nstep = 0.1\n[reduced]\ngamma1 = 1.0\nlambda = 1.0\nepsilon = 1.0\nbogus = 3\n");
    let o = run(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus") && stderr(&o).contains("line 10"), "{}", stderr(&o));

    let empty = write(dir.path(), "empty.toml", "name = \"x\"\nengine = \"analytic\"\n[grid]\nt_end = 0.0\nstep = 0.1\n[reduced]\ngamma1 = 1.0\nlambda = 1.0\nepsilon = 1.0\n");
    assert_eq!(run(&["run", empty.to_str().unwrap()]).status.code(), Some(2));

    let overflow = write(dir.path(), "overflow.toml", "name = \"x\"\nengine = \"analytic\"\n[grid]\nt_end = 400.0\nstep = 1.0\n[reduced]\ngamma1 = 1.0\nlambda = 2.0\nepsilon = 1.0\n");
    let o = run(&["run", overflow.to_str().unwrap(), "--out", dir.path().join("o.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let truncated = write(
        dir.path(),
        "trunc.toml",
        r#"
name = "too few levels"
engine = "fock"
[grid]
t_end = 5.0
step = 0.025
[effective]
kappa1 = 1.0
kappa2 = 1.0
epsilon = 1.0
omega1 = { kind = "constant", value = 0.3 }
omega2 = { kind = "constant", value = 0.3 }
[fock]
cutoffs = [2, 2, 3, 3]
"#,
    );
    let o = run(&["run", truncated.to_str().unwrap(), "--out", dir.path().join("t.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("truncation"), "{}", stderr(&o));

    let o = run(&["run", bad.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_prints_regime_report() {
    let o = run(&["validate", scenario("physical_example.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["conditions"].as_array().unwrap().len(), 10);
    assert!((report["derived"]["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(scenario("physical_example.toml")).unwrap();
    let no_regime = write(dir.path(), "p.toml", &text.replace("[regime]\nnbar_max = 6.0\n", ""));
    let o = run(&["validate", no_regime.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nbar_max"));
    let hot = write(dir.path(), "hot.toml", &text.replace("nbar_max = 6.0", "nbar_max = 20.0"));
    let o = run(&["validate", hot.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("lamb_dicke_1"));
}

#[test]
fn shipped_scenarios_are_valid() {
    let dir = scenario("");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        if text.lines().any(|l| l.starts_with("parameter")) {
            let spec = cascade_epr::sweep::SweepSpec::from_path(&path).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        } else {
            let s = cascade_epr::scenario::Scenario::from_path(&path).unwrap();
            s.validate_for(s.engine).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        count += 1;
    }
    assert!(count >= 20, "found {count} scenarios");
}
