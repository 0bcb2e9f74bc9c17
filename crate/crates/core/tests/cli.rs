use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spn_constraints::circuit::{full_joint_circuit, Variable};
use spn_constraints::constraints::Independence;
use spn_constraints::dataio::load_model;
use spn_constraints::oracle::{check_constraint, enumerate_joint, sample_dataset, JointTable};
use tempfile::TempDir;

fn spnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spnc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn model(dir: &Path, name: &str, n: usize, probs: &[f64]) -> PathBuf {
    write(
        dir,
        name,
        &full_joint_circuit(Variable::numbered(n), probs)
            .unwrap()
            .to_text(),
    )
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = model(dir.path(), "good.spn", 2, &[0.25; 4]);
    let o = spnc(&["validate", "--model", s(&good)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "valid");

    let bad = write(
        dir.path(),
        "bad.spn",
        "spn 1\nvar 0 X1\nvar 1 X2\nleaf 0 X1 +\nleaf 1 X2 +\nsum 2 0:0.5 1:0.5\nroot 2\n",
    );
    let o = spnc(&["validate", "--model", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("node 2"));

    let o = spnc(&["validate", "--model", s(&dir.path().join("missing.spn"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn queries() {
    let dir = TempDir::new().unwrap();
    let pair = model(dir.path(), "pair.spn", 2, &[0.4, 0.1, 0.1, 0.4]);
    let q = |expr: &str| spnc(&["query", "--model", s(&pair), "--expr", expr]);
    assert_eq!(stdout(&q("P(X1=1)")).trim(), "0.500000000000");
    assert_eq!(stdout(&q("P(X1=1 | X2=1)")).trim(), "0.800000000000");
    assert_eq!(q("P(X1=1 | X2=").status.code(), Some(2));
    assert_eq!(q("P(X3=1)").status.code(), Some(2));

    let chain = model(dir.path(), "chain.spn", 2, &[0.32, 0.06, 0.08, 0.54]);
    let o = spnc(&[
        "query",
        "--model",
        s(&chain),
        "--expr",
        "P(X1=1 | do(X2=1) ; parents=X1)",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.600000000000");

    let zero = model(dir.path(), "zero.spn", 2, &[0.5, 0.5, 0.0, 0.0]);
    let o = spnc(&["query", "--model", s(&zero), "--expr", "P(X1=1 | X2=1)"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compile_prints_residuals() {
    let dir = TempDir::new().unwrap();
    let m = model(dir.path(), "m.spn", 3, &[0.125; 8]);
    let c = write(dir.path(), "c.txt", "independence X1 X2\n");
    let o = spnc(&["compile", "--model", s(&m), "--constraints", s(&c)]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "+P(X1=1,X2=1) -P(X1=1)*P(X2=1)");

    let c = write(
        dir.path(),
        "c2.txt",
        "conditional-eq X1 wrt X2\ninterventional-eq X2 parents X1 targets X1 X3\n",
    );
    let o = spnc(&["compile", "--model", s(&m), "--constraints", s(&c)]);
    assert_eq!(stdout(&o).lines().count(), 2 + 4);
}

#[test]
fn verify_against_oracle() {
    let dir = TempDir::new().unwrap();
    let pair = model(dir.path(), "pair.spn", 2, &[0.4, 0.1, 0.1, 0.4]);
    let c = write(dir.path(), "c.txt", "independence X1 X2\n");
    let o = spnc(&[
        "verify",
        "--model",
        s(&pair),
        "--constraints",
        s(&c),
        "--tol",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("max_violation=1.5"), "{}", stdout(&o));

    let empty = write(dir.path(), "empty.txt", "# nothing\n");
    let o = spnc(&[
        "verify",
        "--model",
        s(&pair),
        "--constraints",
        s(&empty),
        "--tol",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 constraints"));
}

#[test]
fn train_soft_then_verify() {
    let dir = TempDir::new().unwrap();
    let truth = JointTable::new(Variable::numbered(2), vec![0.4, 0.1, 0.1, 0.4]).unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        &sample_dataset(&truth, 1000, 42).unwrap().to_csv(),
    );
    let start = model(dir.path(), "start.spn", 2, &[0.25; 4]);
    let c = write(dir.path(), "c.txt", "independence X1 X2\n");
    let out = dir.path().join("fitted.spn");
    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&data),
        "--constraints",
        s(&c),
        "--mode",
        "soft",
        "--lambda",
        "1000",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = stdout(&o);
    let max: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max_abs_residual="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max < 1e-3);

    let fitted = load_model(&fs::read_to_string(&out).unwrap()).unwrap();
    let check = check_constraint(
        &enumerate_joint(&fitted).unwrap(),
        &Independence::marginal(0, 1).into(),
        1e-3,
    )
    .unwrap();
    assert!(check.satisfied);

    let o = spnc(&[
        "verify",
        "--model",
        s(&out),
        "--constraints",
        s(&c),
        "--tol",
        "1e-2",
    ]);
    assert_eq!(o.status.code(), Some(0));

    // one λ per residual is also accepted; any other count is not
    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&data),
        "--constraints",
        s(&c),
        "--mode",
        "soft",
        "--lambda",
        "1,2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_mle_warns_about_constraints() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", "X1,X2\n1,1\n0,0\n1,0\n");
    let start = model(dir.path(), "start.spn", 2, &[0.25; 4]);
    let c = write(dir.path(), "c.txt", "independence X1 X2\n");
    let out = dir.path().join("fitted.spn");
    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&data),
        "--constraints",
        s(&c),
        "--mode",
        "mle",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(out.exists());

    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&data),
        "--mode",
        "mle",
        "--max-iters",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let other = write(dir.path(), "other.csv", "X1,Y\n1,1\n");
    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&other),
        "--mode",
        "mle",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = spnc(&[
        "train",
        "--model",
        s(&start),
        "--data",
        s(&data),
        "--mode",
        "hard",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sample_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let vars = Variable::list(&["b", "a", "c"]).unwrap();
    let m = write(
        dir.path(),
        "m.spn",
        &full_joint_circuit(vars, &[0.1, 0.2, 0.05, 0.15, 0.1, 0.1, 0.2, 0.1])
            .unwrap()
            .to_text(),
    );
    let (x, y) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    for out in [&x, &y] {
        let o = spnc(&[
            "sample",
            "--model",
            s(&m),
            "--n",
            "5",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&x).unwrap();
    assert_eq!(text, fs::read_to_string(&y).unwrap());
    assert_eq!(text.lines().next(), Some("b,a,c"));
    assert_eq!(text.lines().count(), 6);

    let o = spnc(&[
        "sample",
        "--model",
        s(&m),
        "--n",
        "0",
        "--seed",
        "7",
        "--out",
        s(&x),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
