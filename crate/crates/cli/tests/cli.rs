use std::path::Path;
use std::process::{Command, Output};

fn qpuf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpuf"))
        .args(args)
        .env_remove("QPUF_PROFILE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_crp(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["crp", "run", "--output-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    qpuf(&args)
}

#[test]
fn profile_list_and_show() {
    let o = qpuf(&["profile", "list"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names, ["ibm_osaka", "ibm_kyoto", "ibm_sherbrooke", "ideal"]);

    let o = qpuf(&["profile", "show", "ibm_osaka"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("qubit 7: t1=269.28 t2=9.07 f=4.717"),
        "{}",
        stdout(&o)
    );

    let o = qpuf(&["profile", "show", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch"));
}

#[test]
fn profiles_from_search_dir_and_path() {
    let dir = tempfile::tempdir().unwrap();
    let doc = stdout(&qpuf(&["profile", "show", "ibm_kyoto", "--json"]))
        .replace("ibm_kyoto", "lab_device");
    std::fs::write(dir.path().join("lab_device.json"), &doc).unwrap();

    let o = Command::new(env!("CARGO_BIN_EXE_qpuf"))
        .args(["profile", "show", "lab_device"])
        .env("QPUF_PROFILE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("profile lab_device"));

    let path = dir.path().join("lab_device.json");
    let o = qpuf(&["profile", "show", path.to_str().unwrap()]);
    assert!(o.status.success());

    std::fs::write(
        dir.path().join("broken.json"),
        "{\"name\": \"x\", \"idle_duration_us\": 50}",
    )
    .unwrap();
    let o = qpuf(&[
        "profile",
        "show",
        dir.path().join("broken.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qubits"), "{}", stderr(&o));
}

#[test]
fn crp_run_default_protocol_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = run_crp(a.path(), &["--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run_crp(b.path(), &["--seed", "42", "--jobs", "3"])
        .status
        .success());

    let store_a = std::fs::read(a.path().join("crp.jsonl")).unwrap();
    assert_eq!(store_a, std::fs::read(b.path().join("crp.jsonl")).unwrap());
    assert_eq!(
        std::fs::read(a.path().join("p1.csv")).unwrap(),
        std::fs::read(b.path().join("p1.csv")).unwrap()
    );
    assert_eq!(String::from_utf8(store_a).unwrap().lines().count(), 5 * 75);

    // rerunning in place overwrites byte-identically
    assert!(run_crp(a.path(), &["--seed", "42"]).status.success());
    assert_eq!(
        std::fs::read(a.path().join("crp.jsonl")).unwrap(),
        std::fs::read(b.path().join("crp.jsonl")).unwrap()
    );
}

#[test]
fn crp_run_usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_crp(dir.path(), &["--shots", "0", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_crp(dir.path(), &["--profile", "nosuch", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_crp(dir.path(), &["--challenges", "missing.txt", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = run_crp(
        &blocker.join("sub"),
        &["--challenges", "2", "--instances", "1", "--seed", "1"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn crp_run_without_seed_prints_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_crp(
        dir.path(),
        &["--challenges", "2", "--instances", "1", "--shots", "16"],
    );
    assert!(o.status.success());
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("seed: "))
        .map(String::from)
        .unwrap();
    let seed = line.trim_start_matches("seed: ").to_string();

    let replay = tempfile::tempdir().unwrap();
    assert!(run_crp(
        replay.path(),
        &[
            "--challenges",
            "2",
            "--instances",
            "1",
            "--shots",
            "16",
            "--seed",
            &seed
        ]
    )
    .status
    .success());
    assert_eq!(
        std::fs::read(dir.path().join("crp.jsonl")).unwrap(),
        std::fs::read(replay.path().join("crp.jsonl")).unwrap()
    );
}

#[test]
fn crp_run_with_challenge_file_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("challenges.jsonl");
    std::fs::write(
        &file,
        "{\"init_bits\":\"00001111\",\"theta\":1.5707963267948966}\n{\"init_bits\":\"10100000\",\"theta\":0.3}\n",
    )
    .unwrap();
    let o = run_crp(
        dir.path(),
        &[
            "--challenges",
            file.to_str().unwrap(),
            "--instances",
            "2",
            "--seed",
            "3",
            "--gnuplot",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let store = std::fs::read_to_string(dir.path().join("crp.jsonl")).unwrap();
    assert_eq!(store.lines().count(), 4);
    assert!(store
        .lines()
        .next()
        .unwrap()
        .contains("\"bits\":\"00001111\""));
    assert!(std::fs::read_to_string(dir.path().join("p1.gp"))
        .unwrap()
        .contains("p1.csv"));
    let csv = std::fs::read_to_string(dir.path().join("p1.csv")).unwrap();
    assert!(csv.starts_with("profile,instance,challenge,init_bits,theta,p1_q0"));
}

#[test]
fn metrics_reports() {
    let ideal = tempfile::tempdir().unwrap();
    assert!(run_crp(ideal.path(), &["--seed", "5"]).status.success());
    let out = tempfile::tempdir().unwrap();
    let store = ideal.path().join("crp.jsonl");
    let o = qpuf(&[
        "metrics",
        store.to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let randomness: f64 = row[3].parse().unwrap();
    let diffuseness: f64 = row[4].parse().unwrap();
    assert!((45.0..=57.0).contains(&randomness), "{randomness}");
    assert!((45.0..=55.0).contains(&diffuseness), "{diffuseness}");
    assert_eq!(row[3].split('.').nth(1).unwrap().len(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(summary["profiles"][0]["instances"], 5);
}

#[test]
fn metrics_single_instance_and_uniqueness() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_crp(
        a.path(),
        &["--seed", "8", "--challenges", "10", "--instances", "1"]
    )
    .status
    .success());
    assert!(run_crp(
        b.path(),
        &[
            "--seed",
            "8",
            "--challenges",
            "10",
            "--instances",
            "2",
            "--profile",
            "ibm_kyoto"
        ]
    )
    .status
    .success());
    let sa = a.path().join("crp.jsonl");
    let sb = b.path().join("crp.jsonl");
    let out = tempfile::tempdir().unwrap();

    let o = qpuf(&[
        "metrics",
        sa.to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    let csv = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",,"));

    let o = qpuf(&[
        "metrics",
        sa.to_str().unwrap(),
        sb.to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("uniqueness"));
    let u = std::fs::read_to_string(out.path().join("uniqueness.csv")).unwrap();
    assert!(u.lines().nth(1).unwrap().starts_with("ideal,ibm_kyoto,"));
}

#[test]
fn metrics_rejects_mismatched_challenges() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_crp(
        a.path(),
        &["--seed", "1", "--challenges", "5", "--instances", "1"]
    )
    .status
    .success());
    assert!(run_crp(
        b.path(),
        &[
            "--seed",
            "2",
            "--challenges",
            "5",
            "--instances",
            "1",
            "--profile",
            "ibm_osaka"
        ]
    )
    .status
    .success());
    let out = tempfile::tempdir().unwrap();
    let o = qpuf(&[
        "metrics",
        a.path().join("crp.jsonl").to_str().unwrap(),
        b.path().join("crp.jsonl").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(
        qpuf(&["metrics", "/nonexistent/crp.jsonl"]).status.code(),
        Some(3)
    );
}

#[test]
fn oracle_check() {
    let o = qpuf(&["oracle", "check", "--trials", "20", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("80 runs"));

    let o = qpuf(&[
        "oracle",
        "check",
        "--trials",
        "5",
        "--seed",
        "4",
        "--corrupt-cnot",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("init_bits"));

    assert_eq!(
        qpuf(&["oracle", "check", "--trials", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn attest_demo_outcomes() {
    let o = qpuf(&[
        "attest",
        "demo",
        "--ieds",
        "50",
        "--threshold",
        "0",
        "--seed",
        "11",
    ]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert_eq!(
        text.lines()
            .filter(|l| l.contains("auth ied") && l.contains("accept  accept"))
            .count(),
        50
    );
    assert!(text
        .lines()
        .any(|l| l.contains("tamper") && l.contains("reject  reject")));
    assert!(text
        .lines()
        .any(|l| l.contains("fake device") && l.contains("reject  reject")));

    let o = qpuf(&[
        "attest",
        "demo",
        "--ieds",
        "4",
        "--threshold",
        "8",
        "--seed",
        "11",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text
        .lines()
        .any(|l| l.contains("tamper") && l.contains("accept  accept")));
    assert!(text
        .lines()
        .filter(|l| l.contains("fake device") && l.contains("ok"))
        .all(|l| l.contains("accept")));
}

#[test]
fn attest_demo_is_deterministic() {
    let a = qpuf(&["attest", "demo", "--ieds", "1", "--seed", "77"]);
    let b = qpuf(&["attest", "demo", "--ieds", "1", "--seed", "77"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        qpuf(&["attest", "demo", "--ieds", "0", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
}
