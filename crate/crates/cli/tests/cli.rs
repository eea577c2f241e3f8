use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect()
}

fn mldb() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mldb"));
    cmd.env_remove("NADIA_DB");
    cmd
}

fn run(args: &[&str]) -> Output {
    mldb().args(args).output().unwrap()
}

fn run_with_input(args: &[&str], input: &[u8]) -> Output {
    let mut child = mldb().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A database directory holding the épouser fixture and its schema.
fn fig3_db() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--db",
        s(dir.path()),
        "--dls",
        s(&fixture("parax.dls")),
        "import",
        s(&fixture("parax-fig3.mldb.xml")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("schema.dls").exists());
    dir
}

#[test]
fn check_on_the_clean_fixture() {
    let db = fig3_db();
    let o = run(&["--db", s(db.path()), "check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0 violations\n");

    let o = run(&["--dls", s(&fixture("parax.dls")), "check", s(&fixture("parax-fig3.mldb.xml"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0 violations\n");
}

#[test]
fn check_reports_and_fails_on_violations() {
    let text = std::fs::read_to_string(fixture("parax-fig3.mldb.xml")).unwrap();
    let broken = text.replacen(
        "<acception axie=\"axie:2\" id=\"french:acc:2\"",
        "<acception axie=\"axie:77\" id=\"french:acc:2\"",
        1,
    );
    assert_ne!(broken, text);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.mldb.xml");
    std::fs::write(&file, broken).unwrap();
    let dls = fixture("parax.dls");

    let o = run(&["--dls", s(&dls), "check", s(&file)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.ends_with("2 violations\n"), "{out}");
    assert!(out.contains("WF1") && out.contains("WF3"), "{out}");

    let json = run(&["--dls", s(&dls), "check", "--json", s(&file)]);
    assert_eq!(json.status.code(), Some(1));
    let again = run(&["--dls", s(&dls), "check", "--json", s(&file)]);
    assert_eq!(json.stdout, again.stdout);
    let found: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let keys: Vec<(String, String)> = found
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v["code"].as_str().unwrap().to_string(), v["subjects"][0].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(keys, [("WF1".to_string(), "axie:2".to_string()), ("WF3".to_string(), "french:acc:2".to_string())]);
}

#[test]
fn fail_on_threshold() {
    // A warning-strength rule over the fixture: only --fail-on warning fails.
    let dir = tempfile::tempdir().unwrap();
    let dls = dir.path().join("strict.dls");
    let extra = "\n(def-integrity needs-aux ((a french-acception french)) warning (not (empty-p (aux a))))\n";
    std::fs::write(&dls, std::fs::read_to_string(fixture("parax.dls")).unwrap() + extra).unwrap();
    let bundle = fixture("parax-fig3.mldb.xml");
    let warn = run(&["--dls", s(&dls), "check", "--fail-on", "warning", s(&bundle)]);
    assert_eq!(warn.status.code(), Some(1));
    assert!(stdout(&warn).ends_with("3 violations\n"), "{}", stdout(&warn));
    let delay = run(&["--dls", s(&dls), "check", s(&bundle)]);
    assert_eq!(delay.status.code(), Some(0));
    assert_eq!(stdout(&delay), stdout(&warn));
}

#[test]
fn translate_into_russian_uses_sub_acceptions() {
    let db = fig3_db();
    let o = run(&["--db", s(db.path()), "translate", "--from", "français", "--to", "russe", "épouser"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let hits: Vec<&str> = out.lines().filter(|l| l.starts_with("  ")).map(str::trim).collect();
    assert!(hits.contains(&"sub homme: жениться russian:acc:1"), "{out}");
    assert!(hits.contains(&"sub femme: замуж (выйти - за) russian:acc:2"), "{out}");
    assert!(!out.contains("direct:"), "{out}");

    let o = run(&["--db", s(db.path()), "translate", "--json", "--from", "français", "--to", "russe", "épouser"]);
    let result: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mut subs: Vec<(String, String)> = result["senses"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["hits"].as_array().unwrap().iter())
        .filter(|h| h["via"] == "sub")
        .map(|h| (h["path"][0].as_str().unwrap().to_string(), h["lemma"].as_str().unwrap().to_string()))
        .collect();
    subs.sort();
    assert_eq!(
        subs,
        [("femme".to_string(), "замуж (выйти - за)".to_string()), ("homme".to_string(), "жениться".to_string())]
    );
}

#[test]
fn export_import_export_is_byte_identical() {
    let db = fig3_db();
    let first = run(&["--db", s(db.path()), "export"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, std::fs::read(fixture("parax-fig3.mldb.xml")).unwrap());

    let other = tempfile::tempdir().unwrap();
    let o = run_with_input(&["--db", s(other.path()), "--dls", s(&fixture("parax.dls")), "import", "-"], &first.stdout);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let second = run(&["--db", s(other.path()), "export"]);
    assert_eq!(second.stdout, first.stdout);
}

#[test]
fn import_refuses_to_overwrite_unless_asked() {
    let db = fig3_db();
    let bundle = fixture("parax-fig3.mldb.xml");
    let o = run(&["--db", s(db.path()), "import", s(&bundle)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--replace"), "{}", stderr(&o));
    let o = run(&["--db", s(db.path()), "import", "--replace", s(&bundle)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn strict_import_rejects_broken_bundles() {
    let text = std::fs::read_to_string(fixture("parax-fig3.mldb.xml")).unwrap();
    let broken = text.replacen("axie=\"axie:1\" id=\"french:acc:1\"", "axie=\"axie:999999\" id=\"french:acc:1\"", 1);
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_input(&["--db", s(dir.path()), "--dls", s(&fixture("parax.dls")), "import", "-"], broken.as_bytes());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("WF3"), "{}", stderr(&o));
    let o = run(&["--db", s(dir.path()), "--dls", s(&fixture("parax.dls")), "stats"]);
    assert!(stdout(&o).contains("french: 0 entries"), "{}", stdout(&o));
}

#[test]
fn stats_read_the_database_from_the_environment() {
    let db = fig3_db();
    let o = mldb().env("NADIA_DB", db.path()).arg("stats").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "french: 1 entries, 3 acceptions\n\
         english: 0 entries, 0 acceptions\n\
         german: 1 entries, 1 acceptions\n\
         russian: 2 entries, 2 acceptions\n\
         axies: 6\n\
         sub-acceptions: 3\n"
    );
}

#[test]
fn batch_defaulting_fills_and_persists() {
    let db = fig3_db();
    let o = run(&["--db", s(db.path()), "--actor", "batch", "default", "--batch"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "3 articles defaulted\n");
    let text = stdout(&run(&["--db", s(db.path()), "export"]));
    assert_eq!(text.matches("<f n=\"aux\">avoir</f>").count(), 3, "{text}");
    let o = run(&["--db", s(db.path()), "default", "--batch"]);
    assert_eq!(stdout(&o), "0 articles defaulted\n");
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--fail-on", "fatal"]).status.code(), Some(2));
    assert_eq!(run(&["default"]).status.code(), Some(2));
    let o = run(&["stats"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NADIA_DB"), "{}", stderr(&o));
}

#[test]
fn operational_errors_exit_with_1_and_a_diagnostic() {
    let db = fig3_db();
    let o = run(&["--db", s(db.path()), "translate", "--from", "french", "--to", "german", "inconnu"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inconnu"), "{}", stderr(&o));

    let o = run(&["--db", s(db.path()), "--dls", s(&fixture("parax-transcript.dls")), "stats"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parax-transcript.dls:65:2: error"), "{}", stderr(&o));

    let empty = tempfile::tempdir().unwrap();
    let o = run(&["--db", s(empty.path()), "stats"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("schema.dls"), "{}", stderr(&o));
}
