use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn scripts() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts")
}

fn icpsdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icpsdl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("icpsdl-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_prints_one_line_per_binding() {
    let script = scripts().join("running_example.icps");
    let o = icpsdl(&["run", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("trees: 7 estimation trees rooted at t.head"), "{out}");
    assert!(out.contains("gconfig: global protocol over 3 roles"), "{out}");
}

#[test]
fn check_accepts_the_running_example() {
    let script = scripts().join("running_example.icps");
    let o = icpsdl(&["check", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with(": ok"));
}

#[test]
fn diagnostics_exit_with_one() {
    let dir = temp("diag");
    let bad = write(&dir, "bad.icps", "x := global end\ny := traverse t.head nope\n");
    let o = icpsdl(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("bad.icps:2:22: error: unbound name `nope`"),
        "{}",
        stderr(&o)
    );

    let o = icpsdl(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let syntax = write(&dir, "syntax.icps", "x := local { a = b!. end }\n");
    let o = icpsdl(&["check", syntax.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("syntax.icps:1:"), "{}", stderr(&o));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_files_exit_with_two() {
    let o = icpsdl(&["run", "/nonexistent/script.icps"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("internal error"));
}

#[test]
fn simulate_reports_the_reconfiguration_and_writes_a_timeline() {
    let dir = temp("sim");
    let scenario = scripts().join("running_example.scenario");
    let o = icpsdl(&[
        "--mermaid-dir",
        dir.to_str().unwrap(),
        "simulate",
        scenario.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("step 50: failure of device dev2"), "{out}");
    assert!(out.contains("step 50: reconfigured to"), "{out}");
    assert!(out.contains("completed 500 steps, 1 reconfiguration(s)"), "{out}");
    assert!(out.lines().any(|l| l.starts_with("499 level=")));
    let timeline = std::fs::read_to_string(dir.join("timeline.mmd")).unwrap();
    assert!(timeline.starts_with("timeline"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn simulate_halts_when_the_actuator_device_fails() {
    let dir = temp("halt");
    let text = std::fs::read_to_string(scripts().join("running_example.scenario"))
        .unwrap()
        .replace("fail dev2 at 50", "fail dev1 at 5");
    std::fs::copy(scripts().join("running_example.icps"), dir.join("running_example.icps")).unwrap();
    let scenario = write(&dir, "halt.scenario", &text);
    let o = icpsdl(&["simulate", scenario.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("step 5: fatal"), "{}", stdout(&o));
    assert!(stderr(&o).contains("supervisor halted at step 5"));

    let broken = write(&dir, "broken.scenario", "steps = many\n");
    let o = icpsdl(&["simulate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.scenario:1:1: error"), "{}", stderr(&o));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn repl_reads_multi_line_declarations() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_icpsdl"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"c := local {\n  a = b!x. end\n  b = a?x. end\n}\ng := compose c\nshow g\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("c: local configuration of 2 participants"), "{out}");
    assert!(out.contains("global a->b:x. end"), "{out}");
}
