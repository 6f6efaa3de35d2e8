use std::path::PathBuf;
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn jointstat(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_jointstat"))
        .args(args)
        .output()
        .expect("spawn jointstat");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn ok(args: &[&str]) -> String {
    let run = jointstat(args);
    assert_eq!(run.code, 0, "jointstat {args:?} failed: {}", run.stderr);
    run.stdout
}

#[allow(dead_code)]
pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}
