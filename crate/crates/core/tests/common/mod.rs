#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Runs git in `dir` with an isolated configuration and fixed dates.
pub fn git(dir: &Path, epoch: i64, args: &[&str]) -> String {
    let date = format!("@{epoch} +0000");
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=Fixture", "-c", "user.email=fixture@example.com", "-c", "init.defaultBranch=main"])
        .args(["-c", "commit.gpgsign=false"])
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

pub fn init_repo(dir: &Path) {
    git(dir, 0, &["init", "-q"]);
}

pub fn write(dir: &Path, rel: &str, text: &str) {
    let p = dir.join(rel);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(p, text).unwrap();
}

/// Stages everything and commits at `epoch`, returning the new hash.
pub fn commit(dir: &Path, epoch: i64, msg: &str) -> String {
    git(dir, epoch, &["add", "-A"]);
    git(dir, epoch, &["commit", "-q", "--allow-empty", "-m", msg]);
    git(dir, epoch, &["rev-parse", "HEAD"])
}

pub const MINI_MISUSE_FILE: &str = "src/main/java/org/demo/app/Loader.java";

/// Commits of the mini project: base, misuse-introducing and fixing.
pub struct MiniRepo {
    pub base: String,
    pub introducing: String,
    pub fixing: String,
}

pub fn build_mini_repo(dir: &Path) -> MiniRepo {
    let src = fixtures().join("mini/project");
    let read = |v: &str, f: &str| std::fs::read_to_string(src.join(v).join(f)).unwrap();
    init_repo(dir);
    write(dir, "src/main/java/org/demo/app/Util.java", &read("v1", "Util.java"));
    write(dir, MINI_MISUSE_FILE, &read("v1", "Loader.java"));
    let base = commit(dir, 1_600_000_000, "loader skeleton");
    write(dir, MINI_MISUSE_FILE, &read("v2", "Loader.java"));
    let introducing = commit(dir, 1_600_000_100, "load from path");
    write(dir, MINI_MISUSE_FILE, &read("v3", "Loader.java"));
    let fixing = commit(dir, 1_600_000_200, "close channel after reading");
    MiniRepo { base, introducing, fixing }
}

/// One-line manifest for the mini project.
pub fn mini_manifest(repo: &Path, fixing: &str) -> String {
    serde_json::json!({
        "id": "mini-1",
        "repo_url_or_path": repo.display().to_string(),
        "fixing_commit": fixing,
        "misused_imports": ["org.acme.io.Channel"],
        "misuse_file": MINI_MISUSE_FILE,
        "misuse_method": "load",
        "fixing_pattern": fixtures().join("mini/fix.aug").display().to_string(),
    })
    .to_string()
}
