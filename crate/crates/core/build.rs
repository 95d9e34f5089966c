use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=BELLSWITCH_GIT_REV");
    if std::env::var_os("BELLSWITCH_GIT_REV").is_some() {
        return;
    }
    let rev = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    if let Some(rev) = rev {
        println!("cargo:rustc-env=BELLSWITCH_GIT_REV={rev}");
    }
}
