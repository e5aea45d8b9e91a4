use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use szpiro_core::suites::{self, SuiteReport};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_szpiro")
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_suite(r: szpiro_core::Result<SuiteReport>) -> Outcome {
    match r {
        Ok(r) => {
            let failed: Vec<String> = r
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("{} {}", c.name, c.detail))
                .collect();
            let mut detail = format!("{}/{} checks", r.checks.len() - failed.len(), r.checks.len());
            if !r.informational.is_empty() {
                detail.push_str(&format!(", {} informational findings", r.informational.len()));
            }
            if !failed.is_empty() {
                detail.push_str(&format!("; failed: {}", failed.join("; ")));
            }
            Outcome { passed: r.passed, detail }
        }
        Err(e) => Outcome { passed: false, detail: format!("error: {e}") },
    }
}

fn compute_json(descriptor: &Path) -> Vec<u8> {
    let out = Command::new(exe())
        .args(["compute", "--inequality", "all", "--format", "json", "--input"])
        .arg(descriptor)
        .output()
        .expect("run compute");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("szpiro-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("seed1.json");
    let status = Command::new(exe())
        .args(["generate", "--seed", "1", "--d0", "2", "--l", "5", "--fibers", "3", "--out"])
        .arg(&file)
        .output()
        .expect("run generate");
    if !status.status.success() {
        return Outcome { passed: false, detail: String::from_utf8_lossy(&status.stderr).into_owned() };
    }
    let a = compute_json(&file);
    let b = compute_json(&file);
    let reports = serde_json::from_slice::<serde_json::Value>(&a).unwrap()["reports"]
        .as_array()
        .map_or(0, Vec::len);
    std::fs::remove_dir_all(&dir).ok();
    Outcome {
        passed: a == b && reports == 4,
        detail: format!("{} bytes, {reports} reports, identical = {}", a.len(), a == b),
    }
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 exact identity suite", Duration::from_secs(1), || from_suite(suites::identities())),
        ("2 constant rederivation", Duration::from_secs(1), || from_suite(suites::constants())),
        ("3 Dusart property", Duration::from_secs(30), || from_suite(suites::dusart())),
        ("4 p-adic log oracle", Duration::from_secs(5), || from_suite(suites::padic())),
        ("5 descent and idempotents", Duration::from_secs(60), || from_suite(suites::descent())),
        ("6 expectation oracle", Duration::from_secs(120), || from_suite(suites::expectation_oracle())),
        ("7 Baby Szpiro steps", Duration::from_secs(1), || from_suite(suites::baby())),
        ("8 end-to-end determinism", Duration::from_secs(10), determinism),
    ];
    let mut all = true;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let ok = outcome.passed && elapsed <= limit;
        all &= ok;
        println!(
            "{} {name} ({:.3}s of {}s): {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            outcome.detail
        );
    }
    if !all {
        eprintln!("some acceptance criteria failed");
        std::process::exit(1);
    }
}
