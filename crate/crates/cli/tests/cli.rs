use std::path::PathBuf;
use std::process::{Command, Output};

fn szpiro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_szpiro")).args(args).output().expect("run szpiro")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("szpiro-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn generated(dir: &std::path::Path, seed: &str) -> PathBuf {
    let file = dir.join(format!("gen{seed}.json"));
    let out = szpiro(&["generate", "--seed", seed, "--d0", "2", "--l", "5", "--fibers", "2", "--out", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("seed {seed}")));
    file
}

#[test]
fn compute_markdown_with_sidecar() {
    let dir = scratch("md");
    let input = generated(&dir, "3");
    let report = dir.join("report.md");
    let out = szpiro(&["compute", "--input", input.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(out.status.success());
    let md = std::fs::read_to_string(&report).unwrap();
    for heading in ["## Probabilistic", "## Baby", "## Explicit", "## Tautological"] {
        assert!(md.contains(heading), "{heading}");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["reports"].as_array().unwrap().len(), 4);
    assert_eq!(json["qpilot_residual"]["verdict"], "holds");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn single_inequality_and_precision() {
    let dir = scratch("single");
    let input = generated(&dir, "4");
    let out = szpiro(&[
        "compute", "--input", input.to_str().unwrap(), "--inequality", "explicit", "--format", "json", "--precision", "30",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["kind"], "explicit");
    assert_eq!(reports[0]["components"]["small"]["method"], "dusart");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn validation_failures_exit_two() {
    let dir = scratch("invalid");
    let input = generated(&dir, "5");
    let text = std::fs::read_to_string(&input).unwrap();

    let l3 = dir.join("l3.json");
    std::fs::write(&l3, text.replace("\"l\": 5", "\"l\": 3")).unwrap();
    let out = szpiro(&["compute", "--input", l3.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole of eps_l"));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for f in v["fibers"].as_array_mut().unwrap() {
        for p in f["places"].as_array_mut().unwrap() {
            p.as_object_mut().unwrap().remove("bad");
        }
    }
    let nobad = dir.join("nobad.json");
    std::fs::write(&nobad, v.to_string()).unwrap();
    let out = szpiro(&["compute", "--input", nobad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-empty set of bad multiplicative places"));

    let broken = dir.join("broken.json");
    std::fs::write(&broken, "{\n  \"schema\": 1,\n  \"l\": ]").unwrap();
    let out = szpiro(&["compute", "--input", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn missing_input_is_an_internal_error() {
    let out = szpiro(&["compute", "--input", "/nonexistent/descriptor.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_and_constants() {
    let out = szpiro(&["verify", "--suite", "constants"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS constants"));
    assert_eq!(szpiro(&["verify", "--suite", "nope"]).status.code(), Some(2));

    let out = szpiro(&["derive-constants", "--l", "5", "--d0", "1"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["b0_candidate"], 316495);
    assert_eq!(json["constants"]["b"], 172800000);
    assert_eq!(json["constants"]["eps_prob"], "32/3");
    assert_eq!(szpiro(&["derive-constants", "--l", "3", "--d0", "1"]).status.code(), Some(2));
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let a = szpiro(&["generate", "--seed", "1", "--d0", "2", "--l", "5"]);
    let b = szpiro(&["generate", "--seed", "1", "--d0", "2", "--l", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let desc = szpiro_core::global_model::ThetaDataDescriptor::parse(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(desc.to_json().as_bytes(), a.stdout.as_slice());
}
