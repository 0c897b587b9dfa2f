//! End-to-end wells scan: the kurtosis minimum over a fixed (tau, gamma)
//! grid is lowest at an intermediate well count, the U-shape against W.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_multiwell")
}

fn cache_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-cache")
}

/// k_min column of a wells_scan.csv body, keyed by well count.
fn parse_k_min(csv: &str) -> Vec<(u32, f64, usize, usize)> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (
                cols[1].parse().expect("wells column"),
                cols[2].parse().expect("k_min column"),
                cols[8].parse().expect("points column"),
                cols[9].parse().expect("flagged column"),
            )
        })
        .collect()
}

#[test]
fn kurtosis_minimum_is_interior_in_well_count() {
    let root = cache_dir().join("wells-scan-test");
    std::fs::create_dir_all(&root).unwrap();
    let config = root.join("scan.toml");
    std::fs::write(
        &config,
        r#"n = [3]
wells = [2, 8, 25]
e_cut = 950.0
rel_tol = 0.05
diagnostics = ["kurtosis"]

[tau]
min = 7.5
max = 12.5
steps = 3

[gamma]
min = 20.0
max = 45.0
steps = 2

[window]
e_mid = 700.0
half_width = 100.0
"#,
    )
    .unwrap();

    let out_dir = root.join("out");
    let output = Command::new(bin())
        .args(["wells-scan", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out_dir)
        .env("MULTIWELL_CACHE_DIR", cache_dir())
        .output()
        .expect("spawn wells-scan");
    assert!(
        output.status.success(),
        "wells-scan failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let csv = std::fs::read_to_string(out_dir.join("wells_scan.csv")).expect("wells_scan.csv");
    let rows = parse_k_min(&csv);
    assert_eq!(rows.len(), 3, "one aggregate row per well count:\n{csv}");
    let k_of = |w: u32| {
        rows.iter()
            .find(|r| r.0 == w)
            .unwrap_or_else(|| panic!("no row for W={w}:\n{csv}"))
    };
    for &w in &[2u32, 8, 25] {
        let row = k_of(w);
        assert_eq!(row.2, 6, "W={w} should aggregate 6 grid points");
        assert_eq!(row.3, 0, "W={w} has flagged points");
    }
    let (k2, k8, k25) = (k_of(2).1, k_of(8).1, k_of(25).1);
    assert!(
        k8 < k2 && k8 < k25,
        "kurtosis minimum not interior: K_min(W=2)={k2:.3}, K_min(W=8)={k8:.3}, K_min(W=25)={k25:.3}"
    );
}
