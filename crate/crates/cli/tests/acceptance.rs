//! Command-line acceptance: the path and density subcommands emit figure
//! data with the expected qualitative shape, artifacts reproduce bitwise
//! from their seed, and failures exit with the documented codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ggpop"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ggpop-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Parse a two-or-more-column CSV written by the tool (one `# repro` line,
/// one header line, then rows).
fn read_csv(path: &Path) -> (String, String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    let mut lines = text.lines();
    let repro = lines.next().unwrap().to_string();
    assert!(repro.starts_with("# repro: "), "missing repro line in {path:?}");
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().unwrap_or(f64::NAN))
                .collect::<Vec<f64>>()
        })
        .collect();
    (repro, header, rows)
}

#[test]
fn acceptance_14_figure_data() {
    // --- path data for a sweep of stability indices (limit dynamics) ---
    let out = scratch("sde");
    let status = bin()
        .args([
            "sde",
            "--alpha",
            "0.3,0.5,0.7",
            "--beta",
            "1",
            "--gamma",
            "0",
            "--dt",
            "1e-3",
            "--t-end",
            "5",
            "--paths",
            "2",
            "--thin",
            "5",
            "--seed",
            "99",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for alpha in ["0.300", "0.500", "0.700"] {
        let (_, header, rows) = read_csv(&out.join(format!("sde_alpha{alpha}_gamma0.000.csv")));
        assert_eq!(header, "replicate,t,s");
        assert!(!rows.is_empty());
        // positivity of every emitted state
        assert!(rows.iter().all(|r| r[2] > 0.0), "nonpositive state at alpha {alpha}");
        // roughness: increments of one replicate change sign often and the
        // quadratic variation is nonzero
        let path: Vec<f64> = rows.iter().filter(|r| r[0] == 0.0).map(|r| r[2]).collect();
        let mut flips = 0usize;
        let mut qv = 0.0;
        for w in path.windows(3) {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            if d1 * d2 < 0.0 {
                flips += 1;
            }
            qv += d1 * d1;
        }
        assert!(qv > 0.0, "flat path at alpha {alpha}");
        assert!(
            flips as f64 > 0.2 * path.len() as f64,
            "path too smooth at alpha {alpha}: {flips} flips over {}",
            path.len()
        );
    }

    // --- stationary-family paths for a sweep of tail exponents ---
    let out2 = scratch("sde2");
    let status = bin()
        .args([
            "sde", "--alpha", "0.5", "--beta", "1", "--gamma", "0.1,0.5,1", "--dt", "1e-3",
            "--t-end", "2", "--paths", "2", "--thin", "5", "--seed", "99", "--out",
        ])
        .arg(&out2)
        .status()
        .unwrap();
    assert!(status.success());
    for gamma in ["0.100", "0.500", "1.000"] {
        let (_, _, rows) = read_csv(&out2.join(format!("sde_alpha0.500_gamma{gamma}.csv")));
        assert!(rows.iter().all(|r| r[2] > 0.0));
    }

    // --- density curves: ordered in gamma, converging to the speed measure ---
    let out3 = scratch("density");
    let status = bin()
        .args([
            "density",
            "--alpha",
            "0.5",
            "--beta",
            "1",
            "--gamma",
            "0.1,0.05,0.025",
            "--include-speed-measure",
            "--x-min",
            "0.5",
            "--x-max",
            "5",
            "--points",
            "60",
            "--seed",
            "99",
            "--out",
        ])
        .arg(&out3)
        .status()
        .unwrap();
    assert!(status.success());
    let (_, _, speed) = read_csv(&out3.join("speed_measure.csv"));
    let gammas = [0.1, 0.05, 0.025];
    let curves: Vec<Vec<Vec<f64>>> = gammas
        .iter()
        .map(|g| read_csv(&out3.join(format!("density_gamma{g:.4}.csv"))).2)
        .collect();
    // pointwise on [0.5, 5]: |curve_gamma - speed| decreases as gamma drops
    for i in 0..speed.len() {
        let m = speed[i][1];
        let gaps: Vec<f64> = curves.iter().map(|c| (c[i][1] - m).abs()).collect();
        assert!(
            gaps[0] >= gaps[1] && gaps[1] >= gaps[2],
            "gaps not ordered at x = {}: {gaps:?}",
            speed[i][0]
        );
    }
    // the explicit x = 2 check
    let idx = speed
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (a[0] - 2.0).abs().partial_cmp(&(b[0] - 2.0).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let gap_at_2: Vec<f64> = curves.iter().map(|c| (c[idx][1] - speed[idx][1]).abs()).collect();
    assert!(
        gap_at_2[0] > gap_at_2[1] && gap_at_2[1] > gap_at_2[2],
        "gap at x = 2 not strictly decreasing in gamma: {gap_at_2:?}"
    );
    println!(
        "ACCEPTANCE 14 PASS: figure data (positivity, roughness, density ordering; gap-at-2 {gap_at_2:?})"
    );
}

#[test]
fn artifacts_reproduce_bitwise_from_seed() {
    let out_a = scratch("repro-a");
    let out_b = scratch("repro-b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "sde", "--alpha", "0.5", "--beta", "1", "--gamma", "0", "--dt", "1e-3",
                "--t-end", "1", "--paths", "3", "--seed", "4242", "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read_to_string(out_a.join("sde_alpha0.500_gamma0.000.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("sde_alpha0.500_gamma0.000.csv")).unwrap();
    // identical except for the --out path inside the repro line
    let strip = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn exit_codes_and_error_json() {
    // invalid stability index: validation, exit 2, machine-readable error
    let out = bin()
        .args(["urn", "--alpha", "1.2", "--out"])
        .arg(scratch("bad"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let parsed: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(parsed["error"], "validation");

    // density at gamma = 0 has no stationary law: validation
    let out = bin()
        .args(["density", "--gamma", "0", "--out"])
        .arg(scratch("bad2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // explicit integration blows up when the diffusion coefficient grows
    // superlinearly (gamma well above 1): numeric failure, exit 3
    let out = bin()
        .args([
            "sde", "--alpha", "0.5", "--gamma", "4", "--dt", "1e-3", "--t-end", "2",
            "--paths", "2", "--seed", "99", "--out",
        ])
        .arg(scratch("explode"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let parsed: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(parsed["error"], "numeric");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dirs = [scratch("w1"), scratch("w2")];
    for (dir, workers) in dirs.iter().zip(["1", "2"]) {
        let status = bin()
            .args([
                "verify",
                "--experiment",
                "gamma-limit",
                "--gamma-list",
                "0.5,0.1",
                "--times",
                "0.2",
                "--replicates",
                "300",
                "--seed",
                "31",
                "--workers",
                workers,
                "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let strip = |p: &Path| {
        std::fs::read_to_string(p.join("gamma-limit_distances.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&dirs[0]), strip(&dirs[1]));
}

#[test]
fn config_file_roundtrip_with_flag_override() {
    let dir = scratch("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "# small urn run\nalpha = 0.5\nbeta = 1.0\nn = 12\nreplicates = 500\nseed = 7\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let status = bin()
        .args(["urn", "--config"])
        .arg(&cfg)
        .args(["--replicates", "200", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("urn_k_histogram.json")).unwrap())
            .unwrap();
    // flag wins over file; file supplies the rest
    assert_eq!(sidecar["params"]["replicates"], 200);
    assert_eq!(sidecar["params"]["n"], 12);
    assert_eq!(sidecar["seed"], 7);
}
