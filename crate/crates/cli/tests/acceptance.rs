//! Acceptance suite: runs the builtin experiments through the binary and
//! prints one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

/// A builtin run that counts toward a criterion. `needs` lists check-name
/// fragments with the minimum number of checks that must carry them, so a
/// criterion cannot pass on a report that silently skipped its trials.
struct Run {
    builtin: &'static str,
    needs: &'static [(&'static str, usize)],
}

struct Criterion {
    id: u32,
    title: &'static str,
    runs: &'static [Run],
    /// Wall-clock limit for all runs of the criterion together.
    limit: Option<Duration>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "classical functional inequality on the line",
        runs: &[Run { builtin: "classical-bs-1d", needs: &[("reference value", 1), ("value <= bound", 100), ("admissibility slack", 100)] }],
        limit: Some(Duration::from_secs(30)),
    },
    Criterion {
        id: 2,
        title: "product cost bound, n = 1 and n = 2",
        runs: &[
            Run { builtin: "thm-1.1-product-cost", needs: &[("reference value", 1), ("value <= bound", 50)] },
            Run { builtin: "product-cost-plane", needs: &[("reference value", 1), ("value <= bound", 10)] },
        ],
        limit: Some(Duration::from_secs(300)),
    },
    Criterion {
        id: 3,
        title: "homogeneity of maximizers",
        runs: &[
            Run { builtin: "maximizer-homogeneity", needs: &[("fitted degree", 2)] },
            Run { builtin: "maximizer-homogeneity-triple", needs: &[("fitted degree", 3)] },
        ],
        limit: None,
    },
    Criterion {
        id: 4,
        title: "first-order and variance identities",
        runs: &[Run { builtin: "stationarity-identities", needs: &[("first-order", 1), ("variance", 1)] }],
        limit: None,
    },
    Criterion {
        id: 5,
        title: "transport step monotonicity, exact LP",
        runs: &[Run {
            builtin: "transport-monotonicity",
            needs: &[("log BS(V) <= log BS(Phi)", 50), ("complementary slackness", 50)],
        }],
        limit: Some(Duration::from_secs(60)),
    },
    Criterion {
        id: 6,
        title: "transport-entropy inequality",
        runs: &[Run { builtin: "thm-2.4-transport-entropy", needs: &[("K_min <= weighted entropy", 100), ("at nu = mu", 4)] }],
        limit: None,
    },
    Criterion {
        id: 7,
        title: "set and function formulations",
        runs: &[Run { builtin: "set-function-lift", needs: &[("lift admissibility slack", 20), ("function tuple: value <= reference lift", 20)] }],
        limit: None,
    },
    Criterion {
        id: 8,
        title: "symmetrization",
        runs: &[Run { builtin: "symmetrization", needs: &[("worst step measure ratio", 95), ("share converged", 1)] }],
        limit: None,
    },
    Criterion {
        id: 9,
        title: "sphere reduction",
        runs: &[Run { builtin: "sphere-reduction", needs: &[("lift value / spherical value", 20), ("slack signs agree", 20)] }],
        limit: None,
    },
    Criterion {
        id: 10,
        title: "spherical improvement",
        runs: &[Run {
            builtin: "spherical-improvement",
            needs: &[("value after >= value before", 20), ("flatness", 2), ("product of ratios", 1)],
        }],
        limit: None,
    },
    Criterion {
        id: 11,
        title: "layer-cake identity",
        runs: &[Run { builtin: "layer-cake", needs: &[("", 30)] }],
        limit: None,
    },
    Criterion {
        id: 12,
        title: "exponent system in exact arithmetic",
        runs: &[
            Run { builtin: "exponent-system", needs: &[("alpha_", 3), ("beta_", 3), ("tau_", 3), ("joint degree", 1)] },
            Run { builtin: "exponent-system-weighted", needs: &[("= A", 3)] },
        ],
        limit: None,
    },
];

/// Runs one builtin; returns the list of problems found (empty on success).
fn check_run(run: &Run, work: &Path) -> Vec<String> {
    let cfg = work.join(format!("{}.json", run.builtin));
    std::fs::write(&cfg, format!(r#"{{"builtin": "{}"}}"#, run.builtin)).unwrap();
    let out_dir = work.join(run.builtin);
    let out = Command::new(env!("CARGO_BIN_EXE_santalo-lab"))
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .expect("binary runs");
    let mut problems = Vec::new();
    if out.status.code() != Some(0) {
        problems.push(format!("{}: exit {:?}", run.builtin, out.status.code()));
        for line in String::from_utf8_lossy(&out.stderr).lines().take(5) {
            problems.push(format!("  {line}"));
        }
    }
    let report: Value = match std::fs::read_to_string(out_dir.join("report.json")) {
        Ok(text) => serde_json::from_str(&text).expect("report.json parses"),
        Err(e) => {
            problems.push(format!("{}: no report ({e})", run.builtin));
            return problems;
        }
    };
    let checks = report["checks"].as_array().cloned().unwrap_or_default();
    let all_pass = checks.iter().all(|c| c["pass"] == true);
    if report["pass"] != all_pass {
        problems.push(format!("{}: overall flag disagrees with the checks", run.builtin));
    }
    for (fragment, min) in run.needs {
        let n = checks.iter().filter(|c| c["name"].as_str().is_some_and(|s| s.contains(fragment))).count();
        if n < *min {
            problems.push(format!("{}: {n} checks matching {fragment:?}, need {min}", run.builtin));
        }
    }
    problems
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let mut failed = 0;
    for c in CRITERIA {
        let start = Instant::now();
        let mut problems: Vec<String> = c.runs.iter().flat_map(|r| check_run(r, work.path())).collect();
        let elapsed = start.elapsed();
        if let Some(limit) = c.limit {
            if elapsed > limit {
                problems.push(format!("runtime {:.1} s over the {} s limit", elapsed.as_secs_f64(), limit.as_secs()));
            }
        }
        let verdict = if problems.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {:>2}: {} ({:.1} s)", c.id, c.title, elapsed.as_secs_f64());
        for p in &problems {
            println!("    {p}");
        }
        failed += usize::from(!problems.is_empty());
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
