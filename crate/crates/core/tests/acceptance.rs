//! Acceptance run: one line per criterion on stdout, then a single assert.
//!
//! Every tolerance is pinned here rather than taken from the suite defaults,
//! so a change to a default cannot silently loosen a criterion. Lines are
//! written to the raw stdout handle so they show without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use ialpha::campaign::{run, CampaignConfig, CampaignReport, Suite};

const SEED: u64 = 20_240_601;

struct Criterion {
    number: usize,
    suite: Suite,
    samples: usize,
    alphas: &'static [f64],
    tolerances: &'static [(&'static str, f64)],
    budget: Duration,
}

const CRITERIA: [Criterion; 7] = [
    Criterion {
        number: 1,
        suite: Suite::Identity,
        samples: 500,
        alphas: &[0.25, 0.5, 0.9, 1.1, 2.0, 5.0],
        tolerances: &[
            ("self_divergence", 0.0),
            ("uniform_gap", 1e-10),
            ("tilt_mass", 1e-12),
            ("norm_identity", 1e-12),
            ("path_agreement", 1e-11),
            ("jensen", 1e-12),
        ],
        budget: Duration::from_secs(10),
    },
    Criterion {
        number: 2,
        suite: Suite::Limits,
        samples: 100,
        alphas: &[],
        tolerances: &[("monotone_slack", 0.0), ("bound_factor", 10.0)],
        budget: Duration::from_secs(10),
    },
    Criterion {
        number: 3,
        suite: Suite::Parallelogram,
        samples: 1000,
        alphas: &[0.3, 0.5, 0.8, 1.5, 2.0, 4.0],
        tolerances: &[("gap_slack", 1e-10), ("scale_slack", 1e-12), ("identity", 1e-11)],
        budget: Duration::from_secs(30),
    },
    Criterion {
        number: 4,
        suite: Suite::Derivative,
        samples: 200,
        alphas: &[0.5, 2.0],
        tolerances: &[("relative_error", 1e-5), ("fd_step", 1e-5), ("min_tv", 1e-3)],
        budget: Duration::from_secs(30),
    },
    Criterion {
        number: 5,
        suite: Suite::Projection,
        samples: 50,
        alphas: &[0.5, 2.0],
        tolerances: &[
            ("value", 1e-5),
            ("tv", 1e-3),
            ("uniqueness", 1e-6),
            ("oracle_coarse", 1e-3),
            ("oracle_fine", 1e-5),
        ],
        budget: Duration::from_secs(300),
    },
    Criterion {
        number: 6,
        suite: Suite::Pythagorean,
        samples: 30,
        alphas: &[0.5, 2.0],
        tolerances: &[
            ("equivalence_margin", 1e-6),
            ("equivalence_rate", 0.999),
            ("equality", 1e-8),
            ("certificate", 1e-6),
            ("negative_control", 1e-4),
            ("perturbation_tv", 0.01),
            ("iterated_tv", 1e-5),
        ],
        budget: Duration::from_secs(300),
    },
    Criterion {
        number: 7,
        suite: Suite::Maxent,
        samples: 1,
        alphas: &[0.9, 1.5, 2.0, 3.0],
        tolerances: &[
            ("closed_form", 1e-6),
            ("gap", 5e-3),
            ("maximizer", 5e-3),
            ("cell_width_1d", 1e-3),
            ("cell_width_2d", 0.05),
        ],
        budget: Duration::from_secs(120),
    },
];

impl Criterion {
    fn config(&self) -> CampaignConfig {
        let mut cfg = CampaignConfig::new(self.suite, self.samples, SEED);
        if !self.alphas.is_empty() {
            cfg.alphas = Some(self.alphas.to_vec());
        }
        cfg.tolerances = self.tolerances.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        cfg
    }
}

fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn summary(report: &CampaignReport) -> String {
    report
        .checks
        .iter()
        .map(|c| {
            let tag = if c.passed { "" } else { " FAILED" };
            format!("{} worst {} (tol {}, n {}){tag}", c.name, c.worst.0, c.tolerance.0, c.evaluated)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn acceptance() {
    let mut all_ok = true;
    let mut first_runs = Vec::new();
    // libtest has already written "test acceptance ... " without a newline
    line("");

    for c in &CRITERIA {
        let cfg = c.config();
        let start = Instant::now();
        let report = run(&cfg).unwrap_or_else(|e| panic!("{} campaign errored: {e}", c.suite.name()));
        let took = start.elapsed();
        let ok = report.passed && took < c.budget;
        all_ok &= ok;
        line(&format!(
            "criterion {}: {} [{}] {:.2}s (budget {}s): {}",
            c.number,
            verdict(ok),
            c.suite.name(),
            took.as_secs_f64(),
            c.budget.as_secs(),
            summary(&report)
        ));
        if !report.notes.is_empty() {
            let notes: Vec<String> = report.notes.iter().map(|(k, v)| format!("{k} = {}", v.0)).collect();
            line(&format!("  notes: {}", notes.join("; ")));
        }
        first_runs.push((cfg, report.to_json()));
    }

    let start = Instant::now();
    let mut differing = Vec::new();
    for (cfg, json) in &first_runs {
        let again = run(cfg).expect("rerun").to_json();
        if again.as_bytes() != json.as_bytes() {
            differing.push(cfg.suite.name());
        }
    }
    let ok = differing.is_empty();
    all_ok &= ok;
    line(&format!(
        "criterion 8: {} [determinism] {} campaigns re-run with seed {SEED} in {:.2}s, byte-identical reports required; differing: {:?}",
        verdict(ok),
        first_runs.len(),
        start.elapsed().as_secs_f64(),
        differing
    ));

    assert!(all_ok, "at least one acceptance criterion failed; see the lines above");
}
