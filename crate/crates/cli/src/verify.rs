//! The `verify` battery: causality controls, retarded-time invariance and
//! naive focus constancy, each with the outcome the physics predicts.

use fda_core::analysis::{CAUSALITY_MARGIN_DB, INVARIANCE_EPSILON};
use fda_core::config::ModelKind;
use fda_core::{
    check_causality, check_naive_focus_constancy, check_retarded_invariance, sweep_time_range,
    ExcitationWindow, Execution, GatingMode, SampleDomain, SimulationConfig,
};
use serde_json::{json, Value};

pub const INVARIANCE_TOLERANCE: f64 = 1e-10;
pub const CONSTANCY_TOLERANCE: f64 = 1e-9;
/// Smallest deviation that counts as a naive-model invariance failure.
pub const NAIVE_DEVIATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Pass,
    Fail,
    /// Reported for information only.
    Either,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub expected: Expect,
    pub passed: bool,
    pub summary: String,
    pub report: Value,
}

impl CheckOutcome {
    pub fn as_expected(&self) -> bool {
        match self.expected {
            Expect::Pass => self.passed,
            Expect::Fail => !self.passed,
            Expect::Either => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub max_shift: f64,
    pub execution: Execution,
}

pub fn run(config: &SimulationConfig, opts: &VerifyOptions) -> Result<Vec<CheckOutcome>, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let c = config.array.c_m_per_s;
    let theta0 = config.theta0();
    let (time, range) = (config.time_axis(), config.range_axis());
    let threshold = config.render.floor_db + CAUSALITY_MARGIN_DB;
    let r1 = config.focus_range().map_err(|e| err(&e))?;
    let mut out = Vec::new();

    // Naive law declared to start at t = 0 with nothing enforcing it.
    let declared = ExcitationWindow::starting_at(0.0).map_err(|e| err(&e))?;
    let naive = config
        .scenario_for(ModelKind::Naive)
        .map_err(|e| err(&e))?
        .with_gating(ExcitationWindow::ALWAYS, GatingMode::None);
    let grid =
        sweep_time_range(&naive, time, range, theta0, opts.execution).map_err(|e| err(&e))?;
    let report = check_causality(&grid, &declared, c, threshold).map_err(|e| err(&e))?;
    let at_focus = report
        .violation_near(0.0, r1, time.step() / 2.0, range.step() / 2.0)
        .map(|v| format!(", violation at focus ({:.2} dB)", v.power_db))
        .unwrap_or_default();
    out.push(CheckOutcome {
        name: "causality: naive, declared start t=0, ungated".into(),
        expected: Expect::Fail,
        passed: report.pass || at_focus.is_empty(),
        summary: format!("{report}{at_focus}"),
        report: serde_json::to_value(&report).expect("report serializes"),
    });

    let start = config.excitation.t_start_ns.map_or(0.0, |t| t / 1e9);
    let window = ExcitationWindow::starting_at(start).map_err(|e| err(&e))?;
    let causal = config
        .scenario_for(ModelKind::Causal)
        .map_err(|e| err(&e))?
        .with_gating(window, GatingMode::EmissionTime);
    let grid =
        sweep_time_range(&causal, time, range, theta0, opts.execution).map_err(|e| err(&e))?;
    let report = check_causality(&grid, &window, c, threshold).map_err(|e| err(&e))?;
    out.push(CheckOutcome {
        name: "causality: causal, emission-gated".into(),
        expected: Expect::Pass,
        passed: report.pass,
        summary: report.to_string(),
        report: serde_json::to_value(&report).expect("report serializes"),
    });

    // The configured scenario as given.
    let configured = config.scenario().map_err(|e| err(&e))?;
    let window = configured.window;
    let expected =
        if configured.gating == GatingMode::EmissionTime || window.t_start == f64::NEG_INFINITY {
            Expect::Pass
        } else {
            Expect::Either
        };
    let grid =
        sweep_time_range(&configured, time, range, theta0, opts.execution).map_err(|e| err(&e))?;
    let report = check_causality(&grid, &window, c, threshold).map_err(|e| err(&e))?;
    out.push(CheckOutcome {
        name: format!("causality: configured ({})", configured.model.tag()),
        expected,
        passed: report.pass,
        summary: report.to_string(),
        report: serde_json::to_value(&report).expect("report serializes"),
    });

    let domain = SampleDomain {
        t: (time.min, time.max),
        r: (range.min, range.max),
        theta: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        max_shift: opts.max_shift,
    };
    for (kind, expected) in [
        (ModelKind::Constant, Expect::Pass),
        (ModelKind::Causal, Expect::Pass),
        (ModelKind::Naive, Expect::Fail),
    ] {
        let s = config
            .scenario_for(kind)
            .map_err(|e| err(&e))?
            .with_gating(ExcitationWindow::ALWAYS, GatingMode::None);
        let report =
            check_retarded_invariance(&s, &domain, opts.samples, INVARIANCE_TOLERANCE, config.seed)
                .map_err(|e| err(&e))?;
        // A naive failure only counts if it is clearly above round-off.
        let passed = match kind {
            ModelKind::Naive => report.max_relative_deviation <= NAIVE_DEVIATION,
            _ => report.pass,
        };
        out.push(CheckOutcome {
            name: format!("retarded-time invariance: {}", s.model.tag()),
            expected,
            passed,
            summary: report.to_string(),
            report: serde_json::to_value(&report).expect("report serializes"),
        });
    }

    let s = config
        .scenario_for(ModelKind::Naive)
        .map_err(|e| err(&e))?
        .with_gating(ExcitationWindow::ALWAYS, GatingMode::None);
    let report =
        check_naive_focus_constancy(&s, opts.samples, CONSTANCY_TOLERANCE).map_err(|e| err(&e))?;
    out.push(CheckOutcome {
        name: "naive focus constancy".into(),
        expected: Expect::Pass,
        passed: report.pass,
        summary: report.to_string(),
        report: serde_json::to_value(&report).expect("report serializes"),
    });

    Ok(out)
}

pub fn render_text(outcomes: &[CheckOutcome]) -> String {
    let mut text = String::new();
    for o in outcomes {
        let expectation = match o.expected {
            Expect::Pass => "expected pass",
            Expect::Fail => "expected failure",
            Expect::Either => "informational",
        };
        let verdict = if o.as_expected() { "ok" } else { "UNEXPECTED" };
        text.push_str(&format!(
            "[{verdict}] {} ({expectation}): {}\n",
            o.name, o.summary
        ));
    }
    let all = outcomes.iter().all(CheckOutcome::as_expected);
    text.push_str(if all {
        "all checks as expected\n"
    } else {
        "some checks did not behave as expected\n"
    });
    text
}

pub fn render_json(
    outcomes: &[CheckOutcome],
    config: &SimulationConfig,
    opts: &VerifyOptions,
) -> String {
    let checks: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "expected": match o.expected {
                    Expect::Pass => "pass",
                    Expect::Fail => "fail",
                    Expect::Either => "either",
                },
                "passed": o.passed,
                "as_expected": o.as_expected(),
                "report": o.report,
            })
        })
        .collect();
    let doc = json!({
        "all_as_expected": outcomes.iter().all(CheckOutcome::as_expected),
        "seed": config.seed,
        "samples": opts.samples,
        "max_shift_s": opts.max_shift,
        "invariance_epsilon": INVARIANCE_EPSILON,
        "checks": checks,
        "config": serde_json::to_value(config).expect("config serializes"),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}
