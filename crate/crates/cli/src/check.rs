//! The bundled fixture scenarios, run as a self-check.

use gift_economy::engine;

use crate::config::parse_scenario;
use crate::emit::build_report;

/// Fixture name and TOML text.
pub const FIXTURES: &[(&str, &str)] = &[
    ("repeated_gift", include_str!("../fixtures/repeated_gift.toml")),
    ("two_recipients", include_str!("../fixtures/two_recipients.toml")),
    ("three_recipients", include_str!("../fixtures/three_recipients.toml")),
    ("alternating_trade", include_str!("../fixtures/alternating_trade.toml")),
    ("alternating_trade_2to1", include_str!("../fixtures/alternating_trade_2to1.toml")),
    ("simultaneous_trade", include_str!("../fixtures/simultaneous_trade.toml")),
    ("simultaneous_single_pick", include_str!("../fixtures/simultaneous_single_pick.toml")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn run_fixture(name: &'static str, text: &str) -> FixtureOutcome {
    let outcome = |passed, detail: String| FixtureOutcome { name, passed, detail };
    let file = match parse_scenario(text) {
        Ok(file) => file,
        Err(e) => return outcome(false, e.to_string()),
    };
    let trace = match engine::run(&file.scenario) {
        Ok(trace) => trace,
        Err(e) => return outcome(false, e.to_string()),
    };
    match build_report(&file, &trace) {
        Ok(report) => {
            let analyses: Vec<String> = file.analyses.iter().map(|a| a.to_string()).collect();
            outcome(report.passed(), format!("{} steps; {}", trace.steps.len(), analyses.join(", ")))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

/// Runs every fixture, each on its own thread; results keep fixture order.
pub fn run_fixtures() -> Vec<FixtureOutcome> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = FIXTURES
            .iter()
            .map(|&(name, text)| scope.spawn(move || run_fixture(name, text)))
            .collect();
        handles
            .into_iter()
            .zip(FIXTURES)
            .map(|(h, &(name, _))| {
                h.join().unwrap_or_else(|_| FixtureOutcome {
                    name,
                    passed: false,
                    detail: "panicked".into(),
                })
            })
            .collect()
    })
}
