//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "repeated gift"
//! entities = ["P", "Q"]
//! goods = ["a"]
//! mode = "force-all"          # hyr | hyr-single | force-all
//! max_steps = 50
//! analyses = ["cycle"]        # distribution | equilibrium | contraction | cycle
//! cycle = [["supply P a", "demand Q a"]]
//!
//! [[curve]]
//! supplier = "P"
//! good = "a"
//! recipient = "Q"
//! a = 0.5
//! b = 1.0
//! ```
//!
//! `prefix` (states visited once) and `[[balance]]` tables
//! (`entity`, `versus`, `value`) are optional. Unknown keys are rejected.

use std::fmt;
use std::ops::Range;

use gift_economy::{
    CurveTable, EntityId, GoodId, Offer, Scenario, SelectionMode, State, StateSequence, Transaction, YieldCurve,
};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Default absolute tolerance for cycle detection.
pub const DEFAULT_CYCLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Distribution,
    Equilibrium,
    Contraction,
    Cycle,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Analysis::Distribution => "distribution",
            Analysis::Equilibrium => "equilibrium",
            Analysis::Contraction => "contraction",
            Analysis::Cycle => "cycle",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Hyr,
    HyrSingle,
    ForceAll,
}

impl From<Mode> for SelectionMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Hyr => SelectionMode::Hyr,
            Mode::HyrSingle => SelectionMode::HyrSingle,
            Mode::ForceAll => SelectionMode::ForceAll,
        }
    }
}

impl From<SelectionMode> for Mode {
    fn from(mode: SelectionMode) -> Self {
        match mode {
            SelectionMode::Hyr => Mode::Hyr,
            SelectionMode::HyrSingle => Mode::HyrSingle,
            SelectionMode::ForceAll => Mode::ForceAll,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    pub supplier: String,
    pub good: String,
    pub recipient: String,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceEntry {
    pub entity: String,
    pub versus: String,
    pub value: f64,
}

/// The document as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub entities: Vec<Spanned<String>>,
    pub goods: Vec<Spanned<String>>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<Spanned<usize>>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_tolerance: Option<Spanned<f64>>,
    #[serde(default)]
    pub prefix: Vec<Vec<Spanned<String>>>,
    pub cycle: Spanned<Vec<Vec<Spanned<String>>>>,
    #[serde(default)]
    pub curve: Vec<Spanned<CurveEntry>>,
    #[serde(default)]
    pub balance: Vec<Spanned<BalanceEntry>>,
}

/// A validated scenario plus the analyses requested for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub scenario: Scenario,
    pub analyses: Vec<Analysis>,
    pub cycle_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Range<usize>, message: impl fmt::Display) -> ConfigError {
        ConfigError::Invalid {
            line: self.line(span),
            message: message.to_string(),
        }
    }
}

fn parse_offer(text: &str) -> Result<Offer, String> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let [kind, entity, good] = parts[..] else {
        return Err(format!("offer {text:?} must read \"supply <entity> <good>\" or \"demand <entity> <good>\""));
    };
    let entity = EntityId::new(entity).map_err(|e| e.to_string())?;
    let good = GoodId::new(good).map_err(|e| e.to_string())?;
    match kind {
        "supply" => Ok(Offer::supply(&entity, &good)),
        "demand" => Ok(Offer::demand(&entity, &good)),
        other => Err(format!("unknown offer kind {other:?}; expected supply or demand")),
    }
}

fn format_offer(offer: &Offer) -> String {
    let kind = if offer.is_supply() { "supply" } else { "demand" };
    format!("{kind} {} {}", offer.entity(), offer.good())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))
    }

    /// Validates against the text it was parsed from, so errors can cite lines.
    pub fn validate(&self, text: &str) -> Result<ScenarioFile, ConfigError> {
        let at = Locator { text };
        let entities = self
            .entities
            .iter()
            .map(|s| EntityId::new(s.get_ref()).map_err(|e| at.err(s.span(), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let goods = self
            .goods
            .iter()
            .map(|s| GoodId::new(s.get_ref()).map_err(|e| at.err(s.span(), e)))
            .collect::<Result<Vec<_>, _>>()?;

        let mut curves = CurveTable::new();
        for entry in &self.curve {
            let c = entry.get_ref();
            let build = || -> Result<(Transaction, YieldCurve), gift_economy::Error> {
                let t = Transaction::new(&EntityId::new(&c.supplier)?, &GoodId::new(&c.good)?, &EntityId::new(&c.recipient)?)?;
                Ok((t, YieldCurve::new(c.a, c.b)?))
            };
            let (t, curve) = build().map_err(|e| at.err(entry.span(), format!("curve: {e}")))?;
            if curves.insert(t.clone(), curve).is_some() {
                return Err(at.err(entry.span(), format!("curve: second curve for {t}")));
            }
        }

        let states = |list: &[Vec<Spanned<String>>]| -> Result<Vec<State>, ConfigError> {
            list.iter()
                .map(|state| {
                    state
                        .iter()
                        .map(|o| parse_offer(o.get_ref()).map_err(|e| at.err(o.span(), e)))
                        .collect::<Result<State, _>>()
                })
                .collect()
        };
        let sequence = StateSequence::new(states(&self.prefix)?, states(self.cycle.get_ref())?)
            .map_err(|e| at.err(self.cycle.span(), e))?;

        let mut scenario = Scenario::new(entities, goods, curves, sequence, self.mode.into())
            .map_err(|e| at.err(self.cycle.span(), e))?;
        if let Some(steps) = &self.max_steps {
            scenario = scenario
                .with_max_steps(*steps.get_ref())
                .map_err(|e| at.err(steps.span(), e))?;
        }
        for entry in &self.balance {
            let b = entry.get_ref();
            let set = |sc: Scenario| -> Result<Scenario, gift_economy::Error> {
                sc.with_initial_balance(&EntityId::new(&b.entity)?, &EntityId::new(&b.versus)?, b.value)
            };
            scenario = set(scenario).map_err(|e| at.err(entry.span(), format!("balance: {e}")))?;
        }

        let cycle_tolerance = match &self.cycle_tolerance {
            Some(t) if !(t.get_ref().is_finite() && *t.get_ref() > 0.0) => {
                return Err(at.err(t.span(), "cycle_tolerance must be positive"));
            }
            Some(t) => *t.get_ref(),
            None => DEFAULT_CYCLE_TOLERANCE,
        };
        let mut analyses = self.analyses.clone();
        analyses.sort();
        analyses.dedup();
        Ok(ScenarioFile {
            name: self.name.clone(),
            scenario,
            analyses,
            cycle_tolerance,
        })
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ConfigError> {
    ScenarioConfig::from_toml(text)?.validate(text)
}

fn unspanned<T>(value: T) -> Spanned<T> {
    Spanned::new(0..0, value)
}

impl ScenarioFile {
    /// The canonical document for this scenario.
    pub fn to_config(&self) -> ScenarioConfig {
        let sc = &self.scenario;
        let state_strings = |states: &[State]| -> Vec<Vec<Spanned<String>>> {
            states
                .iter()
                .map(|s| s.offers().iter_occurrences().map(|o| unspanned(format_offer(o))).collect())
                .collect()
        };
        let curve = sc
            .curves()
            .iter()
            .map(|(t, c)| {
                unspanned(CurveEntry {
                    supplier: t.supplier().to_string(),
                    good: t.good().to_string(),
                    recipient: t.recipient().to_string(),
                    a: c.coefficient(),
                    b: c.nominal(),
                })
            })
            .collect();
        let balance = sc
            .initial_balances()
            .pairs()
            .map(|(p, q, value)| {
                unspanned(BalanceEntry {
                    entity: p.to_string(),
                    versus: q.to_string(),
                    value,
                })
            })
            .collect();
        ScenarioConfig {
            name: self.name.clone(),
            entities: sc.entities().iter().map(|e| unspanned(e.to_string())).collect(),
            goods: sc.goods().iter().map(|g| unspanned(g.to_string())).collect(),
            mode: sc.mode().into(),
            max_steps: Some(unspanned(sc.max_steps())),
            analyses: self.analyses.clone(),
            cycle_tolerance: Some(unspanned(self.cycle_tolerance)),
            prefix: state_strings(sc.states().prefix()),
            cycle: unspanned(state_strings(sc.states().cycle())),
            curve,
            balance,
        }
    }

    /// Canonical TOML text; parsing it gives back an equal `ScenarioFile`.
    pub fn to_config_text(&self) -> String {
        toml::to_string(&self.to_config()).expect("scenario config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gift_economy::engine::DEFAULT_MAX_STEPS;

    const MINIMAL: &str = r#"
entities = ["P", "Q"]
goods = ["a"]
mode = "force-all"
cycle = [["supply P a", "demand Q a"]]

[[curve]]
supplier = "P"
good = "a"
recipient = "Q"
a = 0.5
b = 1.0
"#;

    #[test]
    fn minimal_repeated_gift() {
        let file = parse_scenario(MINIMAL).unwrap();
        assert_eq!(file.scenario.states().cycle().len(), 1);
        assert_eq!(file.scenario.mode(), SelectionMode::ForceAll);
        assert_eq!(file.scenario.max_steps(), DEFAULT_MAX_STEPS);
        assert_eq!(file.cycle_tolerance, DEFAULT_CYCLE_TOLERANCE);
    }

    #[test]
    fn coefficient_above_one_is_rejected_with_its_line() {
        let text = MINIMAL.replace("a = 0.5", "a = 1.2");
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 7:"), "{msg}");
        assert!(msg.contains("1.2") && msg.contains("single step"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario(&format!("colour = 3\n{MINIMAL}")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(ref m) if m.contains("colour")), "{err}");
        let err = parse_scenario(&MINIMAL.replace("b = 1.0", "b = 1.0\nc = 2")).unwrap_err();
        assert!(err.to_string().contains('c'), "{err}");
    }

    #[test]
    fn undeclared_ids_and_bad_offers() {
        let err = parse_scenario(&MINIMAL.replace("\"demand Q a\"", "\"demand R a\"")).unwrap_err();
        assert!(err.to_string().contains("undeclared entity R"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("\"demand Q a\"", "\"want Q a\"")).unwrap_err();
        assert_eq!(err.to_string(), "line 5: unknown offer kind \"want\"; expected supply or demand");
        let err = parse_scenario(&MINIMAL.replace("[[\"supply P a\", \"demand Q a\"]]", "[]")).unwrap_err();
        assert!(err.to_string().contains("at least one cycle state"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("b = 1.0", "b = -1.0")).unwrap_err();
        assert!(err.to_string().contains("non-negative"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "name = \"gift\"\nanalyses = [\"cycle\"]\n{}\n[[balance]]\nentity = \"Q\"\nversus = \"P\"\nvalue = 0.25\n",
            MINIMAL
        );
        let file = parse_scenario(&text).unwrap();
        let echoed = file.to_config_text();
        assert_eq!(parse_scenario(&echoed).unwrap(), file);
        assert_eq!(parse_scenario(&echoed).unwrap().to_config_text(), echoed);
    }
}
