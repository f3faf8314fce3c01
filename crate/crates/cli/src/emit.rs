//! Trace CSV and analysis report JSON.

use gift_economy::analytics::{self, AnalysisError, ValuationPoint};
use gift_economy::engine::HaltReason;
use gift_economy::{Credit, EntityId, Trace, Transaction, YieldCurve};
use serde::Serialize;

use crate::config::{Analysis, ScenarioFile};

/// Significant digits for every number in the trace CSV.
pub const CSV_DIGITS: usize = 12;

pub const DISTRIBUTION_TOLERANCE: f64 = 0.01;
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;
pub const CONTRACTION_TOLERANCE: f64 = 1e-9;

fn digits(x: f64) -> String {
    Credit::from_f64(x).format_significant(CSV_DIGITS)
}

/// The trace as CSV: one row per selected transaction occurrence, ordered by
/// step and then transaction. A step that selects nothing gets one row with
/// empty transaction fields, repeating the balance of the previous row.
pub fn emit_trace(trace: &Trace) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["step", "supplier", "good", "recipient", "yield", "balance_after"])
        .expect("writing to memory");
    let mut last_balance = String::new();
    for step in &trace.steps {
        let index = step.index.to_string();
        if step.selected.is_empty() {
            out.write_record([index.as_str(), "", "", "", "", last_balance.as_str()])
                .expect("writing to memory");
            continue;
        }
        for c in &step.selected {
            let t = &c.transaction;
            last_balance = digits(step.balances.get(t.supplier(), t.recipient()));
            out.write_record([
                index.as_str(),
                t.supplier().as_str(),
                t.good().as_str(),
                t.recipient().as_str(),
                c.supplier_yield.format_significant(CSV_DIGITS).as_str(),
                last_balance.as_str(),
            ])
            .expect("writing to memory");
        }
    }
    String::from_utf8(out.into_inner().expect("flushing to memory")).expect("CSV is UTF-8")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("{analysis} analysis does not apply: {reason}")]
    Inapplicable { analysis: Analysis, reason: String },
}

fn inapplicable(analysis: Analysis, reason: impl ToString) -> ReportError {
    ReportError::Inapplicable {
        analysis,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub steps: usize,
    pub halt_reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleSection>,
}

impl Report {
    /// Every requested analysis met its tolerance.
    pub fn passed(&self) -> bool {
        self.distribution.as_ref().is_none_or(|s| s.pass)
            && self.equilibrium.as_ref().is_none_or(|s| s.pass)
            && self.contraction.as_ref().is_none_or(|s| s.pass)
            && self.cycle.as_ref().is_none_or(|s| s.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionSection {
    pub targets: Vec<String>,
    pub predicted: Vec<f64>,
    pub empirical: Vec<f64>,
    pub max_abs_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    pub kind: &'static str,
    pub balances: Vec<f64>,
    pub side: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSection {
    pub balance_of: [String; 2],
    pub closed_form: ClosedForm,
    pub detected: Vec<f64>,
    pub discrepancy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionSection {
    pub theoretical: f64,
    pub measured: f64,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceEntry {
    pub entity: String,
    pub versus: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionEntry {
    pub supplier: String,
    pub good: String,
    pub recipient: String,
    #[serde(rename = "yield")]
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CyclePoint {
    pub step: usize,
    pub balances: Vec<BalanceEntry>,
    pub selections: Vec<SelectionEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleSection {
    pub tolerance: f64,
    pub found: bool,
    pub period: usize,
    pub points: Vec<CyclePoint>,
    pub pass: bool,
}

/// The two traders of a bilateral scenario: `p` supplies through the
/// first curve in table order, `q` through the other.
struct Bilateral {
    p: EntityId,
    q: EntityId,
    p_curve: YieldCurve,
    q_curve: YieldCurve,
}

fn bilateral(file: &ScenarioFile, analysis: Analysis) -> Result<Bilateral, ReportError> {
    let curves: Vec<(&Transaction, &YieldCurve)> = file.scenario.curves().iter().collect();
    let [(t1, c1), (t2, c2)] = curves[..] else {
        return Err(inapplicable(analysis, "needs exactly two curves, one per direction of a trade"));
    };
    if t1.supplier() != t2.recipient() || t1.recipient() != t2.supplier() {
        return Err(inapplicable(analysis, "the two curves must run in opposite directions between one pair"));
    }
    Ok(Bilateral {
        p: t1.supplier().clone(),
        q: t1.recipient().clone(),
        p_curve: *c1,
        q_curve: *c2,
    })
}

fn distribution(file: &ScenarioFile, trace: &Trace) -> Result<DistributionSection, ReportError> {
    let a = Analysis::Distribution;
    let targets: Vec<Transaction> = file.scenario.curves().iter().map(|(t, _)| t.clone()).collect();
    let one_supplier = targets
        .windows(2)
        .all(|w| w[0].supplier() == w[1].supplier() && w[0].good() == w[1].good());
    if targets.is_empty() || !one_supplier {
        return Err(inapplicable(a, "needs one supplier of one good facing several recipients"));
    }
    let report = analytics::distribution_report(trace, &targets).map_err(|e| inapplicable(a, e))?;
    Ok(DistributionSection {
        targets: targets.iter().map(|t| t.to_string()).collect(),
        pass: report.max_abs_error <= DISTRIBUTION_TOLERANCE,
        predicted: report.predicted,
        empirical: report.empirical,
        max_abs_error: report.max_abs_error,
    })
}

fn equilibrium(file: &ScenarioFile, trace: &Trace) -> Result<EquilibriumSection, ReportError> {
    let a = Analysis::Equilibrium;
    let pair = bilateral(file, a)?;
    let points = analytics::detect_cycle(trace, file.cycle_tolerance).map_err(|e| inapplicable(a, e))?;
    let mut detected: Vec<f64> = points.iter().map(|pt| pt.balance(&pair.p, &pair.q)).collect();
    detected.sort_by(f64::total_cmp);
    let closed_form = match detected.len() {
        1 => {
            let s = analytics::intersection_point(&pair.p_curve, &pair.q_curve).map_err(|e| inapplicable(a, e))?;
            ClosedForm {
                kind: "intersection",
                balances: vec![s.x_s],
                side: s.y_s,
            }
        }
        2 => {
            let eq = analytics::canonical_equilibrium(&pair.p_curve, &pair.q_curve).map_err(|e| inapplicable(a, e))?;
            ClosedForm {
                kind: "canonical",
                balances: vec![eq.x_low, eq.x_high],
                side: eq.side,
            }
        }
        k => return Err(inapplicable(a, format!("no closed form for a {k}-point cycle"))),
    };
    let discrepancy = detected
        .iter()
        .zip(&closed_form.balances)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(EquilibriumSection {
        balance_of: [pair.p.to_string(), pair.q.to_string()],
        closed_form,
        detected,
        discrepancy,
        pass: discrepancy <= EQUILIBRIUM_TOLERANCE,
    })
}

fn contraction(file: &ScenarioFile, trace: &Trace) -> Result<ContractionSection, ReportError> {
    let a = Analysis::Contraction;
    let pair = bilateral(file, a)?;
    let theoretical = analytics::theoretical_contraction(&pair.p_curve, &pair.q_curve).map_err(|e| inapplicable(a, e))?;
    let measured = analytics::measured_contraction(trace).map_err(|e| inapplicable(a, e))?;
    let difference = (measured - theoretical).abs();
    Ok(ContractionSection {
        theoretical,
        measured,
        difference,
        pass: difference <= CONTRACTION_TOLERANCE,
    })
}

fn cycle_point(point: &ValuationPoint) -> CyclePoint {
    CyclePoint {
        step: point.step,
        balances: point
            .opening
            .pairs()
            .map(|(p, q, value)| BalanceEntry {
                entity: p.to_string(),
                versus: q.to_string(),
                value,
            })
            .collect(),
        selections: point
            .selections
            .iter()
            .map(|c| SelectionEntry {
                supplier: c.transaction.supplier().to_string(),
                good: c.transaction.good().to_string(),
                recipient: c.transaction.recipient().to_string(),
                value: c.supplier_yield.to_f64(),
            })
            .collect(),
    }
}

fn cycle(file: &ScenarioFile, trace: &Trace) -> Result<CycleSection, ReportError> {
    let tolerance = file.cycle_tolerance;
    match analytics::detect_cycle(trace, tolerance) {
        Ok(points) => Ok(CycleSection {
            tolerance,
            found: true,
            period: points.len(),
            points: points.iter().map(cycle_point).collect(),
            pass: true,
        }),
        Err(AnalysisError::NoCycle(_)) => Ok(CycleSection {
            tolerance,
            found: false,
            period: 0,
            points: Vec::new(),
            pass: false,
        }),
        Err(e) => Err(inapplicable(Analysis::Cycle, e)),
    }
}

pub fn build_report(file: &ScenarioFile, trace: &Trace) -> Result<Report, ReportError> {
    let mut report = Report {
        scenario: file.name.clone(),
        steps: trace.steps.len(),
        halt_reason: match trace.halt_reason {
            HaltReason::MaxSteps => "max_steps",
            HaltReason::NoPositiveYield => "no_positive_yield",
        },
        distribution: None,
        equilibrium: None,
        contraction: None,
        cycle: None,
    };
    for analysis in &file.analyses {
        match analysis {
            Analysis::Distribution => report.distribution = Some(distribution(file, trace)?),
            Analysis::Equilibrium => report.equilibrium = Some(equilibrium(file, trace)?),
            Analysis::Contraction => report.contraction = Some(contraction(file, trace)?),
            Analysis::Cycle => report.cycle = Some(cycle(file, trace)?),
        }
    }
    Ok(report)
}

/// The report as pretty-printed JSON, keys in declaration order.
pub fn emit_report(file: &ScenarioFile, trace: &Trace) -> Result<String, ReportError> {
    let report = build_report(file, trace)?;
    Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
}
