//! Running scenarios and emitting their reports.
//!
//! Machine reports are pretty-printed JSON with a fixed field order and no
//! timings, so identical inputs give identical bytes. Timings only appear
//! in the text format.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagonal::{
    self, as_unitary_sequence, decide_extension, verify_diagonal_extension, DiagonalVerdict,
    DiagonalVerification,
};
use crate::error::{Error, Result};
use crate::extension::{
    analyze_extension, analyze_innerness, build_extension_unitary, classify_localized,
    gauge_difference, inner_extension_unitary, peel_residuals, verify_against_inner,
    verify_extension, verify_extension_factors, ExtensionVerdict, InnernessVerdict, Leaning,
    Localization, PeelingTrace, Trend, VerificationReport,
};
use crate::matrix::{ComplexMatrix, Permutation, UnitaryMatrix};
use crate::product::ProductAutomorphism;
use crate::scenario::{parse_json, Params, Scenario, ScenarioKind, SCHEMA_VERSION};
use crate::sequence::UnitarySequence;
use crate::words::WordPolynomial;

/// Levels up to which dense `v` data is embedded in reports.
const EMBED_MAX_LEVEL: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFactor {
    pub k: usize,
    pub d: UnitaryMatrix,
    pub delta: f64,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSection {
    pub verdict_kind: String,
    pub certified: bool,
    #[serde(rename = "K")]
    pub k: usize,
    pub delta_trace: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub tail_bound: Option<f64>,
    pub trend: Option<Trend>,
    pub witness: Option<WitnessFactor>,
    pub lower_bound: Option<f64>,
    pub level: Option<usize>,
    pub v_factors: Vec<UnitaryMatrix>,
    pub v_matrix: Option<ComplexMatrix>,
    pub v_word: Option<WordPolynomial>,
    pub localized: Option<bool>,
    pub stabilization_index: Option<usize>,
    pub minimal_stabilization_index: Option<usize>,
    pub localization_certified: Option<bool>,
    pub verification: Option<VerificationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnernessSection {
    pub verdict_kind: String,
    pub certified: bool,
    pub leaning: Option<Leaning>,
    pub defect_trace: Vec<f64>,
    pub witness_index: Option<usize>,
    pub witness: Option<UnitaryMatrix>,
    pub witness_defect: Option<f64>,
    pub u_factors: Vec<UnitaryMatrix>,
    /// `Ad(u)` against `λ_{uφ(u*)}`, for inner verdicts.
    pub inner_extension: Option<VerificationReport>,
    /// Phase `θ` with `uφ(u*) = e^{iθ} v`, when both are small enough to
    /// compare densely.
    pub gauge_phase_to_v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSection {
    pub verdict_kind: String,
    pub certified: bool,
    pub reading: String,
    pub r: Option<usize>,
    pub w_factors: Vec<Permutation>,
    pub w_word: Option<WordPolynomial>,
    pub witness_indices: Option<(usize, usize)>,
    pub window: Option<usize>,
    pub violations: Vec<usize>,
    pub verification: Option<DiagonalVerification>,
    /// Verdict of the UHF analyzer on `u_k = P(σ_k)`.
    pub uhf_cross_check: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerSection {
    pub u: WordPolynomial,
    pub v: WordPolynomial,
    pub verification: VerificationReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub kind: String,
    pub params: Option<Params>,
    pub extension: Option<ExtensionSection>,
    pub innerness: Option<InnernessSection>,
    pub diagonal: Option<DiagonalSection>,
    pub verification: Option<VerificationReport>,
    pub peel: Option<Vec<PeelingTrace>>,
    pub inner: Option<InnerSection>,
    pub expected_match: Option<bool>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl Report {
    fn empty(s: &Scenario) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            scenario: s.name.clone(),
            kind: s.kind.name().to_string(),
            params: Some(s.params),
            ..Default::default()
        }
    }

    /// The headline verdict compared against `expected.verdict`.
    pub fn verdict(&self) -> Option<&str> {
        if let Some(e) = &self.extension {
            return Some(&e.verdict_kind);
        }
        if let Some(d) = &self.diagonal {
            return Some(&d.verdict_kind);
        }
        if let Some(v) = self.verification.as_ref().or(self.inner.as_ref().map(|i| &i.verification)) {
            return Some(if v.passed { "verified" } else { "failed" });
        }
        self.peel.as_ref().map(|_| "peeled")
    }
}

/// Which analyses a run performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Focus {
    All,
    Extension,
    Innerness,
}

fn timed<T>(timings: &mut Vec<(String, f64)>, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    timings.push((label.to_string(), start.elapsed().as_secs_f64()));
    out
}

fn extension_section(
    seq: &UnitarySequence,
    params: &Params,
    timings: &mut Vec<(String, f64)>,
) -> Result<ExtensionSection> {
    let tol = &params.tolerances;
    let verdict = timed(timings, "analyze", || analyze_extension(seq, params.depth, tol))?;
    let mut sec = ExtensionSection {
        verdict_kind: verdict.kind().to_string(),
        certified: verdict.is_certified(),
        k: params.depth,
        delta_trace: Vec::new(),
        partial_sums: Vec::new(),
        tail_bound: None,
        trend: None,
        witness: None,
        lower_bound: None,
        level: None,
        v_factors: Vec::new(),
        v_matrix: None,
        v_word: None,
        localized: None,
        stabilization_index: None,
        minimal_stabilization_index: None,
        localization_certified: None,
        verification: None,
    };
    let a = ProductAutomorphism::new(seq.clone());
    match &verdict {
        ExtensionVerdict::ExtensibleExact { level, .. } => sec.level = Some(*level),
        ExtensionVerdict::ExtensibleNumeric {
            tail_bound,
            delta_trace,
            v,
            ..
        } => {
            sec.tail_bound = Some(*tail_bound);
            sec.delta_trace = delta_trace.clone();
            sec.level = Some(v.level());
        }
        ExtensionVerdict::NotExtensible {
            witness,
            lower_bound,
        } => {
            sec.witness = Some(WitnessFactor {
                k: witness.k,
                d: witness.d.clone(),
                delta: witness.delta(),
                psi: witness.alignment.psi,
            });
            sec.lower_bound = Some(*lower_bound);
        }
        ExtensionVerdict::Inconclusive {
            delta_trace,
            partial_sums,
            trend,
        } => {
            sec.delta_trace = delta_trace.clone();
            sec.partial_sums = partial_sums.clone();
            sec.trend = Some(*trend);
        }
    }
    if let Some(v) = verdict.unitary() {
        sec.v_factors = v.factors().to_vec();
        if v.level() <= EMBED_MAX_LEVEL {
            sec.v_matrix = Some(v.to_matrix()?);
            sec.v_word = Some(v.to_word()?);
        }
        let loc: Localization = classify_localized(seq, &verdict, tol)?;
        sec.localized = Some(loc.localized);
        sec.stabilization_index = loc.stabilization_index;
        sec.minimal_stabilization_index = loc.minimal_index;
        sec.localization_certified = Some(loc.certified);
        let vtol = match sec.tail_bound {
            Some(b) => (3.0 * b).max(tol.verification),
            None => tol.verification,
        };
        let k_max = match seq.depth() {
            Some(d) => params.k_max.min(d),
            None => params.k_max,
        };
        let report = timed(timings, "verify", || verify_extension_factors(v, &a, k_max, vtol))?;
        if verdict.is_certified() && !report.passed {
            return Err(Error::InternalConsistency(format!(
                "exact extension fails verification: deviation {:e} above {vtol:e}",
                report.max_deviation
            )));
        }
        sec.verification = Some(report);
    }
    Ok(sec)
}

fn innerness_section(
    seq: &UnitarySequence,
    params: &Params,
    v: Option<&crate::extension::ExtensionUnitary>,
    timings: &mut Vec<(String, f64)>,
) -> Result<InnernessSection> {
    let tol = &params.tolerances;
    let depth = match seq.depth() {
        Some(d) => params.depth.min(d),
        None => params.depth,
    };
    let verdict = timed(timings, "innerness", || analyze_innerness(seq, depth, tol))?;
    let mut sec = InnernessSection {
        verdict_kind: verdict.kind().to_string(),
        certified: !matches!(verdict, InnernessVerdict::Inconclusive { .. }),
        leaning: None,
        defect_trace: Vec::new(),
        witness_index: None,
        witness: None,
        witness_defect: None,
        u_factors: Vec::new(),
        inner_extension: None,
        gauge_phase_to_v: None,
    };
    match verdict {
        InnernessVerdict::Inner { factors, .. } => {
            let n = seq.alphabet();
            let dense = crate::matrix::tensor_all(factors.iter().map(UnitaryMatrix::matrix))?;
            let u = WordPolynomial::from_matrix(n, factors.len(), &dense)?;
            let w = inner_extension_unitary(&u)?;
            let report = timed(timings, "inner_verify", || {
                verify_against_inner(&w, &u, params.k_max, tol.verification)
            })?;
            if !report.passed {
                return Err(Error::InternalConsistency(format!(
                    "λ_(uφ(u*)) differs from Ad(u) by {:e}",
                    report.max_deviation
                )));
            }
            sec.inner_extension = Some(report);
            if let Some(v) = v {
                let level = v.level().max(w.level());
                if n.pow(level as u32) <= 729 {
                    let vm = v.padded(level).to_matrix()?;
                    let wm = w.to_matrix(level)?;
                    sec.gauge_phase_to_v = gauge_difference(&wm, &vm, tol.validation);
                    if sec.gauge_phase_to_v.is_none() {
                        return Err(Error::InternalConsistency(
                            "uφ(u*) and the telescoped unitary differ by more than a phase".into(),
                        ));
                    }
                }
            }
            sec.u_factors = factors;
        }
        InnernessVerdict::Outer {
            index,
            witness,
            defect,
        } => {
            sec.witness_index = Some(index);
            sec.witness = Some(witness);
            sec.witness_defect = Some(defect);
        }
        InnernessVerdict::Inconclusive {
            leaning,
            defect_trace,
        } => {
            sec.leaning = leaning;
            sec.defect_trace = defect_trace;
        }
    }
    Ok(sec)
}

fn diagonal_section(
    seq: &crate::sequence::PermutationSequence,
    params: &Params,
    timings: &mut Vec<(String, f64)>,
) -> Result<DiagonalSection> {
    let verdict = timed(timings, "diagonal", || decide_extension(seq))?;
    let mut sec = DiagonalSection {
        verdict_kind: verdict.kind().to_string(),
        certified: !matches!(verdict, DiagonalVerdict::Inconclusive { .. }),
        reading: diagonal::EVENTUAL_READING.to_string(),
        r: None,
        w_factors: Vec::new(),
        w_word: None,
        witness_indices: None,
        window: None,
        violations: Vec::new(),
        verification: None,
        uhf_cross_check: String::new(),
    };
    match &verdict {
        DiagonalVerdict::ExtensiblePermutation { r, w_factors, w_word } => {
            sec.r = Some(*r);
            sec.w_factors = w_factors.clone();
            sec.w_word = Some(w_word.clone());
            let rep = timed(timings, "diagonal_verify", || {
                verify_diagonal_extension(w_word, seq, params.k_max)
            })?;
            if !rep.passed {
                return Err(Error::InternalConsistency(format!(
                    "permutation unitary moves the projection of {:?} incorrectly",
                    rep.counterexample
                )));
            }
            sec.verification = Some(rep);
        }
        DiagonalVerdict::NotExtensible { witness_indices } => {
            sec.witness_indices = Some(*witness_indices)
        }
        DiagonalVerdict::Inconclusive { window, violations } => {
            sec.window = Some(*window);
            sec.violations = violations.clone();
        }
    }
    let useq = as_unitary_sequence(seq)?;
    let k = match useq.depth() {
        Some(d) => params.depth.min(d.saturating_sub(1)),
        None => params.depth,
    };
    let cross = analyze_extension(&useq, k.max(1), &params.tolerances)?;
    let agree = matches!(
        (&verdict, &cross),
        (DiagonalVerdict::ExtensiblePermutation { .. }, ExtensionVerdict::ExtensibleExact { .. })
            | (DiagonalVerdict::NotExtensible { .. }, ExtensionVerdict::NotExtensible { .. })
            | (DiagonalVerdict::Inconclusive { .. }, _)
    );
    if !agree {
        return Err(Error::InternalConsistency(format!(
            "diagonal verdict {} disagrees with the UHF verdict {}",
            verdict.kind(),
            cross.kind()
        )));
    }
    sec.uhf_cross_check = cross.kind().to_string();
    Ok(sec)
}

/// Runs a scenario. Analyzer errors carry the scenario name.
pub fn run_scenario(s: &Scenario) -> Result<Report> {
    run_scenario_focused(s, Focus::All)
}

pub fn run_scenario_focused(s: &Scenario, focus: Focus) -> Result<Report> {
    let ctx = format!("scenario {}", s.name);
    run_inner(s, focus).map_err(|e| e.context(&ctx))
}

fn run_inner(s: &Scenario, focus: Focus) -> Result<Report> {
    let mut r = Report::empty(s);
    let params = &s.params;
    let mut timings = Vec::new();
    match &s.kind {
        ScenarioKind::UhfProduct { sequence } => {
            let mut v = None;
            if focus != Focus::Innerness {
                let sec = extension_section(sequence, params, &mut timings)?;
                if sec.certified && sec.verdict_kind == "extensible_exact" {
                    v = Some(crate::extension::ExtensionUnitary::new(
                        sequence.alphabet(),
                        sec.v_factors.clone(),
                    )?);
                }
                r.extension = Some(sec);
            }
            if focus != Focus::Extension {
                r.innerness = Some(innerness_section(sequence, params, v.as_ref(), &mut timings)?);
            }
        }
        ScenarioKind::DiagonalProduct { sequence } => {
            r.diagonal = Some(diagonal_section(sequence, params, &mut timings)?);
        }
        ScenarioKind::Verify { sequence, v } => {
            let a = ProductAutomorphism::new(sequence.clone());
            let w = v.to_word()?;
            r.verification = Some(timed(&mut timings, "verify", || {
                verify_extension(&w, &a, params.k_max, params.tolerances.verification)
            })?);
        }
        ScenarioKind::Peel { sequence, residual } => {
            let mut w = build_extension_unitary(sequence, params.depth, &params.tolerances)?
                .to_matrix()?;
            if let Some(res) = residual {
                let rw = res.to_word()?;
                w = w.tensor(&rw.to_matrix(rw.level().max(1))?)?;
            }
            r.peel = Some(timed(&mut timings, "peel", || {
                peel_residuals(&w, sequence, params.k_max, params.tolerances.validation)
            })?);
        }
        ScenarioKind::Inner { u } => {
            let uw = u.to_word()?;
            let v = inner_extension_unitary(&uw)?;
            let verification = timed(&mut timings, "inner_verify", || {
                verify_against_inner(&v, &uw, params.k_max, params.tolerances.verification)
            })?;
            r.inner = Some(InnerSection {
                u: uw,
                v,
                verification,
            });
        }
    }
    if let Some(e) = &s.expected {
        // An innerness-only run has no extension verdict to compare.
        let verdict_ok = match r.verdict() {
            Some(v) => v == e.verdict,
            None => focus == Focus::Innerness,
        };
        let inner_ok = match (&e.innerness, &r.innerness) {
            (None, _) => true,
            (Some(want), Some(got)) => *want == got.verdict_kind,
            (Some(_), None) => focus == Focus::Extension,
        };
        r.expected_match = Some(verdict_ok && inner_ok);
    }
    r.timings = timings;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Machine,
}

/// Serializes a list of reports (a single report is a list of one).
pub fn emit_reports(reports: &[Report], format: Format) -> Result<String> {
    match format {
        Format::Machine => {
            let mut s = serde_json::to_string_pretty(reports).map_err(|e| {
                Error::InternalConsistency(format!("report serialization failed: {e}"))
            })?;
            s.push('\n');
            Ok(s)
        }
        Format::Text => Ok(reports.iter().map(text_report).collect::<Vec<_>>().join("\n")),
    }
}

pub fn emit_report(r: &Report, format: Format) -> Result<String> {
    emit_reports(std::slice::from_ref(r), format)
}

pub fn parse_reports(text: &str) -> Result<Vec<Report>> {
    parse_json(text)
}

fn fmt_matrix(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = m
        .rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    rows.join(" ")
}

fn text_report(r: &Report) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "scenario {} ({})", r.scenario, r.kind);
    if let Some(e) = &r.extension {
        let flag = if e.certified { "certified" } else { "numeric, not certified" };
        let _ = writeln!(o, "  extension: {} [{flag}], K = {}", e.verdict_kind, e.k);
        if let Some(level) = e.level {
            let _ = writeln!(o, "    v has {} tensor factor(s)", level);
        }
        if let Some(b) = e.tail_bound {
            let _ = writeln!(o, "    tail bound {b:.3e}");
        }
        if let Some(w) = &e.witness {
            let _ = writeln!(
                o,
                "    witness d_{} = {} with δ = {:.12}",
                w.k,
                fmt_matrix(w.d.matrix()),
                w.delta
            );
        }
        if let Some(lb) = e.lower_bound {
            let _ = writeln!(o, "    δ lower bound {lb:.12}");
        }
        if let Some(t) = &e.trend {
            let _ = writeln!(o, "    window trend {t:?}");
        }
        if let (Some(l), Some(i)) = (e.localized, e.stabilization_index) {
            let _ = writeln!(o, "    localized {l}, stabilization index {i}");
        } else if let Some(l) = e.localized {
            let _ = writeln!(o, "    localized {l}");
        }
        if let Some(v) = &e.verification {
            let _ = writeln!(
                o,
                "    verification up to level {}: max deviation {:.3e} (tol {:.1e}) {}",
                v.k_max,
                v.max_deviation,
                v.tol,
                if v.passed { "pass" } else { "FAIL" }
            );
        }
    }
    if let Some(i) = &r.innerness {
        let _ = writeln!(o, "  innerness: {}", i.verdict_kind);
        if let Some(l) = i.leaning {
            let _ = writeln!(o, "    leaning {l:?} (not certified)");
        }
        if let (Some(k), Some(d)) = (i.witness_index, i.witness_defect) {
            let _ = writeln!(o, "    rotated factor u_{k} recurs with ‖u − 1‖ = {d:.6}");
        }
        if let Some(p) = i.gauge_phase_to_v {
            let _ = writeln!(o, "    uφ(u*) = e^(i·{p:.6}) v");
        }
    }
    if let Some(d) = &r.diagonal {
        let _ = writeln!(o, "  diagonal: {} (reading: {})", d.verdict_kind, d.reading);
        if let Some(r) = d.r {
            let perms: Vec<String> = d.w_factors.iter().map(|p| format!("{:?}", p.one_based())).collect();
            let _ = writeln!(o, "    r = {r}, w factors {}", perms.join(" "));
        }
        if let Some((a, b)) = d.witness_indices {
            let _ = writeln!(o, "    σ_{a} ≠ σ_{b}, recurring");
        }
        if let Some(v) = &d.verification {
            let _ = writeln!(o, "    {} projections checked: {}", v.checked, if v.passed { "pass" } else { "FAIL" });
        }
        let _ = writeln!(o, "    UHF cross-check: {}", d.uhf_cross_check);
    }
    if let Some(v) = &r.verification {
        let _ = writeln!(
            o,
            "  verification: max deviation {:.3e} (tol {:.1e}) {}",
            v.max_deviation,
            v.tol,
            if v.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(p) = &r.peel {
        for t in p {
            let _ = writeln!(
                o,
                "  peel k = {}: τ(z) = {:.12}, phase fix {:+.6}, identity residual {:.2e}",
                t.k, t.tau_z.re, t.phase_fix, t.identity_residual
            );
        }
    }
    if let Some(i) = &r.inner {
        let _ = writeln!(
            o,
            "  inner extension: max deviation {:.3e} {}",
            i.verification.max_deviation,
            if i.verification.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(m) = r.expected_match {
        let _ = writeln!(o, "  matches recorded verdict: {m}");
    }
    for (label, secs) in &r.timings {
        let _ = writeln!(o, "  time {label}: {:.3} ms", secs * 1e3);
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_list_is_valid_json() {
        let s = emit_reports(&[], Format::Machine).unwrap();
        assert_eq!(s, "[]\n");
        assert!(parse_reports(&s).unwrap().is_empty());
        assert_eq!(emit_reports(&[], Format::Text).unwrap(), "");
    }

    #[test]
    fn identity_scenario() {
        let seq = UnitarySequence::constant(2, UnitaryMatrix::identity(2)).unwrap();
        let s = Scenario::new("id", ScenarioKind::UhfProduct { sequence: seq }, Params::default());
        let r = run_scenario(&s).unwrap();
        let e = r.extension.as_ref().unwrap();
        assert_eq!(e.verdict_kind, "extensible_exact");
        assert_eq!(e.v_factors, vec![UnitaryMatrix::identity(2)]);
        assert_eq!(r.innerness.as_ref().unwrap().verdict_kind, "inner");
    }
}
