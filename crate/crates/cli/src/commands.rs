use std::fs;
use std::path::Path;

use lfpsolve::branching::{
    bp_to_pps, parse_bp, pps_to_bp, simulate_extinction, BranchingProcess, SimulationConfig,
};
use lfpsolve::newton::{
    decide_threshold, render_certified, solve_pps, CoordinateValue, DecideMode, SolveMode, ThresholdVerdict,
};
use lfpsolve::numerics::{decimal_digits_for_bits, parse_rational, pow2, rational_bits, to_decimal};
use lfpsolve::pps::{parse_pps, to_snf, Pps};
use lfpsolve::qualitative::{classify, eliminate_trivial, Tag};
use lfpsolve::scfg::{
    make_proper, parse_scfg, parse_scfg_lenient, string_probability, to_cnf, ApproxBudget, Scfg,
};
use lfpsolve::{Dyadic, Error, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::report::RunReport;
use crate::{
    CnfArgs, Command, DecideArgs, DecideModeArg, GrammarArgs, InputFormat, SimulateArgs, SolveArgs,
    SolveModeArg, StringprobArgs,
};

/// Why a command stopped, mapped to the process exit status.
enum Failure {
    /// Unreadable or malformed input: exit 2.
    Input(String),
    /// A precision budget was exhausted: exit 3.
    Budget(String),
    /// Refusal or invalid arguments: exit 1.
    Refused(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::NotProbabilistic { .. }
            | Error::ImproperGrammar { .. }
            | Error::SumExceedsOne { .. }
            | Error::Malformed(_) => Failure::Input(e.to_string()),
            Error::BudgetExceeded(_) | Error::ConditioningFailure { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Refused(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: &Command) -> RunReport {
    let (name, file) = match command {
        Command::Solve(a) => ("solve", &a.file),
        Command::Decide(a) => ("decide", &a.file),
        Command::Cnf(a) => ("cnf", &a.grammar.file),
        Command::Stringprob(a) => ("stringprob", &a.grammar.file),
        Command::Simulate(a) => ("simulate", &a.file),
    };
    let display = file.display().to_string();
    let bytes = match fs::read(file) {
        Ok(b) => b,
        Err(e) => {
            let mut r = RunReport::new(name, &display, String::new());
            finish(&mut r, Err(Failure::Input(format!("cannot read {display}: {e}"))));
            return r;
        }
    };
    let mut report = RunReport::new(name, &display, hex_digest(&bytes));
    let outcome = match String::from_utf8(bytes) {
        Err(_) => Err(Failure::Input(format!("{display} is not UTF-8 text"))),
        Ok(text) => match command {
            Command::Solve(a) => solve(a, &text, &mut report),
            Command::Decide(a) => decide(a, &text, &mut report),
            Command::Cnf(a) => cnf(a, &text, &mut report),
            Command::Stringprob(a) => stringprob(a, &text, &mut report),
            Command::Simulate(a) => simulate(a, &text, &mut report),
        },
    };
    finish(&mut report, outcome);
    report
}

fn finish(report: &mut RunReport, outcome: Outcome) {
    let (status, message) = match outcome {
        Ok(()) => (0, None),
        Err(Failure::Refused(m)) => (1, Some(m)),
        Err(Failure::Input(m)) => (2, Some(m)),
        Err(Failure::Budget(m)) => (3, Some(m)),
    };
    report.exit_status = status;
    report.error = message;
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fraction, decimal, or decimal with a base-10 exponent, converted exactly.
pub fn parse_exact(text: &str) -> Option<Rational> {
    let t = text.trim();
    match t.split_once(['e', 'E']) {
        None => parse_rational(t),
        Some((mantissa, exponent)) => {
            let m = parse_rational(mantissa)?;
            let e: i32 = exponent.parse().ok()?;
            let ten = Rational::from_integer(BigInt::from(10));
            let scale = if e >= 0 {
                num_traits::pow(ten, e as usize)
            } else {
                Rational::one() / num_traits::pow(ten, e.unsigned_abs() as usize)
            };
            Some(m * scale)
        }
    }
}

fn positive(text: &str, what: &str) -> Result<Rational, Failure> {
    match parse_exact(text) {
        Some(v) if v > Rational::zero() => Ok(v),
        _ => Err(Failure::Refused(format!(
            "{what} must be a positive number, got `{text}`"
        ))),
    }
}

fn load_system(text: &str, file: &Path, format: InputFormat) -> Result<(Pps, &'static str), Failure> {
    let is_bp_ext = file.extension().is_some_and(|e| e == "bp");
    match format {
        InputFormat::Pps => Ok((parse_pps(text)?, "pps")),
        InputFormat::Bp => Ok((bp_to_pps(&parse_bp(text)?), "bp")),
        InputFormat::Auto if is_bp_ext => Ok((bp_to_pps(&parse_bp(text)?), "bp")),
        InputFormat::Auto => match parse_pps(text) {
            Ok(p) => Ok((p, "pps")),
            Err(e) if text.contains('{') => match parse_bp(text) {
                Ok(bp) => Ok((bp_to_pps(&bp), "bp")),
                Err(_) => Err(e.into()),
            },
            Err(e) => Err(e.into()),
        },
    }
}

fn load_bp(text: &str, file: &Path, format: InputFormat) -> Result<BranchingProcess, Failure> {
    let is_pps_ext = file.extension().is_some_and(|e| e == "pps");
    match format {
        InputFormat::Bp => Ok(parse_bp(text)?),
        InputFormat::Pps => Ok(pps_to_bp(&parse_pps(text)?)),
        InputFormat::Auto if is_pps_ext => Ok(pps_to_bp(&parse_pps(text)?)),
        InputFormat::Auto => match parse_bp(text) {
            Ok(bp) => Ok(bp),
            Err(e) => match parse_pps(text) {
                Ok(p) => Ok(pps_to_bp(&p)),
                Err(_) => Err(e.into()),
            },
        },
    }
}

fn tag_name(t: Tag) -> &'static str {
    match t {
        Tag::Zero => "Zero",
        Tag::One => "One",
        Tag::Interior => "Interior",
    }
}

fn solve(a: &SolveArgs, text: &str, report: &mut RunReport) -> Outcome {
    let (p, kind) = load_system(text, &a.file, a.format)?;
    let mode = match a.mode {
        SolveModeArg::Rounded => SolveMode::Rounded,
        SolveModeArg::Exact => SolveMode::Exact {
            budget_bits: a.budget.budget_bits,
        },
    };
    report.param("format", kind);
    report.param("j", a.bits);
    report.param("mode", format!("{:?}", a.mode).to_lowercase());
    if matches!(a.mode, SolveModeArg::Exact) {
        report.param("budget_bits", a.budget.budget_bits);
    }
    let solution = match solve_pps(&p, a.bits, mode) {
        Ok(s) => s,
        Err(Error::BudgetExceeded(b)) => {
            partial_report(&p, &b, report);
            return Err(Failure::Budget(Error::BudgetExceeded(b).to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    if matches!(a.mode, SolveModeArg::Rounded) {
        report.param("h", a.bits + 2 + 4 * solution.residual_size);
    }
    report.param("snf_size", solution.snf_size);
    report.param("residual_size", solution.residual_size);
    report.iterations = Some(solution.iterations);
    let digits = decimal_digits_for_bits(a.bits);
    let mut vars = Vec::new();
    for ((name, tag), value) in solution.names.iter().zip(&solution.tags).zip(&solution.values) {
        let (exact, decimal, bound) = match value {
            CoordinateValue::Zero => ("0".to_string(), "0".to_string(), "0".to_string()),
            CoordinateValue::One => ("1".to_string(), "1".to_string(), "0".to_string()),
            CoordinateValue::Certified(d) => {
                let r = render_certified(d, a.bits);
                (r.dyadic, r.decimal, r.bound)
            }
            CoordinateValue::Iterate(q) => (q.to_string(), to_decimal(q, digits), format!("2^-{}", a.bits)),
        };
        let shown = match value {
            CoordinateValue::Iterate(q) if exact.len() > 80 => {
                format!("exact iterate of {} bits", rational_bits(q))
            }
            _ if exact.len() > 80 => format!("{}...", &exact[..40]),
            _ => exact.clone(),
        };
        report.line(format!(
            "{name}: {:<8} q* = {decimal} ± {bound}  ({shown})",
            tag_name(*tag)
        ));
        vars.push(json!({
            "name": name,
            "class": tag_name(*tag),
            "value": exact,
            "decimal": decimal,
            "bound": bound,
            "direction": "value <= q*",
        }));
    }
    report.result = json!({ "variables": vars });
    Ok(())
}

fn partial_report(p: &Pps, b: &lfpsolve::error::BudgetReport, report: &mut RunReport) {
    // partial iterates refer to the Interior residual of the SNF system
    let (snf, projection) = to_snf(p);
    let names: Vec<String> = match classify(&snf) {
        Ok(class) => {
            let reduced = eliminate_trivial(&snf, &class);
            reduced
                .original_index
                .iter()
                .map(|&s| {
                    projection
                        .iter()
                        .position(|&i| i == s)
                        .map(|i| p.names()[i].clone())
                        .unwrap_or_else(|| format!("#{s}"))
                })
                .collect()
        }
        Err(_) => (0..b.partial.len()).map(|i| format!("#{i}")).collect(),
    };
    let bound = b
        .achieved_bound
        .as_ref()
        .map(|r| to_decimal(r, 20))
        .unwrap_or_else(|| "unknown".into());
    report.iterations = Some(b.steps_done);
    let mut vars = Vec::new();
    for (name, v) in names.iter().zip(&b.partial) {
        let d = to_decimal(v, 20);
        report.line(format!("{name}: partial q* >= {d} ± {bound}"));
        vars.push(json!({ "name": name, "partial": v.to_string(), "decimal": d }));
    }
    report.result = json!({ "partial": vars, "achieved_bound": bound, "limit_bits": b.limit_bits });
}

fn decide(a: &DecideArgs, text: &str, report: &mut RunReport) -> Outcome {
    let (p, kind) = load_system(text, &a.file, a.format)?;
    let r = parse_exact(&a.threshold)
        .ok_or_else(|| Failure::Refused(format!("cannot parse threshold `{}`", a.threshold)))?;
    if r <= Rational::zero() || r >= Rational::one() {
        return Err(Failure::Refused(
            "threshold must lie strictly between 0 and 1".into(),
        ));
    }
    let k = match p.names().iter().position(|n| *n == a.coord) {
        Some(k) => k,
        None => a
            .coord
            .parse::<usize>()
            .ok()
            .filter(|&k| k < p.len())
            .ok_or_else(|| Failure::Refused(format!("no variable `{}`", a.coord)))?,
    };
    report.param("format", kind);
    report.param("coordinate", &p.names()[k]);
    report.param("threshold", &r);

    let (snf, projection) = to_snf(&p);
    let class = classify(&snf)?;
    let tag = class.tags[projection[k]];
    let verdict_line = |v: &str| format!("verdict: {v}");
    if tag != Tag::Interior {
        let (verdict, value) = if tag == Tag::Zero {
            ("LESS", "0")
        } else {
            ("GREATER", "1")
        };
        report.param("mode", "qualitative");
        report.line(format!("{}: {} q* = {value} ± 0", p.names()[k], tag_name(tag)));
        report.line(verdict_line(verdict));
        report.result = json!({ "verdict": verdict, "class": tag_name(tag), "value": value, "bound": "0" });
        return Ok(());
    }
    let reduced = eliminate_trivial(&snf, &class);
    let rk = reduced
        .original_index
        .iter()
        .position(|&s| s == projection[k])
        .expect("Interior coordinates survive elimination");
    let n = reduced.residual.len();
    let budget_bits = a.budget.budget_bits;
    let mode = match a.mode {
        DecideModeArg::Exact => DecideMode::Exact { budget_bits },
        DecideModeArg::Sep => DecideMode::SeparationBound { force: a.force_exact },
        DecideModeArg::Auto if n <= 3 => DecideMode::SeparationBound { force: false },
        DecideModeArg::Auto if a.force_exact => DecideMode::Exact { budget_bits },
        DecideModeArg::Auto => {
            return Err(Failure::Refused(format!(
                "{n} Interior variables: the separation bound's exponent grows like 5^n, which makes \
                 the required precision impractical; pass --force-exact to decide by exact Newton \
                 iteration under the bit budget"
            )))
        }
    };
    report.param(
        "mode",
        match mode {
            DecideMode::Exact { .. } => "exact",
            DecideMode::SeparationBound { .. } => "separation-bound",
        },
    );
    if let DecideMode::Exact { budget_bits } = mode {
        report.param("budget_bits", budget_bits);
    }
    report.param("residual_variables", n);
    let v: ThresholdVerdict = decide_threshold(&reduced.residual, rk, &r, mode)?;
    report.iterations = Some(v.steps);
    report.param("g", v.parameters.g);
    report.param("m", v.parameters.m);
    let (margin, margin_text) = match (v.gamma_exponent, v.bits) {
        (Some(e), Some(j)) => {
            report.param("gamma", format!("2^-{e}"));
            report.param("j", j);
            (format!("2^-{}", e + 2), format!("gamma/4 = 2^-{}", e + 2))
        }
        _ => {
            let m = v.parameters.m;
            (format!("2^(1-2^{m})"), format!("2 * 2^-2^{m}"))
        }
    };
    let shown = to_decimal(&v.value, 30);
    report.line(format!(
        "{}: witness {shown} (below q* by at most {margin}) vs r = {r}",
        p.names()[k]
    ));
    report.line(format!("margin: {margin_text}"));
    report.line(verdict_line(&v.verdict.to_string()));
    report.result = json!({
        "verdict": v.verdict.to_string(),
        "class": "Interior",
        "witness": v.value.to_string(),
        "witness_decimal": shown,
        "margin": margin,
        "steps": v.steps,
    });
    Ok(())
}

fn load_grammar(a: &GrammarArgs, text: &str, report: &mut RunReport) -> Result<(Scfg, Rational), Failure> {
    let delta = positive(&a.delta, "--delta")?;
    let g = if a.auto_proper {
        make_proper(&parse_scfg_lenient(text)?)?
    } else {
        parse_scfg(text)?
    };
    report.param("delta", &delta);
    Ok((g, delta))
}

fn budget_json(b: &ApproxBudget) -> Value {
    let s = |r: &Rational| Value::String(r.to_string());
    json!({
        "delta": s(&b.delta),
        "horizon": b.horizon,
        "cleaned_size": b.cleaned_size,
        "rule_tolerance": s(&b.rule_tolerance),
        "unary_tolerance": s(&b.unary_tolerance),
        "conditioning_tolerance": s(&b.conditioning_tolerance),
        "epsilon_accuracy": s(&b.epsilon_accuracy),
        "pruning_threshold": s(&b.pruning_threshold),
        "conditioning_error": s(&b.conditioning_error),
        "unary_error": s(&b.unary_error),
        "start_error": s(&b.start_error),
        "rule_error": s(&b.rule_error),
        "string_error": s(&b.string_error),
        "retries": b.retries,
        "trivial": b.trivial,
        "exact": b.exact,
    })
}

/// `2^-k`-style rendering of a small positive rational, or `0`.
fn magnitude(r: &Rational) -> String {
    if r.is_zero() {
        "0".into()
    } else {
        let e = lfpsolve::numerics::floor_log2(r);
        if *r == pow2(e) {
            format!("2^{e}")
        } else {
            format!("< 2^{}", e + 1)
        }
    }
}

fn budget_lines(b: &ApproxBudget, report: &mut RunReport) {
    report.line(format!(
        "budget: horizon N = {}, |G2| = {}",
        b.horizon, b.cleaned_size
    ));
    for (name, v) in [
        ("rule tolerance", &b.rule_tolerance),
        ("unary tolerance", &b.unary_tolerance),
        ("conditioning tolerance", &b.conditioning_tolerance),
        ("epsilon accuracy", &b.epsilon_accuracy),
        ("pruning threshold", &b.pruning_threshold),
        ("conditioning error", &b.conditioning_error),
        ("unary error", &b.unary_error),
        ("start error", &b.start_error),
        ("rule error", &b.rule_error),
        ("string error", &b.string_error),
    ] {
        report.line(format!("budget: {name} {}", magnitude(v)));
    }
    report.line(format!(
        "budget: retries {}, trivial {}, exact {}",
        b.retries, b.trivial, b.exact
    ));
}

fn cnf(a: &CnfArgs, text: &str, report: &mut RunReport) -> Outcome {
    let (g, delta) = load_grammar(&a.grammar, text, report)?;
    report.param("N", a.maxlen);
    let result = to_cnf(&g, a.maxlen, &delta)?;
    let rendered = result.cnf.to_string();
    budget_lines(&result.budget, report);
    report.line(format!(
        "guarantee: |p(G, w) - p(G', w)| <= {} for |w| <= {}",
        magnitude(&result.budget.string_error),
        a.maxlen
    ));
    let mut out = json!({ "budget": budget_json(&result.budget) });
    if let Some(h) = &result.hitting {
        out["hitting"] = json!({
            "states": h.states,
            "absorbing": h.absorbing,
            "live": h.live,
            "pruned": h.pruned,
            "pruning_abandoned": h.pruning_abandoned,
            "reinstated": h.reinstated,
            "dead_rules": h.dead_rules,
            "inverse_norm": h.inverse_norm.as_ref().map(|r| to_decimal(r, 6)),
            "hitting_error": h.hitting_error.to_string(),
        });
    }
    match &a.output {
        Some(path) => {
            fs::write(path, &rendered)
                .map_err(|e| Failure::Refused(format!("cannot write {}: {e}", path.display())))?;
            report.line(format!("grammar written to {}", path.display()));
            out["output"] = Value::String(path.display().to_string());
        }
        None => {
            report.line("grammar:");
            for l in rendered.lines() {
                report.line(format!("  {l}"));
            }
            out["grammar"] = Value::String(rendered);
        }
    }
    report.result = out;
    Ok(())
}

/// Terminal names of `--string`.
pub fn split_string(s: &str) -> Vec<String> {
    if s.chars().any(char::is_whitespace) {
        s.split_whitespace().map(str::to_string).collect()
    } else {
        s.chars().map(|c| c.to_string()).collect()
    }
}

fn stringprob(a: &StringprobArgs, text: &str, report: &mut RunReport) -> Outcome {
    let (g, delta) = load_grammar(&a.grammar, text, report)?;
    let w = split_string(&a.string);
    report.param("N", w.len());
    report.param("string", w.join(" "));
    let p = string_probability(&g, &w, &delta)?;
    let digits = decimal_digits_for_bits(lfpsolve::numerics::bits_for(&delta)) + 2;
    let value = p.value.to_rational();
    let decimal = to_decimal(&value, digits);
    if let Some(inside) = &p.inside {
        report.param("t", inside.scale);
        report.param("m", inside.m);
    }
    if let Some(b) = &p.budget {
        budget_lines(b, report);
    }
    let known = g.encode(&w).is_some();
    let why = if !known { " (terminal not in grammar)" } else { "" };
    report.line(format!(
        "p(w) = {decimal} ± {}{why}",
        if p.bound.is_zero() {
            "0".to_string()
        } else {
            to_decimal(&p.bound, digits)
        }
    ));
    report.result = json!({
        "value": dyadic_text(&p.value),
        "decimal": decimal,
        "bound": p.bound.to_string(),
        "bound_decimal": to_decimal(&p.bound, digits),
        "budget": p.budget.as_ref().map(budget_json),
    });
    Ok(())
}

fn dyadic_text(d: &Dyadic) -> String {
    d.to_string()
}

fn simulate(a: &SimulateArgs, text: &str, report: &mut RunReport) -> Outcome {
    let bp = load_bp(text, &a.file, a.format)?;
    let t = bp
        .type_index(&a.type_name)
        .ok_or_else(|| Failure::Refused(format!("no type `{}`", a.type_name)))?;
    let config = SimulationConfig {
        trials: a.trials,
        generation_cap: a.gen_cap,
        population_cap: a.pop_cap,
        seed: a.seed,
    };
    report.param("type", &a.type_name);
    report.param("trials", a.trials);
    report.param("seed", a.seed);
    report.param("gen_cap", a.gen_cap);
    report.param("pop_cap", a.pop_cap);
    let e = simulate_extinction(&bp, t, &config)?;
    report.line(format!(
        "{}: extinction ≈ {:.6} ± {:.6} (3 sigma, {} of {} trajectories died out; censored estimate is biased low)",
        a.type_name, e.estimate, e.half_width, e.extinct, e.trials
    ));
    report.result = json!({
        "estimate": format!("{:.6}", e.estimate),
        "half_width": format!("{:.6}", e.half_width),
        "extinct": e.extinct,
        "trials": e.trials,
    });
    Ok(())
}
