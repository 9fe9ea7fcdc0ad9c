//! Command-line front end.
//!
//! ```text
//! qhcert check    --builtin maire-l1
//! qhcert certify  --config run.json --direction both --out results
//! qhcert estimate --builtin jt-q8 --seed 7
//! qhcert examples list
//! ```
//!
//! Exit codes: 0 pass, 2 fail, 1 malformed input, 3 unstable decay fit.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::certify::{run_direction, Direction, DirectionOutcome, GridSpec};
use crate::circle::{check_h2, H2Verdict, DEFAULT_SAMPLES};
use crate::decay::{sweep, write_decay_csv, DecayReport, SweepSpec};
use crate::error::{Error, Result};
use crate::symbols::{QhSymbol, SymbolSpec, BUILTINS};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_OUT: &str = "qhcert-out";

#[derive(Debug, Parser)]
#[command(name = "qhcert", version, about = "Subellipticity certificates for quasihomogeneous symbols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the circle assumptions and write verdict.json.
    Check(CommonArgs),
    /// Build escape curves, verify the criterion and write certificate.json.
    Certify(CommonArgs),
    /// Sweep the kernel decay and write decay.csv and report.json.
    Estimate(CommonArgs),
    /// Builtin symbols.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    List,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin symbol, overriding the configured one.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Pos,
    Neg,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionChoice {
    #[default]
    XiPositive,
    XiNegative,
    Both,
}

impl DirectionChoice {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            DirectionChoice::XiPositive => vec![Direction::XiPositive],
            DirectionChoice::XiNegative => vec![Direction::XiNegative],
            DirectionChoice::Both => vec![Direction::XiPositive, Direction::XiNegative],
        }
    }
}

impl From<DirectionArg> for DirectionChoice {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Pos => DirectionChoice::XiPositive,
            DirectionArg::Neg => DirectionChoice::XiNegative,
            DirectionArg::Both => DirectionChoice::Both,
        }
    }
}

fn default_true() -> bool {
    true
}

/// Contents of `--config`. Every field but the symbol has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub symbol: Option<SymbolSpec>,
    #[serde(default)]
    pub direction: DirectionChoice,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Sample `||u|| / ||f||` for a bump right-hand side during `estimate`.
    #[serde(default = "default_true")]
    pub operator_ratio: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            symbol: None,
            direction: DirectionChoice::default(),
            grid: GridSpec::default(),
            sweep: SweepSpec::default(),
            output_dir: None,
            seed: None,
            operator_ratio: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedInput(format!("config: {e}")))
    }
}

/// A configuration with flags applied and the symbol built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub symbol: QhSymbol,
    pub direction: DirectionChoice,
    pub grid: GridSpec,
    pub sweep: SweepSpec,
    pub out: PathBuf,
    pub seed: u64,
    pub operator_ratio: bool,
}

pub fn resolve(args: &CommonArgs) -> Result<Resolved> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(name) = &args.builtin {
        cfg.symbol = Some(SymbolSpec::Builtin { builtin: name.clone() });
    }
    if let Some(d) = args.direction {
        cfg.direction = d.into();
    }
    let spec = cfg
        .symbol
        .ok_or_else(|| Error::MalformedInput("no symbol: pass --builtin or a config with \"symbol\"".into()))?;
    cfg.grid.validate()?;
    cfg.sweep.validate()?;
    Ok(Resolved {
        symbol: spec.build()?,
        direction: cfg.direction,
        grid: cfg.grid,
        sweep: cfg.sweep,
        out: args.out.clone().or(cfg.output_dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        seed: args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        operator_ratio: cfg.operator_ratio,
    })
}

fn direction_key(d: Direction) -> &'static str {
    match d {
        Direction::XiPositive => "xi_positive",
        Direction::XiNegative => "xi_negative",
    }
}

/// One document per direction, or a map keyed by direction for `both`.
fn per_direction(docs: Vec<(Direction, Value)>) -> Value {
    if docs.len() == 1 {
        return docs.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null);
    }
    let mut m = Map::new();
    for (d, v) in docs {
        m.insert(direction_key(d).to_string(), v);
    }
    Value::Object(m)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct VerdictDoc<'a> {
    direction: Direction,
    seed: u64,
    #[serde(flatten)]
    verdict: &'a H2Verdict,
}

pub fn cmd_check(cfg: &Resolved) -> Result<i32> {
    let mut docs = Vec::new();
    let mut all = true;
    for d in cfg.direction.directions() {
        let sym = match d {
            Direction::XiPositive => cfg.symbol.clone(),
            Direction::XiNegative => cfg.symbol.negate(),
        };
        let v = check_h2(&sym, DEFAULT_SAMPLES)?;
        all &= v.pass;
        println!("{} {}: {}", sym.name, direction_key(d), if v.pass { "pass" } else { "FAIL" });
        for item in &v.items {
            println!("  item {} {}: {}", item.item, if item.pass { "ok" } else { "fails" }, item.detail);
        }
        if let Some(p) = v.p_global {
            println!("  p = {p}, m = {}", sym.weights.m);
        }
        docs.push((d, serde_json::to_value(VerdictDoc { direction: d, seed: cfg.seed, verdict: &v })?));
    }
    let path = write_json(&cfg.out, "verdict.json", &per_direction(docs))?;
    println!("wrote {}", path.display());
    Ok(if all { 0 } else { 2 })
}

/// Certificate, or a refusal carrying the failed verdict item as witness.
fn outcome_doc(o: &DirectionOutcome, seed: u64) -> Result<Value> {
    if let Some(c) = &o.certificate {
        return Ok(serde_json::to_value(c)?);
    }
    let failed = o.verdict.failed_items();
    let witness = failed.first().map(|&k| o.verdict.item(k));
    Ok(json!({
        "symbol": o.symbol.describe(),
        "symbol_digest": o.symbol.digest(),
        "direction": o.direction,
        "pass": false,
        "refusal": o.refusal,
        "failed_items": failed,
        "witness": witness,
        "seed": seed,
    }))
}

fn certify_all(cfg: &Resolved) -> Result<Vec<DirectionOutcome>> {
    cfg.direction
        .directions()
        .into_iter()
        .map(|d| run_direction(&cfg.symbol, d, &cfg.grid, cfg.seed))
        .collect()
}

fn print_outcome(o: &DirectionOutcome) {
    let key = direction_key(o.direction);
    match (&o.certificate, &o.refusal) {
        (Some(c), _) => {
            println!(
                "{} {key}: {} a = {}, s = {}, C1 = {:.4}, C2 = {:.4}, C3 = {:.4}",
                o.symbol.name,
                if c.pass { "pass" } else { "FAIL" },
                c.a,
                c.s_order,
                c.c1,
                c.c2,
                c.c3
            );
            for w in &c.witnesses {
                println!("  witness: {}", w.to_error());
            }
        }
        (None, r) => println!("{} {key}: refused, {}", o.symbol.name, r.clone().unwrap_or_default()),
    }
}

fn outcome_passes(o: &DirectionOutcome) -> bool {
    o.certificate.as_ref().is_some_and(|c| c.pass)
}

pub fn cmd_certify(cfg: &Resolved) -> Result<i32> {
    let outcomes = certify_all(cfg)?;
    let mut docs = Vec::new();
    for o in &outcomes {
        print_outcome(o);
        docs.push((o.direction, outcome_doc(o, cfg.seed)?));
    }
    let path = write_json(&cfg.out, "certificate.json", &per_direction(docs))?;
    println!("wrote {}", path.display());
    Ok(if outcomes.iter().all(outcome_passes) { 0 } else { 2 })
}

pub fn cmd_estimate(cfg: &Resolved) -> Result<i32> {
    let outcomes = certify_all(cfg)?;
    let mut cert_docs = Vec::new();
    let mut reports: Vec<DecayReport> = Vec::new();
    let mut code = 0;
    for o in &outcomes {
        print_outcome(o);
        cert_docs.push((o.direction, outcome_doc(o, cfg.seed)?));
        let Some(cert) = o.certificate.as_ref().filter(|c| c.pass) else {
            code = 2;
            continue;
        };
        let r = sweep(cert, &o.symbol, &cfg.sweep, &cfg.grid, cfg.operator_ratio)?;
        println!(
            "  decay slope {:.4} (predicted {:.4}, residual {:.2e}) over xi in [{:e}, {:e}]",
            r.fitted_slope, r.predicted_slope, r.fit_residual, r.fit_window[0], r.fit_window[1]
        );
        if let Err(e) = r.check() {
            eprintln!("{e}");
            if code == 0 {
                code = e.exit_code();
            }
        }
        reports.push(r);
    }
    write_json(&cfg.out, "certificate.json", &per_direction(cert_docs))?;
    let report_docs = reports
        .iter()
        .map(|r| Ok((r.direction, serde_json::to_value(r)?)))
        .collect::<Result<Vec<_>>>()?;
    let path = write_json(&cfg.out, "report.json", &per_direction(report_docs))?;
    let csv_path = cfg.out.join("decay.csv");
    write_decay_csv(&reports.iter().collect::<Vec<_>>(), fs::File::create(&csv_path)?)?;
    println!("wrote {} and {}", path.display(), csv_path.display());
    Ok(code)
}

pub fn cmd_examples_list() -> i32 {
    for (name, summary) in BUILTINS {
        println!("{name:22} {summary}");
    }
    0
}

/// Parse arguments, run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Examples { action: ExamplesAction::List } => return cmd_examples_list(),
        Command::Check(a) => resolve(a).and_then(|c| cmd_check(&c)),
        Command::Certify(a) => resolve(a).and_then(|c| cmd_certify(&c)),
        Command::Estimate(a) => resolve(a).and_then(|c| cmd_estimate(&c)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"symbol": {"builtin": "maire-l1"}, "grid": {"radial_points": 4}}"#).unwrap();
        assert_eq!(c.grid.radial_points, 4);
        assert_eq!(c.grid.angular_points, GridSpec::default().angular_points);
        assert_eq!(c.direction, DirectionChoice::XiPositive);
        assert!(c.operator_ratio);
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"symbl": {"builtin": "maire-l1"}}"#).is_err());
    }

    #[test]
    fn flags_override_config() {
        let args = CommonArgs {
            builtin: Some("negmax".into()),
            direction: Some(DirectionArg::Both),
            seed: Some(9),
            ..Default::default()
        };
        let r = resolve(&args).unwrap();
        assert_eq!(r.symbol.name, "negmax");
        assert_eq!(r.direction.directions().len(), 2);
        assert_eq!(r.seed, 9);
        assert_eq!(r.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn missing_symbol_is_malformed() {
        let e = resolve(&CommonArgs::default()).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["qhcert", "frobnicate"]), 1);
        assert_eq!(run(["qhcert", "check", "--direction", "sideways"]), 1);
        assert_eq!(run(["qhcert", "examples", "list"]), 0);
    }
}
