//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Signed;
use serde::Serialize;
use serde_json::json;

use crate::axioms::{check_axioms, check_strategyproof, Axiom, AxiomReport, SpMode};
use crate::classify::{classify, csv_field, Manifest};
use crate::enumerate::{Caps, Symmetry};
use crate::error::{Error, Result};
use crate::mechanisms::{builtin, Mechanism, TableMechanism};
use crate::model::{ratio, Profile, Rational, Setting, SettingDoc, UtilityFn};
use crate::psp::{compute_rho, manipulation_gain, maximality_counterexample, rho_bisect, urbi_share, verify_psp, violating_pair};
use crate::sweep::CheckOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "swapcheck", version, about = "Exact axiom and partial strategyproofness checks for matching mechanisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check swap monotonicity, upper and lower invariance and (weak) strategyproofness.
    Axioms {
        #[command(flatten)]
        common: Common,
        /// Restrict to these axioms (repeatable).
        #[arg(long = "axiom", value_enum)]
        axioms: Vec<AxiomArg>,
        /// Check strategyproofness against adjacent swaps only.
        #[arg(long)]
        local: bool,
    },
    /// Decide r-partial strategyproofness.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_rational)]
        r: Rational,
    },
    /// Compute the degree of strategyproofness.
    Rho {
        #[command(flatten)]
        common: Common,
        /// Cross-check by bisection down to this tolerance.
        #[arg(long, value_parser = parse_rational)]
        bisect: Option<Rational>,
    },
    /// Classify the library mechanisms on the pinned witness settings.
    Table1 {
        #[command(flatten)]
        run: RunArgs,
        /// Manifest to use instead of the bundled one.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Build a mechanism that is r-partially strategyproof yet manipulable
    /// at a utility outside URBI(r).
    Counterexample {
        #[arg(long)]
        setting: String,
        #[arg(long, value_parser = parse_rational)]
        r: Rational,
        /// Utility values in object order, comma separated.
        #[arg(long)]
        utility: String,
        /// File to write the table mechanism to.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Degree of strategyproofness as capacities are scaled up.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Capacity multipliers, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        multipliers: Vec<u32>,
    },
    /// Evaluate a mechanism on one profile.
    Allocate {
        #[command(flatten)]
        common: Common,
        /// One report per agent, e.g. `a>b>c` (repeatable, in agent order).
        #[arg(long = "report", required = true)]
        reports: Vec<String>,
    },
    /// Monte Carlo share of three-object utilities inside URBI(r).
    Share {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Library mechanism, e.g. `ps` or `hybrid(rsd,abm,1/2)`.
    #[arg(long, conflicts_with = "table", required_unless_present = "table")]
    pub mech: Option<String>,
    /// Table mechanism file.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Built-in name such as `3x3unit`, or a settings file.
    #[arg(long)]
    pub setting: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value_t = SymmetryArg::Auto)]
    pub symmetry: SymmetryArg,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    pub output: Output,
    #[arg(long)]
    pub max_types: Option<u128>,
    #[arg(long)]
    pub max_profiles: Option<u128>,
    #[arg(long)]
    pub max_orders: Option<u128>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymmetryArg {
    Auto,
    None,
    Anonymous,
    AnonymousNeutral,
    Keyed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxiomArg {
    SwapMonotonic,
    UpperInvariant,
    LowerInvariant,
    Strategyproof,
    WeaklyStrategyproof,
}

impl From<AxiomArg> for Axiom {
    fn from(a: AxiomArg) -> Axiom {
        match a {
            AxiomArg::SwapMonotonic => Axiom::SwapMonotonic,
            AxiomArg::UpperInvariant => Axiom::UpperInvariant,
            AxiomArg::LowerInvariant => Axiom::LowerInvariant,
            AxiomArg::Strategyproof => Axiom::Strategyproof,
            AxiomArg::WeaklyStrategyproof => Axiom::WeaklyStrategyproof,
        }
    }
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    ratio::parse(s).map_err(|e| e.to_string())
}

impl RunArgs {
    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            max_types: self.max_types.unwrap_or(d.max_types),
            max_profiles: self.max_profiles.unwrap_or(d.max_profiles),
            max_orders: self.max_orders.unwrap_or(d.max_orders),
        }
    }

    fn options(&self) -> CheckOptions {
        let mut o = CheckOptions {
            caps: self.caps(),
            ..CheckOptions::default()
        }
        .with_workers(self.workers);
        o.symmetry = match self.symmetry {
            SymmetryArg::Auto => None,
            SymmetryArg::None => Some(Symmetry::None),
            SymmetryArg::Anonymous => Some(Symmetry::Anonymous),
            SymmetryArg::AnonymousNeutral => Some(Symmetry::AnonymousNeutral),
            SymmetryArg::Keyed => Some(Symmetry::Keyed),
        };
        o
    }

    fn reject_csv(&self, command: &str) -> Result<()> {
        if self.output == Output::Csv {
            return Err(Error::InvalidArgument(format!("`{command}` has no CSV output")));
        }
        Ok(())
    }
}

/// Resolves a built-in setting name or reads a `{n, objects, q}` file.
pub fn load_setting(spec: &str) -> Result<Setting> {
    if let Some(s) = Setting::named(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidSetting(format!("`{spec}` is neither a built-in setting nor a file")));
    }
    let doc: SettingDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
    Setting::from_doc(&doc)
}

impl Common {
    fn resolve(&self) -> Result<(Arc<dyn Mechanism>, Setting)> {
        let caps = self.run.caps();
        let explicit = self.setting.as_deref().map(load_setting).transpose()?;
        match (&self.mech, &self.table) {
            (Some(name), None) => {
                let setting = explicit.ok_or_else(|| Error::InvalidArgument("--setting is required with --mech".into()))?;
                Ok((builtin(name, &caps)?, setting))
            }
            (None, Some(path)) => {
                let table = TableMechanism::from_json(&fs::read_to_string(path)?)?;
                let setting = table.setting().clone();
                if explicit.is_some_and(|s| s != setting) {
                    return Err(Error::InvalidArgument("--setting differs from the table's setting".into()));
                }
                Ok((Arc::new(table), setting))
            }
            _ => Err(Error::InvalidArgument("give exactly one of --mech and --table".into())),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } => EXIT_CAP,
        Error::Precondition { .. } | Error::NoPositiveBound(_) => EXIT_FAILS,
        _ => EXIT_USAGE,
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Axioms { common, axioms, local } => cmd_axioms(common, axioms, *local, out),
        Command::Verify { common, r } => cmd_verify(common, r, out),
        Command::Rho { common, bisect } => cmd_rho(common, bisect.as_ref(), out),
        Command::Table1 { run, manifest } => cmd_table1(run, manifest.as_deref(), out),
        Command::Counterexample {
            setting,
            r,
            utility,
            out: path,
            run,
        } => cmd_counterexample(setting, r, utility, path.as_deref(), run, out),
        Command::Scaling { common, multipliers } => cmd_scaling(common, multipliers, out),
        Command::Allocate { common, reports } => cmd_allocate(common, reports, out),
        Command::Share {
            r,
            samples,
            seed,
            output,
        } => cmd_share(*r, *samples, *seed, *output, out),
    }
}

fn cmd_axioms(common: &Common, axioms: &[AxiomArg], local: bool, out: &mut dyn Write) -> Result<i32> {
    common.run.reject_csv("axioms")?;
    let (mech, setting) = common.resolve()?;
    let opts = common.run.options();
    let requested: Vec<Axiom> = if axioms.is_empty() {
        Axiom::ALL.to_vec()
    } else {
        axioms.iter().map(|&a| a.into()).collect()
    };
    let mut reports: Vec<AxiomReport>;
    if local && requested.contains(&Axiom::Strategyproof) {
        let rest: Vec<Axiom> = requested.iter().copied().filter(|&a| a != Axiom::Strategyproof).collect();
        reports = check_axioms(&*mech, &setting, &rest, &opts)?;
        let sp = check_strategyproof(&*mech, &setting, SpMode::Local, &opts)?;
        let pos = requested.iter().position(|&a| a == Axiom::Strategyproof).unwrap_or(0);
        reports.insert(pos, sp);
    } else {
        reports = check_axioms(&*mech, &setting, &requested, &opts)?;
    }
    let all = reports.iter().all(|r| r.holds);
    match common.run.output {
        Output::Json => {
            let docs: Vec<_> = reports.iter().map(|r| r.to_doc(&setting)).collect();
            emit_json(
                out,
                &json!({ "mechanism": mech.name(), "setting": setting.to_doc(), "holds": all, "reports": docs }),
            )?;
        }
        _ => {
            writeln!(out, "mechanism {} on {} agents, objects {}", mech.name(), setting.n(), setting.objects().join(","))?;
            for r in &reports {
                writeln!(out, "{}", r.summary(&setting))?;
            }
        }
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILS })
}

fn cmd_verify(common: &Common, r: &Rational, out: &mut dyn Write) -> Result<i32> {
    common.run.reject_csv("verify")?;
    let (mech, setting) = common.resolve()?;
    let verdict = verify_psp(&*mech, &setting, r, &common.run.options())?;
    match common.run.output {
        Output::Json => emit_json(out, &verdict.to_doc(&setting))?,
        _ => {
            let word = if verdict.holds { "holds" } else { "fails" };
            writeln!(
                out,
                "{}-partial strategyproofness of {}: {word} [{} constraints, {} coverage]",
                ratio::format(r),
                mech.name(),
                verdict.coverage.evaluated,
                verdict.coverage.status()
            )?;
            if let (Some(w), Some(u), Some(g)) = (&verdict.witness, &verdict.utility, &verdict.gain) {
                writeln!(out, "  witness: {}", w.describe(&setting))?;
                let values: Vec<String> = u.values().iter().map(ratio::format).collect();
                writeln!(out, "  utility: ({}) gains {}", values.join(", "), ratio::format(g))?;
            }
        }
    }
    Ok(if verdict.holds { EXIT_OK } else { EXIT_FAILS })
}

fn cmd_rho(common: &Common, bisect: Option<&Rational>, out: &mut dyn Write) -> Result<i32> {
    common.run.reject_csv("rho")?;
    let (mech, setting) = common.resolve()?;
    let opts = common.run.options();
    let rho = match compute_rho(&*mech, &setting, &opts) {
        Err(Error::Precondition { axiom, witness }) => {
            match common.run.output {
                Output::Json => emit_json(
                    out,
                    &json!({ "error": "precondition", "axiom": axiom, "witness": witness.to_doc(&setting) }),
                )?,
                _ => writeln!(out, "precondition failed: {} is not {axiom}\n  witness: {}", mech.name(), witness.describe(&setting))?,
            }
            return Ok(EXIT_FAILS);
        }
        other => other?,
    };
    let interval = bisect.map(|tol| rho_bisect(&*mech, &setting, tol, &opts)).transpose()?;
    let agrees = interval.as_ref().map(|(lo, hi)| lo <= &rho.lo && &rho.hi <= hi);
    match common.run.output {
        Output::Json => {
            let mut doc = serde_json::to_value(rho.to_doc(&setting))?;
            if let (Some((lo, hi)), Some(ok)) = (&interval, agrees) {
                doc["bisection"] = json!({ "interval": [ratio::format(lo), ratio::format(hi)], "agrees": ok });
            }
            emit_json(out, &doc)?;
        }
        _ => {
            let value = match rho.value() {
                Some(v) => format!("{} (exact)", ratio::format(v)),
                None => format!(
                    "in [{}, {}] (~{:.12})",
                    ratio::format(&rho.lo),
                    ratio::format(&rho.hi),
                    ratio::to_f64(&rho.lo)
                ),
            };
            writeln!(out, "rho({}) = {value} [{} constraints, symmetry {}]", mech.name(), rho.coverage.evaluated, rho.symmetry)?;
            if let Some(b) = &rho.binding {
                let profile: Vec<String> = b.profile.prefs().iter().map(|t| t.display(&setting).to_string()).collect();
                writeln!(
                    out,
                    "  binding: agent {} in [{}] reporting {} at rank {}",
                    b.agent + 1,
                    profile.join(" | "),
                    b.misreport.display(&setting),
                    b.poly.rank
                )?;
            }
            if let (Some((lo, hi)), Some(ok)) = (&interval, agrees) {
                writeln!(
                    out,
                    "  bisection: [{}, {}] {}",
                    ratio::format(lo),
                    ratio::format(hi),
                    if ok { "agrees" } else { "DISAGREES" }
                )?;
            }
        }
    }
    Ok(if agrees == Some(false) { EXIT_FAILS } else { EXIT_OK })
}

fn cmd_table1(run: &RunArgs, manifest: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let manifest = match manifest {
        Some(p) => Manifest::from_json(&fs::read_to_string(p)?)?,
        None => Manifest::builtin(),
    };
    let result = classify(&manifest, &run.options())?;
    match run.output {
        Output::Text => write!(out, "{}", result.to_text())?,
        Output::Json => emit_json(out, &result)?,
        Output::Csv => write!(out, "{}", result.to_csv())?,
    }
    Ok(if result.matches() { EXIT_OK } else { EXIT_FAILS })
}

fn cmd_counterexample(
    setting: &str,
    r: &Rational,
    utility: &str,
    path: Option<&Path>,
    run: &RunArgs,
    out: &mut dyn Write,
) -> Result<i32> {
    run.reject_csv("counterexample")?;
    let setting = load_setting(setting)?;
    let values = utility
        .split(',')
        .map(ratio::parse)
        .collect::<Result<Vec<_>>>()?;
    let u = UtilityFn::new(values);
    let table = maximality_counterexample(&setting, r, &u)?;
    let verdict = verify_psp(&table, &setting, r, &run.options())?;
    let t = u.induced_order().expect("checked by the generator");
    let (a, b) = violating_pair(&u, r)?;
    let k = t.rank_of(a);
    let lie = t.swapped(k);
    let profile = Profile::new(&setting, vec![t.clone(); setting.n()])?;
    let gain = manipulation_gain(&table, &setting, 0, &profile, &lie, &u)?;
    let json = table.to_json();
    if let Some(p) = path {
        fs::write(p, &json)?;
    }
    let ok = verdict.holds && gain.is_positive();
    match run.output {
        Output::Json => emit_json(
            out,
            &json!({
                "mechanism": serde_json::from_str::<serde_json::Value>(&json)?,
                "r": ratio::format(r),
                "psp_holds": verdict.holds,
                "violating_pair": [setting.label(a), setting.label(b)],
                "misreport": lie.display(&setting).to_string(),
                "gain": ratio::format(&gain),
            }),
        )?,
        _ => {
            if path.is_none() {
                writeln!(out, "{json}")?;
            }
            writeln!(
                out,
                "verify at r = {}: {} [{} constraints]",
                ratio::format(r),
                if verdict.holds { "holds" } else { "fails" },
                verdict.coverage.evaluated
            )?;
            writeln!(
                out,
                "swapping {} and {} (reporting {}) gains {}",
                setting.label(a),
                setting.label(b),
                lie.display(&setting),
                ratio::format(&gain)
            )?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILS })
}

fn cmd_scaling(common: &Common, multipliers: &[u32], out: &mut dyn Write) -> Result<i32> {
    if common.table.is_some() {
        return Err(Error::InvalidArgument("scaling needs a library mechanism".into()));
    }
    if common.run.output == Output::Json {
        return Err(Error::InvalidArgument("`scaling` writes CSV or text".into()));
    }
    let (mech, base) = common.resolve()?;
    let opts = common.run.options();
    writeln!(out, "multiplier,n,q,rho_lo,rho_hi,exact")?;
    for &k in multipliers {
        let setting = base.scaled(k)?;
        let rho = compute_rho(&*mech, &setting, &opts)?;
        let q: Vec<String> = setting.to_doc().q.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "{k},{},{},{},{},{}",
            setting.n(),
            csv_field(&q.join(" ")),
            ratio::format(&rho.lo),
            ratio::format(&rho.hi),
            rho.exact
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_allocate(common: &Common, reports: &[String], out: &mut dyn Write) -> Result<i32> {
    common.run.reject_csv("allocate")?;
    let (mech, setting) = common.resolve()?;
    let profile = Profile::parse(&setting, reports)?;
    let allocation = mech.allocate(&setting, &profile)?;
    match common.run.output {
        Output::Json => emit_json(
            out,
            &json!({
                "objects": setting.objects(),
                "profile": profile.prefs().iter().map(|t| t.labels(&setting)).collect::<Vec<_>>(),
                "allocation": allocation.to_strings(),
            }),
        )?,
        _ => {
            writeln!(out, "{}", setting.objects().join("\t"))?;
            for row in allocation.to_strings() {
                writeln!(out, "{}", row.join("\t"))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_share(r: f64, samples: u64, seed: u64, output: Output, out: &mut dyn Write) -> Result<i32> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("bound r = {r} outside (0,1]")));
    }
    let est = urbi_share(r, samples, seed)?;
    match output {
        Output::Json => emit_json(out, &est)?,
        Output::Csv => writeln!(out, "r,samples,estimate,stderr\n{r},{},{},{}", est.samples, est.estimate, est.stderr)?,
        Output::Text => writeln!(out, "share of URBI({r}): {:.4} ± {:.4} ({} samples)", est.estimate, est.stderr, est.samples)?,
    }
    Ok(EXIT_OK)
}
