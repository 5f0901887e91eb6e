//! Command-line front end: argument parsing, command execution and rendering.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::casestudy::{run_case_study, CaseStudy};
use crate::error::{ModelError, QslError};
use crate::expect::{eval_expectation, free_vars_expectation};
use crate::lawbench::{run_law_suite_with, select_laws, DebugHooks, GenSpec, LawReport};
use crate::num::{ExtQ, Q};
use crate::operational::{expected_reward, soundness_check, OracleOptions, Opt};
use crate::parse::{parse_expectation, parse_program, parse_sl};
use crate::sl::{embed_sl, SlFormula};
use crate::state::{enumerate_states, DomainConfig, ExhaustionPolicy, ProgState, Stack};
use crate::syntax::{Guard, Program};
use crate::transformer::{
    check_conservativity, check_duality, check_frame, check_invariant, transform, FrameDirection, FrameVerdict,
    InvariantDirection, TransformerMode, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;

/// Programs shipped with the tool, addressable by file name.
pub const BUNDLED_PROGRAMS: [(&str, &str); 5] = [
    ("randomize.hp", crate::casestudy::RANDOMIZE),
    ("lossy_reversal.hp", crate::casestudy::LOSSY_REVERSAL),
    ("list_extension.hp", crate::casestudy::LIST_EXTENSION),
    ("faulty_gc.hp", crate::casestudy::FAULTY_GC),
    ("free.hp", include_str!("../programs/free.hp")),
];

#[derive(Debug, Parser)]
#[command(name = "qsl", version, about = "Quantitative separation logic over a bounded heap model")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Domain configuration file (`key=value` pairs or JSON).
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Program variables, comma separated; variables used by the inputs are added automatically.
    #[arg(long, global = true, value_delimiter = ',')]
    pub vars: Vec<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub vmin: Option<i64>,
    #[arg(long, global = true)]
    pub vmax: Option<i64>,
    /// Number of heap addresses.
    #[arg(long, global = true)]
    pub addrs: Option<usize>,
    /// Loop tolerance as a rational, e.g. `1/1000000`.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Allocation beyond the address space faults instead of raising an error.
    #[arg(long, global = true)]
    pub exhaustion_faults: bool,
    /// Only states with at most this many cells are reported or compared.
    #[arg(long, global = true)]
    pub max_cells: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ProgramArg {
    /// Program file; bundled programs can be named by file name, e.g. `free.hp`.
    #[arg(long, conflicts_with = "code")]
    pub prog: Option<String>,
    /// Program text given inline.
    #[arg(long)]
    pub code: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an expectation at a state.
    Eval {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        state: String,
    },
    /// Apply one of the eight transformers.
    Wp {
        #[arg(long, default_value = "wp")]
        mode: String,
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        post: String,
        /// Report only these states instead of the whole table.
        #[arg(long)]
        state: Vec<String>,
    },
    /// Optimal expected reward on the operational semantics.
    Oracle {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        post: String,
        #[arg(long)]
        state: Vec<String>,
        #[arg(long, value_enum, default_value = "min")]
        opt: OptArg,
        #[arg(long)]
        symmetry: bool,
    },
    /// Compare wp with the operational expected reward at every state.
    CheckSoundness {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        post: String,
    },
    /// Check an upper or lower invariant of the program's trailing loop.
    CheckInvariant {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        post: String,
        #[arg(long)]
        inv: String,
        #[arg(long, value_enum, default_value = "upper")]
        direction: InvariantArg,
    },
    /// Check the frame inequality in either direction.
    CheckFrame {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        pre: String,
        #[arg(long)]
        frame: String,
        #[arg(long, value_enum, default_value = "sound")]
        direction: FrameArg,
    },
    /// Check the four duality equations.
    CheckDuality {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        post: String,
    },
    /// Compare the embedded wp verdict of an SL triple with the operational checker.
    CheckConservativity {
        #[command(flatten)]
        program: ProgramArg,
        #[arg(long)]
        pre: String,
        #[arg(long)]
        post: String,
    },
    /// Run randomized law checks.
    Laws {
        /// Law ids or `group.*` patterns; all laws when omitted.
        #[arg(long, value_delimiter = ',')]
        laws: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        expr_depth: Option<usize>,
        #[arg(long)]
        program_len: Option<usize>,
        #[arg(long)]
        allow_loops: bool,
        /// Mutation hook: evaluate `**` with a minimum instead of a maximum.
        #[arg(long, hide = true)]
        broken_sepcon: bool,
    },
    /// Reproduce one of the bundled case studies.
    Casestudy {
        #[arg(value_parser = parse_case_study)]
        study: CaseStudy,
        /// List length for lossy-reversal, start length for list-extension.
        #[arg(long)]
        len: Option<usize>,
        /// Array size for randomize.
        #[arg(long)]
        n: Option<usize>,
        /// Address space for list-extension.
        #[arg(long = "case-addrs")]
        case_addrs: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptArg {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InvariantArg {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FrameArg {
    Sound,
    Converse,
}

fn parse_case_study(s: &str) -> Result<CaseStudy, String> {
    s.parse().map_err(|e: QslError| e.to_string())
}

/// Result of a command: exit status and rendered output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub status: i32,
    pub output: String,
}

/// Machine-readable report shared by every command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub results: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ExtQ>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<Value>>,
    #[serde(skip)]
    text: String,
    #[serde(skip)]
    violated: bool,
}

impl Report {
    fn new(command: &str, cfg: &DomainConfig) -> Report {
        Report {
            command: command.to_string(),
            config: to_value(cfg),
            results: Vec::new(),
            residual: None,
            witnesses: None,
            text: String::new(),
            violated: false,
        }
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.text.push_str(text.as_ref());
        self.text.push('\n');
    }

    fn witness(&mut self, w: Value) {
        self.witnesses.get_or_insert_with(Vec::new).push(w);
    }

    fn residual(&mut self, r: Option<ExtQ>) {
        if let Some(r) = r {
            self.residual = Some(self.residual.take().map_or(r.clone(), |old| old.max_of(&r)));
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Canonical JSON rendering: sorted keys, two-space indentation, trailing newline.
pub fn render_json(v: &Value) -> String {
    let mut out = serde_json::to_string_pretty(v).expect("json values render");
    out.push('\n');
    out
}

/// Parses and executes `args` (including the program name).
pub fn run<I, T>(args: I) -> Rendered
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let status = if e.use_stderr() { QslError::Usage(String::new()).exit_code() } else { EXIT_OK };
            Rendered { status, output: e.render().to_string() }
        }
    }
}

pub fn execute(cli: &Cli) -> Rendered {
    match execute_report(cli) {
        Ok(report) => {
            let status = if report.violated { EXIT_VIOLATED } else { EXIT_OK };
            let output = match cli.global.format {
                Format::Json => render_json(&to_value(&report)),
                Format::Text => report.text,
            };
            Rendered { status, output }
        }
        Err(e) => {
            let output = match cli.global.format {
                Format::Json => render_json(&json!({ "error": e.to_string(), "exit_code": e.exit_code() })),
                Format::Text => format!("error: {e}\n"),
            };
            Rendered { status: e.exit_code(), output }
        }
    }
}

fn read_config(g: &GlobalArgs) -> Result<DomainConfig, QslError> {
    let mut cfg = match &g.config {
        None => DomainConfig::tiny(),
        Some(path) => {
            let text = fs::read_to_string(path)?;
            if text.trim_start().starts_with('{') {
                serde_json::from_str(&text).map_err(|e| QslError::Usage(format!("invalid config {path}: {e}")))?
            } else {
                let body: Vec<&str> = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect();
                body.join(" ").parse()?
            }
        }
    };
    if !g.vars.is_empty() {
        cfg.vars = g.vars.clone();
    }
    if let Some(v) = g.vmin {
        cfg.vmin = v;
    }
    if let Some(v) = g.vmax {
        cfg.vmax = v;
    }
    if let Some(a) = g.addrs {
        cfg.addrs = a;
    }
    if let Some(t) = &g.tol {
        cfg.loop_tol = t.parse::<Q>().map_err(|e| QslError::Usage(format!("invalid tolerance: {e}")))?;
    }
    if let Some(m) = g.max_iters {
        cfg.loop_max_iters = m;
    }
    if g.exhaustion_faults {
        cfg.exhaustion = ExhaustionPolicy::Fault;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Adds the variables used by the inputs to the configuration.
fn with_vars(mut cfg: DomainConfig, used: BTreeSet<String>) -> Result<DomainConfig, QslError> {
    for v in used {
        if !cfg.vars.contains(&v) {
            cfg.vars.push(v);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_program(arg: &ProgramArg) -> Result<Program, QslError> {
    let text = match (&arg.prog, &arg.code) {
        (_, Some(code)) => code.clone(),
        (Some(path), None) => {
            if Path::new(path).exists() {
                fs::read_to_string(path)?
            } else if let Some((_, src)) = BUNDLED_PROGRAMS.iter().find(|(name, _)| *name == path.as_str()) {
                src.to_string()
            } else {
                return Err(QslError::Usage(format!("program file `{path}` not found")));
            }
        }
        (None, None) => return Err(QslError::Usage("a program is required (--prog or --code)".into())),
    };
    Ok(parse_program(&text)?)
}

/// Parses a state literal; variables it leaves out are set to 0, or `vmin` if 0 is not a value.
fn read_state(text: &str, cfg: &DomainConfig) -> Result<ProgState, QslError> {
    let mut st: ProgState = text.parse()?;
    let default = if cfg.in_domain(0) { 0 } else { cfg.vmin };
    let mut stack = Stack::new();
    for v in &cfg.vars {
        stack.set(v, st.stack.get(v).unwrap_or(default));
    }
    if let Some(extra) = st.stack.0.keys().find(|k| !cfg.vars.contains(k)) {
        return Err(QslError::Usage(format!("state mentions `{extra}`, which is not a configured variable")));
    }
    for (a, v) in st.heap.cells() {
        if !cfg.is_address(a) {
            return Err(QslError::Usage(format!("heap cell {a} is outside addresses 1..{}", cfg.addrs)));
        }
        if !cfg.in_domain(v) {
            return Err(QslError::Usage(format!("heap value {v} is outside [{}, {}]", cfg.vmin, cfg.vmax)));
        }
    }
    for v in stack.0.values() {
        if !cfg.in_domain(*v) {
            return Err(QslError::Usage(format!("stack value {v} is outside [{}, {}]", cfg.vmin, cfg.vmax)));
        }
    }
    st.stack = stack;
    Ok(st)
}

/// Without an explicit value range, widens the default one to cover the values in `states`.
fn fit_states(mut cfg: DomainConfig, g: &GlobalArgs, states: &[String]) -> Result<DomainConfig, QslError> {
    if g.config.is_some() {
        return Ok(cfg);
    }
    for s in states {
        let st: ProgState = s.parse()?;
        let values = st.stack.0.values().copied().chain(st.heap.cells().map(|(_, v)| v));
        for v in values {
            if g.vmin.is_none() {
                cfg.vmin = cfg.vmin.min(v);
            }
            if g.vmax.is_none() {
                cfg.vmax = cfg.vmax.max(v);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn state_vars(states: &[String]) -> Result<BTreeSet<String>, QslError> {
    let mut out = BTreeSet::new();
    for s in states {
        let st: ProgState = s.parse()?;
        out.extend(st.stack.0.into_keys());
    }
    Ok(out)
}

fn sl_vars(phi: &SlFormula) -> BTreeSet<String> {
    free_vars_expectation(&embed_sl(phi))
}

fn max_cells(g: &GlobalArgs, cfg: &DomainConfig) -> usize {
    g.max_cells.unwrap_or(cfg.addrs)
}

fn verdict_value(v: &Verdict) -> Value {
    match v {
        Verdict::Holds => json!({ "holds": true }),
        Verdict::Counterexample { state, lhs, rhs } => json!({ "holds": false, "state": state, "lhs": lhs, "rhs": rhs }),
    }
}

fn execute_report(cli: &Cli) -> Result<Report, QslError> {
    let g = &cli.global;
    let base = read_config(g)?;
    match &cli.command {
        Command::Eval { expr, state } => {
            let e = parse_expectation(expr)?;
            let mut used = free_vars_expectation(&e);
            used.extend(state_vars(std::slice::from_ref(state))?);
            let cfg = with_vars(fit_states(base, g, std::slice::from_ref(state))?, used)?;
            let st = read_state(state, &cfg)?;
            let v = eval_expectation(&e, &st, &cfg)?;
            let mut r = Report::new("eval", &cfg);
            r.results.push(json!({ "state": st.to_string(), "value": v }));
            r.line(v.to_string());
            Ok(r)
        }
        Command::Wp { mode, program, post, state } => {
            let mode: TransformerMode = mode.parse()?;
            let c = read_program(program)?;
            let post = parse_expectation(post)?;
            let mut used = crate::transformer::variables_of(&c, &post);
            used.extend(state_vars(state)?);
            let cfg = with_vars(fit_states(base, g, state)?, used)?;
            let cells = max_cells(g, &cfg);
            let sem = transform(mode, &c, &post, &cfg, cells)?;
            let mut r = Report::new("wp", &cfg);
            r.residual(sem.approx.as_ref().map(|a| a.residual.clone()));
            let rows: Vec<(ProgState, ExtQ)> = if state.is_empty() {
                sem.entries()
                    .filter(|(st, _)| st.heap.len() <= cells)
                    .map(|(st, e)| Ok((st, e.clone().map_err(|e| (*e).clone())?)))
                    .collect::<Result<_, ModelError>>()?
            } else {
                state
                    .iter()
                    .map(|s| {
                        let st = read_state(s, &cfg)?;
                        let v = sem.value(&st)?;
                        Ok((st, v))
                    })
                    .collect::<Result<_, QslError>>()?
            };
            for (st, v) in &rows {
                r.results.push(json!({ "state": st.to_string(), "value": v }));
                if state.len() == 1 {
                    r.line(v.to_string());
                } else {
                    r.line(format!("{st}\t{v}"));
                }
            }
            if let Some(res) = &r.residual {
                r.line(format!("approximate: loop residual {res}"));
            }
            Ok(r)
        }
        Command::Oracle { program, post, state, opt, symmetry } => {
            let c = read_program(program)?;
            let post = parse_expectation(post)?;
            let mut used = crate::transformer::variables_of(&c, &post);
            used.extend(state_vars(state)?);
            let cfg = with_vars(fit_states(base, g, state)?, used)?;
            let inits: Vec<ProgState> = if state.is_empty() {
                enumerate_states(&cfg, max_cells(g, &cfg))
            } else {
                state.iter().map(|s| read_state(s, &cfg)).collect::<Result<_, _>>()?
            };
            let opt = match opt {
                OptArg::Min => Opt::Min,
                OptArg::Max => Opt::Max,
            };
            let options = OracleOptions { symmetry: *symmetry, ..OracleOptions::for_config(&cfg) };
            let out = expected_reward(opt, &c, &post, &inits, &cfg, &options)?;
            let mut r = Report::new("oracle", &cfg);
            r.residual(out.residual.clone());
            for (st, v) in inits.iter().zip(&out.values) {
                let v = v.clone().map_err(|e| (*e).clone())?;
                r.results.push(json!({ "state": st.to_string(), "value": v }));
                if inits.len() == 1 {
                    r.line(v.to_string());
                } else {
                    r.line(format!("{st}\t{v}"));
                }
            }
            r.line(format!("configurations: {}, iterations: {}", out.configurations, out.iterations));
            Ok(r)
        }
        Command::CheckSoundness { program, post } => {
            let c = read_program(program)?;
            let post = parse_expectation(post)?;
            let cfg = with_vars(base, crate::transformer::variables_of(&c, &post))?;
            let tol = cfg.loop_tol.clone();
            let rep = soundness_check(&c, &post, &cfg, max_cells(g, &cfg), &tol)?;
            let mut r = Report::new("check-soundness", &cfg);
            r.residual(rep.wp_residual.clone());
            r.residual(rep.oracle_residual.clone());
            r.results.push(to_value(&rep));
            r.line(format!(
                "{}: {} states, max difference {}{}",
                if rep.agree { "agree" } else { "DISAGREE" },
                rep.states,
                rep.max_difference,
                if rep.exact { " (exact)" } else { " (within 2*tol)" }
            ));
            if let Some(w) = &rep.witness {
                r.witness(json!({ "state": w }));
                r.line(format!("witness: {w}"));
            }
            r.violated = !rep.agree;
            Ok(r)
        }
        Command::CheckInvariant { program, post, inv, direction } => {
            let c = read_program(program)?;
            let (guard, body) = trailing_loop(&c)?;
            let post = parse_expectation(post)?;
            let inv = parse_expectation(inv)?;
            let mut used = crate::transformer::variables_of(&c, &post);
            used.extend(free_vars_expectation(&inv));
            let cfg = with_vars(base, used)?;
            let dir = match direction {
                InvariantArg::Upper => InvariantDirection::Upper,
                InvariantArg::Lower => InvariantDirection::Lower,
            };
            let verdict = check_invariant(dir, &guard, &body, &post, &inv, &cfg, max_cells(g, &cfg))?;
            let mut r = Report::new("check-invariant", &cfg);
            r.results.push(json!({ "direction": format!("{dir:?}").to_lowercase(), "verdict": verdict_value(&verdict) }));
            report_verdict(&mut r, &verdict, "invariant");
            Ok(r)
        }
        Command::CheckFrame { program, pre, frame, direction } => {
            let c = read_program(program)?;
            let x = parse_expectation(pre)?;
            let y = parse_expectation(frame)?;
            let mut used = crate::transformer::variables_of(&c, &x);
            used.extend(free_vars_expectation(&y));
            let cfg = with_vars(base, used)?;
            let dir = match direction {
                FrameArg::Sound => FrameDirection::Sound,
                FrameArg::Converse => FrameDirection::Converse,
            };
            let rep = check_frame(&c, &x, &y, dir, &cfg, max_cells(g, &cfg))?;
            let mut r = Report::new("check-frame", &cfg);
            let mut lines = vec![("wp", &rep.wp)];
            if let Some(w) = &rep.wlp {
                lines.push(("wlp", w));
            }
            for (name, fv) in lines {
                match fv {
                    FrameVerdict::SideConditionViolated { shared } => {
                        return Err(QslError::Usage(format!(
                            "the frame mentions variables modified by the program: {}",
                            shared.join(", ")
                        )))
                    }
                    FrameVerdict::Checked(v) => {
                        r.results.push(json!({ "mode": name, "verdict": verdict_value(v) }));
                        report_verdict(&mut r, v, name);
                    }
                }
            }
            Ok(r)
        }
        Command::CheckDuality { program, post } => {
            let c = read_program(program)?;
            let f = parse_expectation(post)?;
            let cfg = with_vars(base, crate::transformer::variables_of(&c, &f))?;
            let rep = check_duality(&c, &f, &cfg, max_cells(g, &cfg))?;
            let mut r = Report::new("check-duality", &cfg);
            r.residual(rep.residual.clone());
            for line in &rep.lines {
                r.results.push(to_value(line));
                r.line(format!(
                    "{} {}: max difference {} (tolerance {})",
                    if line.holds { "ok  " } else { "FAIL" },
                    line.id,
                    line.max_difference,
                    rep.tolerance
                ));
                if let Some(w) = &line.witness {
                    r.witness(json!({ "law": line.id, "state": w }));
                }
            }
            r.violated = !rep.holds();
            Ok(r)
        }
        Command::CheckConservativity { program, pre, post } => {
            let c = read_program(program)?;
            let pre = parse_sl(pre)?;
            let post = parse_sl(post)?;
            let mut used = c.vars();
            used.extend(sl_vars(&pre));
            used.extend(sl_vars(&post));
            let cfg = with_vars(base, used)?;
            let rep = check_conservativity(&c, &pre, &post, &cfg, max_cells(g, &cfg))?;
            let mut r = Report::new("check-conservativity", &cfg);
            r.results.push(to_value(&rep));
            r.line(format!(
                "{}: quantitative {}, operational {}, 0/1-valued {}",
                if rep.agree() { "agree" } else { "DISAGREE" },
                rep.quantitative,
                rep.operational,
                rep.zero_one
            ));
            if let Some(w) = &rep.witness {
                r.witness(json!({ "state": w }));
            }
            r.violated = !rep.agree();
            Ok(r)
        }
        Command::Laws { laws, trials, seed, expr_depth, program_len, allow_loops, broken_sepcon } => {
            let selected = select_laws(laws)?;
            let defaults = GenSpec::default();
            let spec = GenSpec {
                seed: *seed,
                expr_depth: expr_depth.unwrap_or(defaults.expr_depth),
                program_len: program_len.unwrap_or(defaults.program_len),
                allow_loops: *allow_loops,
                max_cells: g.max_cells.unwrap_or(defaults.max_cells),
                cfg: base,
                ..defaults
            };
            let report = run_law_suite_with(&selected, &spec, *trials, DebugHooks { broken_sepcon: *broken_sepcon })?;
            Ok(law_report(&spec.cfg, &report))
        }
        Command::Casestudy { study, len, n, case_addrs } => {
            let size = match study {
                CaseStudy::Randomize => *n,
                _ => *len,
            };
            let rep = run_case_study(*study, size, *case_addrs)?;
            let mut r = Report::new("casestudy", &base);
            r.config = json!({ "study": study.name(), "parameters": rep.parameters });
            r.residual(rep.residual.clone());
            r.results.push(to_value(&rep));
            r.text = rep.render_text();
            for check in rep.checks.iter().filter(|c| !c.holds) {
                r.witness(to_value(check));
            }
            r.violated = !rep.holds();
            Ok(r)
        }
    }
}

fn report_verdict(r: &mut Report, v: &Verdict, what: &str) {
    match v {
        Verdict::Holds => r.line(format!("{what}: holds")),
        Verdict::Counterexample { state, lhs, rhs } => {
            r.line(format!("{what}: fails at {state}: {lhs} > {rhs}"));
            r.witness(json!({ "check": what, "state": state, "lhs": lhs, "rhs": rhs }));
            r.violated = true;
        }
    }
}

fn trailing_loop(c: &Program) -> Result<(Guard, Program), QslError> {
    match c {
        Program::While(b, body) => Ok((b.clone(), (**body).clone())),
        Program::Seq(_, rest) => trailing_loop(rest),
        _ => Err(QslError::Usage("check-invariant needs a program ending in a while loop".into())),
    }
}

fn law_report(cfg: &DomainConfig, report: &LawReport) -> Report {
    let mut r = Report::new("laws", cfg);
    for law in &report.laws {
        let mut v = to_value(law);
        if let Value::Object(map) = &mut v {
            map.remove("witnesses");
        }
        r.results.push(v);
        let status = match (law.holds(), &law.known_refutation) {
            (true, _) => "ok  ",
            (false, Some(_)) => "FAIL (known refutation)",
            (false, None) => "FAIL",
        };
        r.line(format!(
            "{status} {:<36} {} trials, {} violations, {} vacuous, {} ms",
            law.id, law.trials, law.violations, law.vacuous, law.elapsed_ms
        ));
        if let Some(w) = law.witnesses.first() {
            let operands: Vec<String> = w.operands.iter().map(|o| format!("{}={}", o.name, o.text)).collect();
            r.line(format!(
                "     witness: {} at {}: {} {} {} fails",
                operands.join(" "),
                w.violation.state,
                w.violation.lhs,
                w.violation.relation,
                w.violation.rhs
            ));
        }
        for w in &law.witnesses {
            r.witness(to_value(w));
        }
    }
    r.line(format!("total violations: {}", report.total_violations));
    r.violated = report.total_violations > 0;
    r
}

/// Entry point of the `qsl` binary.
pub fn main() -> i32 {
    let out = run(std::env::args_os());
    print!("{}", out.output);
    out.status
}
