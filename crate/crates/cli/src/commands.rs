use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use magpi::context::ContextTriple;
use magpi::diagnostic::Diagnostic;
use magpi::lts::{reduce_closure, CtxState, Limits};
use magpi::parser::{parse_source, SourceFile};
use magpi::semantics::{
    check_df_network, check_failure_handling, check_term_network, enumerate_steps, explore_network, simulate,
    DropPolicy, NetCheck,
};
use magpi::syntax::Program;
use magpi::typecheck::typecheck_program;
use magpi::verify::{
    check_df_types, check_safety, check_term_types, check_tt, report_property_transfer, Status, Verdict,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATED: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_USAGE: u8 = 3;

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "magpi",
    version,
    about = "Typecheck, model-check and simulate replicated failure-prone session protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and typecheck a protocol.
    Check(Common),
    /// Typecheck, then check safety, deadlock freedom and termination of the types.
    Verify(Common),
    /// Run one seeded random execution of the network.
    Simulate(SimulateArgs),
    /// Explore every reachable network state.
    Explore(Common),
    /// Export the transition system of the typing contexts.
    Lts(Common),
}

#[derive(Args, Debug)]
pub struct Common {
    /// A `.magpi` protocol file.
    pub input: PathBuf,
    /// Maximum number of distinct states to explore.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
    /// Maximum replicated-server receptions along one explored path.
    #[arg(long, default_value_t = 64)]
    pub bound: usize,
    /// Extra outputs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub emit: Vec<Emit>,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "any")]
    pub policy: DropPolicy,
    #[arg(long, default_value_t = 1_000)]
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    /// One JSON document instead of text.
    Json,
    /// Include the typing derivation.
    Derivation,
    /// Graphviz rendering of the context transition system.
    LtsDot,
    /// One JSON object per simulated step.
    Trace,
}

struct Output {
    text: String,
    code: u8,
}

pub fn run(cli: &Cli) -> u8 {
    let common = match &cli.command {
        Command::Check(c) | Command::Verify(c) | Command::Explore(c) | Command::Lts(c) => c,
        Command::Simulate(s) => &s.common,
    };
    let program = match load(common) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let out = match &cli.command {
        Command::Check(c) => check(c, &program),
        Command::Verify(c) => verify(c, &program),
        Command::Simulate(s) => run_simulation(s, &program),
        Command::Explore(c) => explore(c, &program),
        Command::Lts(c) => lts(c, &program),
    };
    match &common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.text) {
                eprintln!("magpi: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{}", out.text),
    }
    out.code
}

fn load(c: &Common) -> Result<Program, u8> {
    let src = SourceFile::read(&c.input).map_err(|e| {
        eprintln!("magpi: cannot read {}: {e}", c.input.display());
        EXIT_USAGE
    })?;
    parse_source(&src).map_err(|diags| {
        for d in diags {
            report(c, &d);
        }
        EXIT_USAGE
    })
}

fn report(c: &Common, d: &Diagnostic) {
    eprintln!("{}:{d}", c.input.display());
}

fn limits(c: &Common) -> Limits {
    Limits { budget: c.budget, bang_cap: c.bound }
}

fn exit_for(status: Status) -> u8 {
    match status {
        Status::Holds => EXIT_OK,
        Status::Violated => EXIT_VIOLATED,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn initial(p: &Program) -> (ContextTriple, CtxState) {
    let ctx = p.contexts();
    let s0 = CtxState::new(ctx.delta.clone(), ctx.theta.clone());
    (ctx, s0)
}

fn json_doc(command: &str, c: &Common, mut body: serde_json::Map<String, Value>) -> String {
    body.insert("schema".into(), json!(SCHEMA));
    body.insert("command".into(), json!(command));
    body.insert("file".into(), json!(c.input.display().to_string()));
    let mut s = serde_json::to_string_pretty(&Value::Object(body)).expect("serializable");
    s.push('\n');
    s
}

fn check(c: &Common, p: &Program) -> Output {
    let typed = typecheck_program(p);
    if let Err(d) = &typed {
        report(c, d);
    }
    let code = if typed.is_ok() { EXIT_OK } else { EXIT_VIOLATED };
    if c.emit.contains(&Emit::Json) {
        let mut body = serde_json::Map::new();
        body.insert("typecheck".into(), json!(if typed.is_ok() { "pass" } else { "fail" }));
        match &typed {
            Ok(d) if c.emit.contains(&Emit::Derivation) => {
                body.insert("derivation".into(), serde_json::to_value(d).expect("serializable"));
            }
            Ok(_) => {}
            Err(d) => {
                body.insert("diagnostic".into(), serde_json::to_value(d).expect("serializable"));
            }
        }
        return Output { text: json_doc("check", c, body), code };
    }
    let mut text = String::new();
    match &typed {
        Ok(d) => {
            let _ = writeln!(text, "typecheck: pass ({} rule applications)", d.node_count());
            if c.emit.contains(&Emit::Derivation) {
                text.push_str(&d.pretty());
            }
        }
        Err(_) => text.push_str("typecheck: fail\n"),
    }
    Output { text, code }
}

fn verdict_line(name: &str, v: &Verdict) -> String {
    let mut line = format!("{name}: {}", v.status);
    if let Some(cond) = v.condition {
        let _ = write!(line, " {cond}");
    }
    if let Some(w) = v.witness_actions() {
        let _ = write!(line, " witness {w}");
    }
    let _ = write!(line, " ({} states{})", v.states, if v.exhausted { "" } else { ", not exhausted" });
    if let Some(d) = &v.detail {
        let _ = write!(line, "; {d}");
    }
    line.push('\n');
    line
}

fn verify(c: &Common, p: &Program) -> Output {
    let typed = typecheck_program(p);
    if let Err(d) = &typed {
        report(c, d);
    }
    let (ctx, s0) = initial(p);
    let g = &ctx.gamma;
    let safety = check_safety(g, &s0, &p.reliability, limits(c));
    let df = check_df_types(g, &s0, limits(c));
    let term = check_term_types(g, &s0, limits(c));
    let tt = check_tt(g);
    let transfer = report_property_transfer(safety.status, df.status, term.status);
    let code = if typed.is_err() { EXIT_VIOLATED } else { exit_for(safety.status.and(df.status).and(term.status)) };

    if c.emit.contains(&Emit::Json) {
        let mut body = serde_json::Map::new();
        body.insert("typecheck".into(), json!(if typed.is_ok() { "pass" } else { "fail" }));
        if let Err(d) = &typed {
            body.insert("diagnostic".into(), serde_json::to_value(d).expect("serializable"));
        }
        if let (Ok(d), true) = (&typed, c.emit.contains(&Emit::Derivation)) {
            body.insert("derivation".into(), serde_json::to_value(d).expect("serializable"));
        }
        body.insert("safety".into(), serde_json::to_value(&safety).expect("serializable"));
        body.insert("df".into(), serde_json::to_value(&df).expect("serializable"));
        body.insert("term".into(), serde_json::to_value(&term).expect("serializable"));
        body.insert("tt".into(), json!(tt));
        body.insert("transfer".into(), serde_json::to_value(&transfer).expect("serializable"));
        return Output { text: json_doc("verify", c, body), code };
    }

    let mut text = String::new();
    let _ = writeln!(text, "typecheck: {}", if typed.is_ok() { "pass" } else { "fail" });
    text.push_str(&verdict_line("safety", &safety));
    text.push_str(&verdict_line("df", &df));
    text.push_str(&verdict_line("term", &term));
    let _ = writeln!(text, "tt: {tt}");
    if transfer.claims.is_empty() {
        text.push_str("network: no claims\n");
    } else {
        let _ = writeln!(text, "network: {}", transfer.claims.join("; "));
    }
    if c.emit.contains(&Emit::LtsDot) {
        text.push_str(&reduce_closure(g, &s0, limits(c)).to_dot());
    }
    Output { text, code }
}

fn run_simulation(s: &SimulateArgs, p: &Program) -> Output {
    let c = &s.common;
    let trace = simulate(&p.network, &p.reliability, s.seed, s.max_steps, s.policy);
    let code = if trace.fault.is_some() { EXIT_VIOLATED } else { EXIT_OK };
    if let Some(f) = &trace.fault {
        eprintln!("{}: runtime type error: {f}", c.input.display());
    }
    if c.emit.contains(&Emit::Trace) {
        return Output { text: trace.to_jsonl(), code };
    }
    if c.emit.contains(&Emit::Json) {
        let mut body = serde_json::Map::new();
        body.insert("seed".into(), json!(s.seed));
        body.insert("policy".into(), json!(s.policy.name()));
        body.insert("steps".into(), serde_json::to_value(&trace.steps).expect("serializable"));
        body.insert("final".into(), json!(trace.final_network().to_string()));
        body.insert("terminal".into(), json!(trace.terminal));
        body.insert("fault".into(), serde_json::to_value(&trace.fault).expect("serializable"));
        return Output { text: json_doc("simulate", c, body), code };
    }
    let mut text = String::new();
    for (i, st) in trace.steps.iter().enumerate() {
        let _ = writeln!(text, "{:>4}  {}", i + 1, st.step);
    }
    let _ = writeln!(text, "final: {}", trace.final_network());
    let end = match (&trace.fault, trace.terminal) {
        (Some(_), _) => "runtime type error",
        (None, true) => "terminal",
        (None, false) => "step limit",
    };
    let _ = writeln!(text, "stopped: {end}");
    Output { text, code }
}

fn net_check_json(x: &magpi::semantics::Exploration, c: &NetCheck) -> Value {
    json!({
        "status": c.status,
        "reason": c.reason,
        "witness": c.witness.map(|w| x.path_to(w).iter().map(ToString::to_string).collect::<Vec<_>>()),
    })
}

fn explore(c: &Common, p: &Program) -> Output {
    let first: Vec<String> = enumerate_steps(&p.network, &p.reliability)
        .into_iter()
        .filter(|(s, _)| !s.is_fault())
        .map(|(s, _)| s.rule.to_string())
        .collect();
    let x = explore_network(&p.network, &p.reliability, c.budget);
    let df = check_df_network(&x);
    let term = check_term_network(&x);
    let fh = check_failure_handling(&x, &p.reliability);
    let code = exit_for(df.status.and(fh.status));

    if c.emit.contains(&Emit::Json) {
        let mut body = serde_json::Map::new();
        body.insert("initial_successors".into(), json!({ "count": first.len(), "rules": first }));
        body.insert("states".into(), json!(x.states.len()));
        body.insert("terminals".into(), json!(x.terminals.len()));
        body.insert("faults".into(), json!(x.faults.len()));
        body.insert("exhausted".into(), json!(x.exhausted));
        body.insert("df".into(), net_check_json(&x, &df));
        body.insert("term".into(), net_check_json(&x, &term));
        body.insert("failure_handling".into(), net_check_json(&x, &fh));
        return Output { text: json_doc("explore", c, body), code };
    }
    let mut text = String::new();
    let _ = writeln!(text, "initial successors: {} [{}]", first.len(), first.join(", "));
    let _ = writeln!(
        text,
        "states: {} ({}), terminals: {}, runtime type errors: {}",
        x.states.len(),
        if x.exhausted { "exhausted" } else { "budget reached" },
        x.terminals.len(),
        x.faults.len()
    );
    for (name, check) in [("df", &df), ("term", &term), ("failure handling", &fh)] {
        let _ = write!(text, "{name}: {}", check.status);
        if let Some(r) = &check.reason {
            let _ = write!(text, "; {r}");
        }
        text.push('\n');
    }
    Output { text, code }
}

fn lts(c: &Common, p: &Program) -> Output {
    let (ctx, s0) = initial(p);
    let closure = reduce_closure(&ctx.gamma, &s0, limits(c));
    let code = if closure.exhausted { EXIT_OK } else { EXIT_INCONCLUSIVE };
    if c.emit.contains(&Emit::Json) {
        let mut body = serde_json::Map::new();
        body.insert("states".into(), serde_json::to_value(&closure.states).expect("serializable"));
        let edges: Vec<Value> = closure
            .edges
            .iter()
            .map(|e| json!({ "from": e.from, "to": e.to, "action": e.action, "replicated": e.replicated }))
            .collect();
        body.insert("edges".into(), Value::Array(edges));
        body.insert("exhausted".into(), json!(closure.exhausted));
        return Output { text: json_doc("lts", c, body), code };
    }
    Output { text: closure.to_dot(), code }
}
