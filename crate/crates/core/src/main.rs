use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tlplan::landmarks::Residual;
use tlplan::pddl::{self, GroundOptions};
use tlplan::search::{self, Limit, Outcome, SearchConfig};
use tlplan::tlg::{self, Consistency, TlgBuilder, Witness};
use tlplan::trajectory::ValidationReport;
use tlplan::{GroundedTask, TemporalPlan, Time};

// Writes to stdout, ignoring errors such as a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_UNSOLVABLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "tlplan", version, about = "Temporal planner with landmark intervals and PDDL3 trajectory constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a plan.
    Plan {
        #[command(flatten)]
        input: Input,
        /// Give up after expanding this many nodes.
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Give up after this much wall-clock time.
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Worker threads; the plan does not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write the plan to this file.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a plan against the problem's goals and constraints.
    Validate {
        #[command(flatten)]
        input: Input,
        /// Plan in IPC format, one `time: (action args) [duration]` per line.
        plan: PathBuf,
    },
    /// Dump the root landmark graph before and after propagation.
    Tlg {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct Input {
    /// PDDL domain file.
    domain: PathBuf,
    /// PDDL problem file.
    problem: PathBuf,
    /// Plan-horizon bound; required when the problem has no deadlines.
    #[arg(long, value_parser = parse_time)]
    upper_bound: Option<Time>,
    /// Separation between causally linked end points.
    #[arg(long, value_parser = parse_time)]
    epsilon: Option<Time>,
    /// Output format; `dot` applies to `tlg` and falls back to text elsewhere.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print times as decimals instead of exact fractions.
    #[arg(long)]
    decimal: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

fn parse_time(s: &str) -> Result<Time, String> {
    s.parse::<Time>().map_err(|e| e.to_string())
}

impl Input {
    fn show(&self) -> impl Fn(Time) -> String {
        let decimal = self.decimal;
        move |t: Time| if decimal { t.to_decimal_string(3) } else { t.to_string() }
    }

    fn load(&self) -> Result<GroundedTask, String> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
        let domain = pddl::parse_domain(&read(&self.domain)?).map_err(|e| format!("{}: {e}", self.domain.display()))?;
        let problem = pddl::parse_problem(&read(&self.problem)?).map_err(|e| format!("{}: {e}", self.problem.display()))?;
        let opts = GroundOptions {
            upper_bound: self.upper_bound,
            epsilon: self.epsilon,
        };
        pddl::ground(&domain, &problem, &opts).map_err(|e| e.to_string())
    }
}

fn witness_json(w: &Witness) -> Value {
    serde_json::to_value(w).expect("witnesses serialise")
}

fn witness_text(w: &Witness) -> String {
    let mut out = format!(
        "witness landmark={} relation=\"{}\" lhs={} rhs={}\n",
        w.landmark, w.relation, w.lhs, w.rhs
    );
    for step in &w.chain {
        out.push_str(&format!("  {step}\n"));
    }
    out
}

fn plan_json(task: &GroundedTask, plan: &TemporalPlan) -> Value {
    let steps: Vec<Value> = plan
        .steps()
        .iter()
        .map(|s| {
            let a = task.action(s.action);
            json!({"time": s.start, "action": a.label(), "duration": a.dur})
        })
        .collect();
    json!({"steps": steps, "makespan": plan.makespan(task)})
}

fn cmd_plan(input: &Input, max_nodes: Option<usize>, max_seconds: Option<f64>, jobs: usize, output: Option<&Path>) -> Result<u8, String> {
    let task = input.load()?;
    if max_seconds.is_some_and(|s| s <= 0.0 || !s.is_finite()) {
        return Err("--max-seconds must be positive".into());
    }
    if max_nodes == Some(0) || jobs == 0 {
        return Err("--max-nodes and --jobs must be positive".into());
    }
    let config = SearchConfig {
        max_nodes,
        max_time: max_seconds.map(Duration::from_secs_f64),
        jobs,
        ..SearchConfig::default()
    };
    let result = search::solve(&task, &config);
    let stats = json!({
        "expanded": result.stats.expanded,
        "generated": result.stats.generated,
        "pruned": result.stats.pruned_total,
    });
    let json_out = input.format == Format::Json;
    let code = match &result.outcome {
        Outcome::Solved(plan) => {
            let ipc = plan.to_ipc(&task);
            if let Some(path) = output {
                std::fs::write(path, &ipc).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            if json_out {
                outln!("{}", json!({"status": "solved", "plan": plan_json(&task, plan), "stats": stats}));
            } else {
                out!("{ipc}");
                outln!("; makespan {}", (input.show())(plan.makespan(&task)));
            }
            EXIT_OK
        }
        Outcome::Unsolvable(w) => {
            if json_out {
                outln!("{}", json!({"status": "unsolvable", "witness": w.as_ref().map(witness_json), "stats": stats}));
            } else {
                outln!("unsolvable");
                match w {
                    Some(w) => out!("{}", witness_text(w)),
                    None => outln!("search space exhausted"),
                }
            }
            EXIT_UNSOLVABLE
        }
        Outcome::ResourceLimit(limit) => {
            let what = match limit {
                Limit::Nodes => "nodes",
                Limit::Time => "time",
            };
            if json_out {
                outln!("{}", json!({"status": "resource-limit", "limit": what, "stats": stats}));
            } else {
                outln!("resource limit reached ({what})");
            }
            EXIT_LIMIT
        }
    };
    eprintln!(
        "expanded {} generated {} pruned {}",
        result.stats.expanded, result.stats.generated, result.stats.pruned_total
    );
    Ok(code)
}

fn cmd_validate(input: &Input, plan_path: &Path) -> Result<u8, String> {
    let task = input.load()?;
    let text = std::fs::read_to_string(plan_path).map_err(|e| format!("{}: {e}", plan_path.display()))?;
    let plan = TemporalPlan::parse_ipc(&task, &text).map_err(|e| e.to_string())?;
    let report = ValidationReport::build(&task, &plan);
    if input.format == Format::Json {
        outln!("{}", serde_json::to_string_pretty(&report).expect("reports serialise"));
    } else {
        out!("{}", report.to_text());
    }
    Ok(if report.valid { EXIT_OK } else { EXIT_UNSOLVABLE })
}

fn cmd_tlg(input: &Input) -> Result<u8, String> {
    let task = input.load()?;
    let outcome = TlgBuilder::new(&task).build(&Residual::root(&task));
    let show = input.show();
    let witness = match &outcome.consistency {
        Consistency::Consistent => None,
        Consistency::Inconsistent(w) => Some(w),
    };
    match input.format {
        Format::Json => {
            let v = json!({
                "before": serde_json::to_value(&outcome.initial).expect("graphs serialise"),
                "after": serde_json::to_value(&outcome.tlg).expect("graphs serialise"),
                "consistent": witness.is_none(),
                "witness": witness.map(witness_json),
            });
            outln!("{}", serde_json::to_string_pretty(&v).expect("values serialise"));
        }
        Format::Dot => {
            outln!("// before propagation");
            out!("{}", tlg::to_dot_with(&outcome.initial, &show));
            outln!("// after propagation");
            out!("{}", tlg::to_dot_with(&outcome.tlg, &show));
        }
        Format::Text => {
            outln!("== before propagation");
            out!("{}", tlg::to_text_with(&outcome.initial, &show));
            outln!("== after propagation");
            out!("{}", tlg::to_text_with(&outcome.tlg, &show));
            match witness {
                None => outln!("consistent"),
                Some(w) => out!("inconsistent\n{}", witness_text(w)),
            }
        }
    }
    Ok(if witness.is_some() { EXIT_UNSOLVABLE } else { EXIT_OK })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan {
            input,
            max_nodes,
            max_seconds,
            jobs,
            output,
        } => cmd_plan(input, *max_nodes, *max_seconds, *jobs, output.as_deref()),
        Command::Validate { input, plan } => cmd_validate(input, plan),
        Command::Tlg { input } => cmd_tlg(input),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
