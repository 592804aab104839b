//! Command-line front end: `check`, `reduce`, `translate`, `simulate`,
//! `graph`, `enumerate` and `verify`. Exit codes: 0 ok, 1 law or certificate
//! violation, 2 user error (syntax or typing), 3 resource exhausted.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lambda_delta::concrete::{parse_context, parse_formula, parse_term};
use lambda_delta::conjfree::{cf_formula, cf_term, simulate_sequence_cf};
use lambda_delta::demorgan::{dm_formula, dm_term, simulate_sequence};
use lambda_delta::gen::{enumerate, GenSpec};
use lambda_delta::rewrite::{
    normalize, reduction_graph, RuleId, RuleSet, Strategy, Trace, Verdict,
};
use lambda_delta::suites::{run_suite, SuiteId};
use lambda_delta::syntax::{freshen_shadowing, set_prime_base, Term};
use lambda_delta::typing::{infer, Ctx, SystemId};

#[derive(Parser)]
#[command(name = "ldk")]
#[command(about = "Workbench for classical natural deduction with reductio ad absurdum")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a term file and print its formula
    Check {
        file: PathBuf,
        /// Context file with comma-separated `x:T` declarations
        #[arg(long)]
        ctx: Option<PathBuf>,
    },
    /// Normalize a term under a system's rules and emit the trace
    Reduce {
        file: PathBuf,
        #[arg(long)]
        ctx: Option<PathBuf>,
        /// full | disjfree | small
        #[arg(long, default_value = "full")]
        system: SystemId,
        /// Comma-separated auxiliary rules to admit: rho3,rho4,kappa,iota
        #[arg(long)]
        aux: Option<String>,
        /// lo (leftmost-outermost) | li (leftmost-innermost)
        #[arg(long, default_value = "lo")]
        strategy: Strategy,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        /// Write the reduction trace as JSON lines
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the translated term and formula
    Translate {
        file: PathBuf,
        #[arg(long)]
        ctx: Option<PathBuf>,
        /// demorgan | conjfree
        #[arg(long)]
        map: String,
    },
    /// Check a recorded trace against the simulation theorems
    Simulate {
        file: PathBuf,
        #[arg(long)]
        ctx: Option<PathBuf>,
        /// demorgan | conjfree
        #[arg(long)]
        map: String,
        /// Trace file (JSON lines) to replay from the term
        #[arg(long)]
        trace: PathBuf,
    },
    /// Build the bounded reduction graph and report its verdict
    Graph {
        file: PathBuf,
        #[arg(long)]
        ctx: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        system: SystemId,
        /// Comma-separated auxiliary rules to admit: rho3,rho4,kappa,iota
        #[arg(long)]
        aux: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        bound: usize,
        /// Write the graph in DOT format
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the enumerated corpus of well-typed terms
    Enumerate {
        #[arg(long, default_value = "full")]
        system: SystemId,
        #[arg(long)]
        bound: usize,
        /// Only terms of this type
        #[arg(long = "type")]
        type_filter: Option<String>,
    },
    /// Run a verification suite over the enumerated corpus
    Verify {
        #[arg(long)]
        suite: SuiteId,
        #[arg(long)]
        bound: usize,
        /// Write the full report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

struct Fail {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> Fail {
    Fail {
        code,
        msg: msg.to_string(),
    }
}

fn read(path: &PathBuf) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn load_ctx(path: &Option<PathBuf>) -> Result<Ctx, Fail> {
    match path {
        None => Ok(Ctx::new()),
        Some(p) => parse_context(&read(p)?).map_err(|e| fail(2, e)),
    }
}

fn load_term(path: &PathBuf, ctx: &Ctx) -> Result<Term, Fail> {
    let term = parse_term(&read(path)?).map_err(|e| fail(2, e))?;
    let taken: BTreeSet<String> = ctx.names().cloned().collect();
    let term = freshen_shadowing(&term, &taken);
    infer(ctx, &term).map_err(|e| fail(2, e))?;
    Ok(term)
}

fn parse_aux(aux: &Option<String>) -> Result<RuleSet, Fail> {
    let mut set = RuleSet::EMPTY;
    if let Some(s) = aux {
        for name in s.split(',').filter(|s| !s.is_empty()) {
            let rule: RuleId = name.parse().map_err(|e| fail(2, e))?;
            if !rule.is_aux() {
                return Err(fail(2, format!("{name} is a system rule, not auxiliary")));
            }
            set = set.with(rule);
        }
    }
    Ok(set)
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), Fail> {
    std::fs::write(path, content).map_err(|e| fail(2, format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Fail> {
    match cli.cmd {
        Cmd::Check { file, ctx } => {
            let ctx = load_ctx(&ctx)?;
            let term = load_term(&file, &ctx)?;
            let ty = infer(&ctx, &term).map_err(|e| fail(2, e))?;
            println!("{ty}");
            Ok(())
        }
        Cmd::Reduce {
            file,
            ctx,
            system,
            aux,
            strategy,
            fuel,
            trace,
        } => {
            let ctx = load_ctx(&ctx)?;
            let term = load_term(&file, &ctx)?;
            let rules = RuleSet::system(system).union(parse_aux(&aux)?);
            let n = normalize(&ctx, &term, rules, strategy, fuel).map_err(|e| fail(2, e))?;
            if let Some(path) = &trace {
                write_file(path, &n.trace.to_jsonl())?;
            } else {
                print!("{}", n.trace.to_jsonl());
            }
            println!("{}", n.trace.endpoint());
            if n.fuel_exhausted {
                return Err(fail(3, format!("fuel exhausted after {fuel} steps")));
            }
            Ok(())
        }
        Cmd::Translate { file, ctx, map } => {
            let ctx = load_ctx(&ctx)?;
            let term = load_term(&file, &ctx)?;
            let ty = infer(&ctx, &term).map_err(|e| fail(2, e))?;
            match map.as_str() {
                "demorgan" => {
                    let image = dm_term(&ctx, &term).map_err(|e| fail(2, e))?;
                    println!("{image}");
                    println!("{}", dm_formula(&ty));
                }
                "conjfree" => {
                    let image = cf_term(&ctx, &term).map_err(|e| fail(2, e))?;
                    println!("{image}");
                    println!("{}", cf_formula(&ty).map_err(|e| fail(2, e))?);
                }
                other => return Err(fail(2, format!("unknown map {other:?}"))),
            }
            Ok(())
        }
        Cmd::Simulate {
            file,
            ctx,
            map,
            trace,
        } => {
            let ctx = load_ctx(&ctx)?;
            let term = load_term(&file, &ctx)?;
            let script = Trace::script_from_jsonl(&read(&trace)?).map_err(|e| fail(2, e))?;
            let source = Trace::replay(&ctx, term, &script).map_err(|e| fail(2, e))?;
            let cert = match map.as_str() {
                "demorgan" => simulate_sequence(&ctx, &source),
                "conjfree" => simulate_sequence_cf(&ctx, &source),
                other => return Err(fail(2, format!("unknown map {other:?}"))),
            }
            .map_err(|e| fail(1, e))?;
            println!("{}", cert.json());
            if !cert.ok {
                return Err(fail(1, "certificate invariants violated"));
            }
            Ok(())
        }
        Cmd::Graph {
            file,
            ctx,
            system,
            aux,
            bound,
            dot,
        } => {
            let ctx = load_ctx(&ctx)?;
            let term = load_term(&file, &ctx)?;
            let rules = RuleSet::system(system).union(parse_aux(&aux)?);
            let g = reduction_graph(&ctx, &term, rules, bound).map_err(|e| fail(2, e))?;
            println!(
                "nodes: {} edges: {} verdict: {}",
                g.nodes.len(),
                g.edges.len(),
                g.verdict.name()
            );
            if let Some(path) = &dot {
                write_file(path, &g.to_dot())?;
            }
            match g.verdict {
                Verdict::ExhaustedAcyclic => Ok(()),
                Verdict::ExhaustedWithCycle(cycle) => {
                    Err(fail(1, format!("reduction cycle through nodes {cycle:?}")))
                }
                Verdict::BoundExceeded => Err(fail(3, "node bound exceeded")),
            }
        }
        Cmd::Enumerate {
            system,
            bound,
            type_filter,
        } => {
            let mut spec = GenSpec::standard(system, bound);
            if let Some(src) = type_filter {
                spec.type_filter = Some(parse_formula(&src).map_err(|e| fail(2, e))?);
            }
            for (t, ty) in enumerate(&spec) {
                println!("{t} : {ty}");
            }
            Ok(())
        }
        Cmd::Verify { suite, bound, json } => {
            let system = match suite {
                SuiteId::SubstLemmaCf
                | SuiteId::SoundnessCf
                | SuiteId::ThmTranslationStepCf
                | SuiteId::ThmTranslationSeqCf => SystemId::DisjFree,
                SuiteId::LemmaPostponement | SuiteId::Purify | SuiteId::SnSmall => SystemId::Small,
                SuiteId::SnDisjfree => SystemId::DisjFree,
                _ => SystemId::Full,
            };
            let spec = GenSpec::standard(system, bound);
            let report = run_suite(suite, &spec);
            println!(
                "{}: {} — cases {}, failures {}, cap hits {}, {} ms",
                report.suite,
                if report.passed() { "pass" } else { "FAIL" },
                report.cases_run,
                report.failures.len(),
                report.cap_hits,
                report.elapsed_ms
            );
            for note in &report.notes {
                println!("note: {note}");
            }
            for f in report.failures.iter().take(5) {
                println!("failure[{}]: {} — {}", f.law, f.input, f.witness);
            }
            if let Some(path) = &json {
                let text =
                    serde_json::to_string_pretty(&report).map_err(|e| fail(2, e.to_string()))?;
                write_file(path, &text)?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(fail(1, format!("{} failures", report.failures.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    // downstream tools routinely pipe into head; die quietly on closed pipes
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Ok(seed) = std::env::var("LDK_SEED") {
        match seed.parse::<usize>() {
            Ok(n) => set_prime_base(n),
            Err(_) => {
                eprintln!("error: LDK_SEED must be a non-negative integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail { code, msg }) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
