//! Command-line front end: document parsing and the `cctree` subcommands.

pub mod document;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cctree::generate;
use cctree::lp::upper::{assemble_upper_lp, upper_lp_for};
use cctree::lp::LpStatus;
use cctree::model::{ConjunctiveEvent, TightAnswer};
use cctree::oracle::{self, Graph};
use cctree::planner::{answer, explain};
use cctree::propagation::answer_premise_restricted_exact;
use cctree::rational::{format_decimal, format_rational};
use cctree::tree::{orient_at, reduce_to_complete, Query};
use cctree::Error;

pub use document::{parse_kb, parse_query, render_constraint, Declaration, KbDocument, Mode};

#[derive(Parser, Debug)]
#[command(
    name = "cctree",
    version,
    about = "Tight probabilistic deduction in conditional constraint trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a document and, in tree mode, check the tree conditions.
    Validate { kb: PathBuf },
    /// Answer a query with the tree engines.
    Query {
        kb: PathBuf,
        query: String,
        /// Print the derivation after the answer.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Answer a query with the classical program over all worlds.
    Oracle {
        kb: PathBuf,
        query: String,
        #[arg(long)]
        json: bool,
    },
    /// Decide satisfiability, optionally requiring a positive-probability premise.
    Sat {
        kb: PathBuf,
        /// Space-separated atoms that must get positive probability.
        #[arg(long)]
        given: Option<String>,
    },
    /// Print a model of a tree in which all events hold together with positive probability.
    Model { kb: PathBuf },
    /// Print the upper-bound linear program of a premise-restricted query.
    EmitLp { kb: PathBuf, query: String },
    /// Print the knowledge base encoding 3-colorability of a graph.
    #[command(name = "gen-3col")]
    Gen3col { graph: PathBuf },
    /// Time the engines on generated trees.
    Bench {
        #[arg(long, value_enum)]
        topology: Topology,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Topology {
    Chain,
    Binary,
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CmdResult = std::result::Result<String, Failure>;

#[derive(Serialize)]
struct JsonAnswer<'a> {
    lower: String,
    upper: String,
    lower_decimal: String,
    upper_decimal: String,
    empty_consequence: bool,
    trace: &'a [String],
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> std::result::Result<KbDocument, Failure> {
    Ok(parse_kb(&read(path)?)?)
}

fn query_label(q: &Query) -> String {
    format!("({} | {})", q.conclusion, q.premise)
}

/// `tight (F | E) = [p/q, p/q]  (~[d.dddd, d.dddd])`
pub fn format_answer(q: &Query, a: &TightAnswer) -> String {
    let label = query_label(q);
    if a.empty_consequence {
        return format!("tight {label} = [1, 0] (inconsistent premise)");
    }
    let mut line = format!(
        "tight {label} = [{}, {}]  (~[{}, {}])",
        format_rational(a.lower()),
        format_rational(a.upper()),
        format_decimal(a.lower(), 4),
        format_decimal(a.upper(), 4)
    );
    if a.approximate {
        line.push_str("  approximate");
    }
    line
}

pub fn answer_json(a: &TightAnswer) -> String {
    let doc = JsonAnswer {
        lower: format_rational(a.lower()),
        upper: format_rational(a.upper()),
        lower_decimal: format_decimal(a.lower(), 4),
        upper_decimal: format_decimal(a.upper(), 4),
        empty_consequence: a.empty_consequence,
        trace: &a.trace,
    };
    serde_json::to_string_pretty(&doc).expect("plain strings serialize")
}

fn cmd_validate(path: &Path) -> CmdResult {
    let doc = load(path)?;
    let kb = doc.knowledge_base()?;
    Ok(match doc.mode {
        Mode::Tree => {
            let t = doc.tree()?;
            let kind = if t.is_exact() { "exact" } else { "interval-valued" };
            format!(
                "valid {kind} tree: {} events, {} constraints\n",
                t.node_count(),
                kb.constraints().len()
            )
        }
        Mode::Kb => format!(
            "valid kb: {} events, {} constraints\n",
            kb.events().len(),
            kb.constraints().len()
        ),
    })
}

fn cmd_query(path: &Path, text: &str, trace: bool, json: bool) -> CmdResult {
    let t = load(path)?.tree()?;
    let q = parse_query(text)?;
    let a = answer(&t, &q)?;
    Ok(if json {
        answer_json(&a) + "\n"
    } else if trace {
        format!("{}\n{}", format_answer(&q, &a), explain(&a))
    } else {
        format_answer(&q, &a) + "\n"
    })
}

fn cmd_oracle(path: &Path, text: &str, json: bool) -> CmdResult {
    let kb = load(path)?.knowledge_base()?;
    let q = parse_query(text)?;
    let a = oracle::oracle_answer(&kb, &q)?;
    Ok(if json {
        answer_json(&a) + "\n"
    } else {
        format_answer(&q, &a) + "\n"
    })
}

fn cmd_sat(path: &Path, given: Option<&str>) -> CmdResult {
    let kb = load(path)?.knowledge_base()?;
    let ok = match given {
        None => oracle::satisfiable(&kb)?,
        Some(atoms) => {
            let premise = ConjunctiveEvent::from_names(&atoms.split_whitespace().collect::<Vec<_>>())?;
            oracle::satisfiable_given(&kb, &premise)?
        }
    };
    Ok(if ok { "satisfiable\n" } else { "unsatisfiable\n" }.to_string())
}

fn cmd_model(path: &Path) -> CmdResult {
    let t = load(path)?.tree()?;
    let pr = oracle::construct_positive_model(&t)?;
    let events = pr.domain().events();
    let mut out = String::new();
    for (bits, mass) in pr.masses() {
        let world: Vec<&str> = events
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, e)| e.name())
            .collect();
        let world = if world.is_empty() {
            "-".to_string()
        } else {
            world.join(" ")
        };
        let _ = writeln!(out, "Pr({world}) = {}", format_rational(mass));
    }
    Ok(out)
}

fn cmd_emit_lp(path: &Path, text: &str) -> CmdResult {
    let t = load(path)?.tree()?;
    let q = parse_query(text)?;
    let reduced = reduce_to_complete(&t, &q)?;
    Ok(upper_lp_for(&reduced.tree, &reduced.query)?.program.render())
}

fn cmd_gen3col(path: &Path) -> CmdResult {
    let g = Graph::parse(&read(path)?)?;
    let kb = oracle::encode_3col(&g);
    let mut out = format!(
        "kb\n# 3-colorability of a graph with {} vertices and {} edges.\n# Some model gives B positive probability iff the graph is 3-colorable: `sat --given B`.\n",
        g.vertices().len(),
        g.edges().len()
    );
    for c in kb.constraints() {
        let _ = writeln!(out, "{}", render_constraint(c));
    }
    Ok(out)
}

fn cmd_bench(topology: Topology, n: usize) -> CmdResult {
    if n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let build = |exact| match topology {
        Topology::Chain => generate::chain(n, exact),
        Topology::Binary => generate::binary(n, exact),
    };
    let exact = build(true)?;
    let q = generate::leaves_given_root(&exact)?;
    let start = Instant::now();
    let a = answer_premise_restricted_exact(&exact, &q)?;
    let exact_time = start.elapsed();

    let general = build(false)?;
    let start = Instant::now();
    let lp = assemble_upper_lp(&orient_at(&general, 0));
    let build_time = start.elapsed();
    let start = Instant::now();
    let solved = lp.solve()?;
    let solve_time = start.elapsed();
    let c = &lp.counts;

    let mut out = String::new();
    let _ = writeln!(out, "topology\t{topology:?}\nnodes\t{n}");
    let _ = writeln!(
        out,
        "exact engine\t{:.3} ms\tanswer {}",
        exact_time.as_secs_f64() * 1e3,
        a
    );
    let _ = writeln!(out, "J constraints\t{}", c.j_constraints);
    let _ = writeln!(out, "generated inequalities\t{}", c.generated());
    let _ = writeln!(out, "after subsumption\t{}", c.after_subsumption());
    let _ = writeln!(out, "upper limit 2n+n^2+n^4\t{}", c.upper_limit());
    let _ = writeln!(out, "LP build\t{:.3} ms", build_time.as_secs_f64() * 1e3);
    let value = match (&solved.status, &solved.value) {
        (LpStatus::Optimal, Some(v)) => format_decimal(v, 4),
        (status, _) => format!("{status:?}"),
    };
    let _ = writeln!(
        out,
        "LP solve\t{:.3} ms\toptimum {value}",
        solve_time.as_secs_f64() * 1e3
    );
    Ok(out)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { kb } => cmd_validate(&kb),
        Command::Query { kb, query, trace, json } => cmd_query(&kb, &query, trace, json),
        Command::Oracle { kb, query, json } => cmd_oracle(&kb, &query, json),
        Command::Sat { kb, given } => cmd_sat(&kb, given.as_deref()),
        Command::Model { kb } => cmd_model(&kb),
        Command::EmitLp { kb, query } => cmd_emit_lp(&kb, &query),
        Command::Gen3col { graph } => cmd_gen3col(&graph),
        Command::Bench { topology, n } => cmd_bench(topology, n),
    }
}

/// Runs one command line; returns the exit status (0 success, 1 domain error, 2 usage error).
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
