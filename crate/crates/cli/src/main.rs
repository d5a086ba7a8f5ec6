//! Command-line front end for the wall-crossing calculator.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 method not applicable,
//! 4 verification failure.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeSet;
use std::io::Write;
use std::process::ExitCode;
use wallx_core::num::rat_from_str;
use wallx_core::stability::{walls_in_window, Wall, Window};
use wallx_core::verify::run_suite;
use wallx_core::wallcross::{
    disjoint_wallcross, main_wallcross_resolved, pushforward_resolved_expr, wallcross_on_jbar,
    Crossing, StrataClassExpr,
};
use wallx_core::Error;

#[derive(Parser)]
#[command(
    name = "wallx",
    about = "Exact wall-crossing terms of universal Brill-Noether classes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Params {
    /// genus
    #[arg(long)]
    g: u32,
    /// number of markings
    #[arg(long)]
    n: u32,
    /// degree (must satisfy d < g for crossings)
    #[arg(long)]
    d: i64,
    /// output file (stdout when omitted)
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// output format (only json is supported)
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// List the stability hyperplanes meeting a coordinate window,
    /// grouped by point-set coincidence.
    Walls {
        #[command(flatten)]
        params: Params,
        /// uniform closed interval "lo,hi" applied to every coordinate
        #[arg(long, default_value = "-2,2", allow_hyphen_values = true)]
        window: String,
    },
    /// Compute the wall-crossing class across one hyperplane.
    Cross {
        #[command(flatten)]
        params: Params,
        /// the wall "i,t,{markings},k", e.g. "1,1,{1},0"
        #[arg(long)]
        wall: String,
        /// the closed formula on the plus-side Jacobian (default)
        #[arg(long)]
        base: bool,
        /// the formula on the resolution (exceptional psi-classes)
        #[arg(long)]
        resolved: bool,
        /// the vine-collapse formula (errors on self-intersecting walls)
        #[arg(long)]
        disjoint: bool,
        /// cap on the number of edges of contributing strata
        #[arg(long)]
        max_edges: Option<usize>,
        /// additionally run the pushforward oracle and report agreement
        #[arg(long)]
        check: bool,
    },
    /// Run a verification suite and print a machine-readable report.
    Verify {
        /// posets | forests | categories | coefficients | oracles | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// output file (stdout when omitted)
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

fn parse_wall(g: u32, n: u32, spec: &str) -> Result<Wall, String> {
    // "i,t,{a,b},k" or "i,t,a+b,k"
    let spec = spec.trim();
    let (head, rest) = spec
        .split_once(',')
        .and_then(|(i, r)| r.split_once(',').map(|(t, r2)| ((i, t), r2)))
        .ok_or("wall must be i,t,S,k")?;
    let (s_part, k_part) = rest.rsplit_once(',').ok_or("wall must be i,t,S,k")?;
    let i: u32 = head.0.trim().parse().map_err(|_| "bad i")?;
    let t: u32 = head.1.trim().parse().map_err(|_| "bad t")?;
    let k: i64 = k_part.trim().parse().map_err(|_| "bad k")?;
    let s_clean = s_part.trim().trim_start_matches('{').trim_end_matches('}');
    let mut s: BTreeSet<u32> = BTreeSet::new();
    for piece in s_clean.split(|c| c == ',' || c == '+') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        s.insert(piece.parse().map_err(|_| "bad marking in S")?);
    }
    Wall::new(g, n, i, t, s, k).map_err(|e| e.to_string())
}

fn emit(out: &Option<std::path::PathBuf>, payload: &str) -> Result<(), String> {
    match out {
        None => {
            println!("{payload}");
            Ok(())
        }
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| e.to_string())?;
            writeln!(f, "{payload}").map_err(|e| e.to_string())
        }
    }
}

fn run() -> Result<u8, (u8, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Walls { params, window } => {
            if params.format != "json" {
                return Err((2, "only --format json is supported".into()));
            }
            let (lo, hi) =
                window.split_once(',').ok_or((2, "window must be lo,hi".to_string()))?;
            let lo = rat_from_str(lo).ok_or((2, "bad window bound".to_string()))?;
            let hi = rat_from_str(hi).ok_or((2, "bad window bound".to_string()))?;
            let win = Window::uniform(params.g, params.n, lo, hi);
            let groups = walls_in_window(params.g, params.n, params.d, &win);
            let json = serde_json::json!({
                "g": params.g,
                "n": params.n,
                "d": params.d,
                "walls": groups.iter().map(|gr| serde_json::json!({
                    "representative": gr.representative(),
                    "multiplicity": gr.multiplicity(),
                    "coincident": gr.walls,
                })).collect::<Vec<_>>(),
            });
            emit(&params.out, &serde_json::to_string_pretty(&json).unwrap())
                .map_err(|e| (2, e))?;
            Ok(0)
        }
        Command::Cross { params, wall, base, resolved, disjoint, max_edges, check } => {
            if params.format != "json" {
                return Err((2, "only --format json is supported".into()));
            }
            if params.d >= params.g as i64 {
                return Err((2, format!("need d < g, got d = {}, g = {}", params.d, params.g)));
            }
            let wall = parse_wall(params.g, params.n, &wall).map_err(|e| (2, e))?;
            let crossing = Crossing::new(params.g, params.n, params.d, &wall).map_err(classify)?;
            let cap = max_edges.unwrap_or_else(|| crossing.default_max_edges());
            let mode_count = [base, resolved, disjoint].iter().filter(|&&b| b).count();
            if mode_count > 1 {
                return Err((2, "choose one of --base, --resolved, --disjoint".into()));
            }
            let expr: StrataClassExpr = if resolved {
                main_wallcross_resolved(&crossing, cap).map_err(classify)?
            } else if disjoint {
                disjoint_wallcross(&crossing).map_err(classify)?
            } else {
                wallcross_on_jbar(&crossing, cap).map_err(classify)?
            };
            let mut json = serde_json::to_value(expr.to_json()).unwrap();
            if check {
                let resolved_expr = main_wallcross_resolved(&crossing, cap).map_err(classify)?;
                let pushed =
                    pushforward_resolved_expr(&crossing, &resolved_expr, cap).map_err(classify)?;
                let jbar = wallx_core::wallcross::expand_to_component_basis(
                    &wallcross_on_jbar(&crossing, cap).map_err(classify)?,
                );
                let equal = pushed.equals(&jbar);
                json.as_object_mut().unwrap().insert(
                    "oracle".into(),
                    serde_json::json!(if equal { "equal" } else { "mismatch" }),
                );
                if !equal {
                    emit(&params.out, &serde_json::to_string_pretty(&json).unwrap())
                        .map_err(|e| (2, e))?;
                    return Err((4, "pushforward oracle mismatch".into()));
                }
                eprintln!("oracle: equal");
            }
            emit(&params.out, &serde_json::to_string_pretty(&json).unwrap())
                .map_err(|e| (2, e))?;
            Ok(0)
        }
        Command::Verify { suite, out } => {
            let report = run_suite(&suite).map_err(classify)?;
            for c in &report.checks {
                eprintln!(
                    "{} {}: {} passed, {} failed",
                    if c.failed == 0 { "PASS" } else { "FAIL" },
                    c.name,
                    c.passed,
                    c.failed
                );
            }
            let payload = serde_json::to_string_pretty(&report).unwrap();
            match out {
                None => println!("{payload}"),
                Some(path) => {
                    std::fs::write(&path, payload + "\n").map_err(|e| (2, e.to_string()))?;
                }
            }
            if !report.ok() {
                return Err((4, report.first_failure().unwrap_or_else(|| "suite failed".into())));
            }
            Ok(0)
        }
    }
}

fn classify(e: Error) -> (u8, String) {
    match e {
        Error::NotApplicable(msg) => (3, msg),
        Error::InvalidInput(msg) => (2, msg),
        other => (2, other.to_string()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
