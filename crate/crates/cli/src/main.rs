//! `gconvex run <config> [--out DIR] [--seed N] [--threads N]`
//!
//! Exit codes: 0 success, 1 errors (parse/validation/solver), 2 verdict
//! failures (an inequality with negative slack, a dichotomy violation, a
//! corrupted solve).

mod commands;
mod config;

use std::process::ExitCode;

fn usage() -> String {
    "usage: gconvex run <config-path> [--out DIR] [--seed N] [--threads N]".to_string()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &[String]) -> Result<ExitCode, String> {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        println!("{}", usage());
        return Ok(ExitCode::SUCCESS);
    }
    if args[0] != "run" {
        return Err(format!("unknown subcommand '{}'\n{}", args[0], usage()));
    }
    let mut path = None;
    let mut out_dir = ".".to_string();
    let mut seed: Option<u64> = None;
    let mut threads: Option<usize> = None;
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                out_dir = it.next().ok_or("--out needs a directory")?.clone();
            }
            "--seed" => {
                seed = Some(
                    it.next()
                        .ok_or("--seed needs a value")?
                        .parse()
                        .map_err(|e| format!("bad --seed: {e}"))?,
                );
            }
            "--threads" => {
                // Accepted for interface stability; every module here runs
                // single-threaded, so values other than 1 change nothing.
                threads = Some(
                    it.next()
                        .ok_or("--threads needs a value")?
                        .parse()
                        .map_err(|e| format!("bad --threads: {e}"))?,
                );
            }
            other if path.is_none() => path = Some(other.to_string()),
            other => return Err(format!("unexpected argument '{other}'\n{}", usage())),
        }
    }
    if let Some(t) = threads {
        if t == 0 {
            return Err("--threads must be at least 1".into());
        }
    }
    let path = path.ok_or_else(usage)?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let mut cfg = config::parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.params.insert("seed".into(), s.to_string());
    }
    match commands::run_suite(&cfg, &out_dir) {
        Ok(commands::Outcome::Success) => Ok(ExitCode::SUCCESS),
        Ok(commands::Outcome::VerdictFailure(msg)) => {
            eprintln!("verdict failure: {msg}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.to_string()),
    }
}
