mod args;
mod commands;
mod record;
mod table;

use std::process::ExitCode;
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use clap::{CommandFactory, Parser};
use serde_json::Value;

use crate::args::{Action, Cli, Command, ReplayArgs};
use crate::commands::Outcome;
use crate::record::ExperimentRecord;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap maps help and version to 0 and usage errors to 2
            let _ = e.print();
            if e.use_stderr() && !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(&std::env::args().collect::<Vec<_>>()));
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &cli.action {
        Action::Run(cmd) => run(&cli, cmd),
        Action::Replay(r) => replay(r),
    }
}

/// Usage of the subcommand named in `argv`, else of the whole program.
fn usage_for(argv: &[String]) -> clap::builder::StyledStr {
    let mut root = Cli::command();
    let name = argv.iter().skip(1).find(|a| root.find_subcommand(a.as_str()).is_some()).cloned();
    match name {
        Some(n) => {
            let sub = root.find_subcommand(&n).cloned().expect("found above");
            sub.bin_name(format!("rho-lab {n}")).render_usage()
        }
        None => root.render_usage(),
    }
}

fn print_outcome(outcome: &Outcome, csv: bool) {
    if csv {
        print!("{}", outcome.table.to_csv());
    } else {
        for line in &outcome.summary {
            println!("{line}");
        }
        print!("{}", outcome.table.to_text());
    }
}

fn run(cli: &Cli, cmd: &Command) -> ExitCode {
    let seed = cli.seed.unwrap_or_else(rand::random);
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let clock = Instant::now();
    let outcome = match commands::execute(cmd, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let Value::Object(mut tagged) = serde_json::to_value(cmd).expect("commands serialize") else {
        unreachable!("adjacently tagged enums serialize to objects")
    };
    let record = ExperimentRecord {
        command: cmd.name().to_string(),
        params: tagged.remove("params").unwrap_or(Value::Null),
        seed,
        started_at,
        duration_ms: clock.elapsed().as_millis() as u64,
        outputs: outcome.outputs.clone(),
        version: record::ARTIFACT_VERSION.to_string(),
    };
    print_outcome(&outcome, cli.csv);
    if let Err(e) = record::append(&cli.out, &record) {
        eprintln!("error: cannot write {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn replay(args: &ReplayArgs) -> ExitCode {
    let rec = match record::read_line(&args.file, args.line) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let tagged = serde_json::json!({ "command": rec.command, "params": rec.params });
    let cmd: Command = match serde_json::from_value(tagged) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: malformed record: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match commands::execute(&cmd, rec.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    // round-trip through text so both sides went through the same float parser
    let fresh: Value = serde_json::from_str(&outcome.outputs.to_string()).expect("valid json");
    match record::first_difference("outputs", &rec.outputs, &fresh) {
        None => {
            println!("replay ok: {} (seed {})", rec.command, rec.seed);
            ExitCode::SUCCESS
        }
        Some(field) => {
            println!("replay mismatch at {field}");
            ExitCode::from(1)
        }
    }
}
