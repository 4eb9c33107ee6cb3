use std::process::ExitCode;

use clap::Parser;

use gamelogic::commands::{execute, Cli, Command, Run};
use gamelogic::files;
use gamelogic::serve::serve;
use gamelogic::CliError;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Command::Serve { port, static_dir } = &cli.command {
        return finish(serve(*port, static_dir.as_deref()));
    }
    let mut run = Run::new(argv, !cli.no_identity);
    let result = execute(&mut run, &cli.command);
    for line in &run.out {
        println!("{line}");
    }
    if let Err(e) = &result {
        run.report.outcome = e.to_string();
    }
    let result = match (&cli.report, result) {
        (Some(path), r) => files::write(path, &run.report.to_json()).and(r),
        (None, r) => r,
    };
    finish(result)
}

fn finish(result: Result<(), CliError>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Verification(_)) => {
            println!("FAILED: {}", e.to_string().trim_start_matches("verification failed: "));
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
