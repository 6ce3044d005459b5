use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hilbertize_cli::{run, CliError, JobSpec};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOOL_LOG", "error")).init();
    let job = JobSpec::parse();
    match run(&job).and_then(|out| write(&job, &out.text).map(|_| out)) {
        Ok(out) if out.verify_failed => {
            eprintln!("error: expectation failed verification");
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(job: &JobSpec, text: &str) -> Result<(), CliError> {
    match &job.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
