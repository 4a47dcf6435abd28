//! Command-line front end and file formats for `chlab-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod run;
pub mod table;

use std::io::Write;

use clap::Parser;
use serde_json::json;

pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, ErrorRecord};
pub use parallel::Rayon;

/// Parse, run and write. Returns the process exit code; error records go to
/// `stderr` as one JSON object.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { error::EXIT_OK };
            let text = e.render().to_string();
            if code == error::EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let (command, opts) = cli.command.split();
    let env = std::env::var(config::MAX_NODES_ENV).ok();
    let outcome = config::merge(command, &opts, env.as_deref())
        .and_then(|c| RunConfig::from_file_config(&c))
        .and_then(|cfg| {
            let report = run::run(&cfg)?;
            emit(&cfg, &report, stdout)?;
            Ok(report)
        });
    let errors = match &outcome {
        Ok(rep) => rep.errors.clone(),
        Err(e) => vec![ErrorRecord::fatal(e)],
    };
    if !errors.is_empty() {
        let records: Vec<_> = errors.iter().map(ErrorRecord::to_json).collect();
        let _ = writeln!(stderr, "{}", json!({ "errors": records }));
    }
    match outcome {
        Ok(rep) => rep.exit_code(),
        Err(e) => e.exit_code(),
    }
}

fn emit(cfg: &RunConfig, report: &run::Report, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = run::render(cfg, report);
    match &cfg.output_path {
        Some(path) => {
            std::fs::write(path, &text)?;
            if cfg.emit_plot_script {
                std::fs::write(run::plot_script_path(path), run::plot_script(path))?;
            }
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}
