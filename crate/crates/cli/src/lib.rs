//! Command-line front end for the `baerdec` library: matrix files, command
//! dispatch and reports.

pub mod app;
pub mod matfile;
pub mod report;
pub mod suites;

use clap::Parser;

pub use app::{Cli, EXIT_INPUT, EXIT_INTERNAL, EXIT_NEGATIVE, EXIT_OK};

/// Parses `args`, runs the command and writes its report; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match app::run(&cli) {
        Ok(out) => {
            print!("{}", out.render(cli.json));
            out.code
        }
        Err(f) => {
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({"error": f.message, "exit_code": f.code})
                );
            }
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
