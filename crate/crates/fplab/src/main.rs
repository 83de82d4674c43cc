//! Thin batch-runner binary over the library: `fplab run <config>` executes
//! one experiment, `fplab plotdata <run-dir>` derives plot-ready CSVs.

use std::path::Path;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    match args.get(1).map(String::as_str) {
        Some("run") if args.len() == 3 => {
            let config = Path::new(&args[2]);
            match fplab::cli::run(config) {
                Ok(dir) => {
                    println!("ok: artifacts in {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    // partial artifacts and error.json stay in the run dir
                    eprintln!("error: {err}");
                    ExitCode::from(fplab::cli::exit_code_for(&err) as u8)
                }
            }
        }
        Some("plotdata") if args.len() == 3 => match fplab::cli::emit_plotdata(Path::new(&args[2])) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(fplab::cli::exit_code_for(&err) as u8)
            }
        },
        _ => {
            eprintln!("usage: fplab run <config>  |  fplab plotdata <run-dir>");
            ExitCode::from(2)
        }
    }
}
