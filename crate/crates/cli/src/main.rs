use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = hsps_cli::Cli::parse();
    match hsps_cli::run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
