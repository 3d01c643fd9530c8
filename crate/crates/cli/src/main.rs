use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = basketsim_cli::Cli::parse();
    match basketsim_cli::run(&cli) {
        Ok(done) => {
            print!("{}", done.summary);
            for f in &done.files {
                eprintln!("wrote {}", f.display());
            }
            eprintln!("reproduce: {}", done.reproduce);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
