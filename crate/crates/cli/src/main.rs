use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bicap_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match bicap_cli::run(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(bicap_cli::exit_code(&err) as u8)
        }
    }
}
