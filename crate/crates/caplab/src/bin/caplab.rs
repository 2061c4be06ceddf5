use caplab::reports::{run, Cli, CliError};
use clap::Parser;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv[1..]) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            if let CliError::VerifyFailed { report, .. } = &e {
                println!("{report}");
            }
            eprintln!("caplab: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
