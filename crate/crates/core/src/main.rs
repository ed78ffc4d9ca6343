use clap::Parser;
use pool_contract::cli::{run, Cli};

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let code = run(&cli, &mut stdout.lock());
    std::process::ExitCode::from(code)
}
