use clap::Parser;
use unisim_bench::cli::{execute, exit_code, Cli};

fn main() {
    let cli = Cli::parse();
    let result = execute(cli, &mut std::io::stdout().lock());
    if let Err(e) = &result {
        eprintln!("unisim: {e}");
    }
    std::process::exit(exit_code(&result));
}
