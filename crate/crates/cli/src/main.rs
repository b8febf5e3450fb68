use clap::Parser;

fn main() {
    std::process::exit(qbm_cli::execute(qbm_cli::Cli::parse()));
}
