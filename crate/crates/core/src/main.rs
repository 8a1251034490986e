use clap::Parser;

fn main() {
    std::process::exit(qgs::cli::run(qgs::cli::Cli::parse()));
}
