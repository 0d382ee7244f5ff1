use clap::Parser;

fn main() {
    std::process::exit(meanindex::cli::run(meanindex::cli::Cli::parse()));
}
