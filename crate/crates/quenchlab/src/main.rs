use clap::Parser;

fn main() {
    let cli = quenchlab::cli::Cli::parse();
    std::process::exit(quenchlab::cli::run(cli));
}
