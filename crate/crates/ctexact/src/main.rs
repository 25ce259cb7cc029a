use clap::Parser;

fn main() {
    let cli = ctexact::Cli::parse();
    std::process::exit(ctexact::run_cli(&cli));
}
