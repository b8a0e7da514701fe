use clap::Parser;

fn main() {
    let cli = neuromf_cli::Cli::parse();
    std::process::exit(neuromf_cli::run(&cli));
}
