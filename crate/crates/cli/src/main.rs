use clap::Parser;

fn main() {
    let cli = mrp_cli::Cli::parse();
    std::process::exit(mrp_cli::run(cli));
}
