use clap::Parser;

fn main() {
    let cli = synclab::cli::Cli::parse();
    std::process::exit(synclab::cli::main_with(cli));
}
