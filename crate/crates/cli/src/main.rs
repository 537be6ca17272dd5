use clap::Parser;

fn main() {
    let cli = bubble_cli::Cli::parse();
    std::process::exit(bubble_cli::run(&cli));
}
