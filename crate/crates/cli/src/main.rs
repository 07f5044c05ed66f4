use clap::Parser;

fn main() {
    let cli = gapband::Cli::parse();
    if let Err(e) = gapband::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
