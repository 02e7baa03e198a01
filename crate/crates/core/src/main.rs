use clap::Parser;

fn main() {
    let cli = hefir::cli::Cli::parse();
    if let Err(e) = hefir::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
