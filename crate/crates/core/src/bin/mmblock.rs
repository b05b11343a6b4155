use clap::Parser;

fn main() {
    let cli = mmblock::cli::Cli::parse();
    if let Err(e) = mmblock::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
