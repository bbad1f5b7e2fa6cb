use clap::Parser;

fn main() {
    let cli = fogfool::cli::Cli::parse();
    if let Err(err) = fogfool::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
