use clap::Parser;

fn main() {
    let cli = qfim_cli::Cli::parse();
    match qfim_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
