use clap::Parser;
use passgraph::cli::{exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => println!("{}", dir.display()),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            std::process::exit(exit_code(&e));
        }
    }
}
