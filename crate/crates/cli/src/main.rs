use clap::Parser;
use facilitrans_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    match run(&cli) {
        Ok(()) => log::info!("done in {:.2?}", started.elapsed()),
        Err(e) => {
            log::error!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
