use clap::Parser;

use kd_sampler::cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = cli.command.run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
