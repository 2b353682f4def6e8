use std::process::ExitCode;

use clap::Parser;
use rfconv_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("RF_UNIFORM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match rfconv_cli::run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
