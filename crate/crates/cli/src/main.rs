use clap::Parser;
use liblab_cli::{configure_threads, execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // usage errors are validation failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    std::process::exit(execute(&cli));
}
