use clap::Parser;
use fingerloc_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("outputs in {}", outcome.out_dir.display());
        }
        Err(e) => {
            eprintln!("fingerloc {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
