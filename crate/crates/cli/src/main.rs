use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use bnmc_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match result.and(flushed.map_err(Into::into)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bnmc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
