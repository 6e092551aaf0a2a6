use std::io::{self, Write};

use clap::Parser;
use mwxe_cli::{run_to_exit_code, RunConfig};

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = run_to_exit_code(&config, &mut out, &mut io::stderr());
    let _ = out.flush();
    std::process::exit(code);
}
