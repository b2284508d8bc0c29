use std::io::Write;

fn main() {
    let o = annot_core::cli::run(std::env::args_os());
    let _ = std::io::stdout().write_all(o.report.as_bytes());
    std::process::exit(o.code);
}
