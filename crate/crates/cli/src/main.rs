use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = nlpkit_cli::parse_and_run(&args, &mut out, &mut std::io::stderr());
    let _ = out.flush();
    std::process::exit(code);
}
