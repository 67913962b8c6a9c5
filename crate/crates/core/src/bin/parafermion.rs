use std::io::Write;

fn main() {
    let outcome = parafermion::cli::run(std::env::args_os());
    let text = serde_json::to_string_pretty(&outcome.report).expect("reports are plain JSON");
    // A closed pipe downstream is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    std::process::exit(outcome.code);
}
