fn main() {
    if let Err(e) = tetram::cli::run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
