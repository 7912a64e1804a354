fn main() {
    std::process::exit(paragodel::cli::run(std::env::args_os()));
}
