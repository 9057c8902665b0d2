fn main() {
    std::process::exit(algmech::cli::run(std::env::args_os()));
}
