fn main() {
    std::process::exit(chemotaxis::cli::cli(std::env::args_os()));
}
