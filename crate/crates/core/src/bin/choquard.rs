fn main() {
    std::process::exit(choquard::cli::run(std::env::args_os()));
}
