fn main() {
    std::process::exit(conformal_core::cli::run(std::env::args_os()));
}
