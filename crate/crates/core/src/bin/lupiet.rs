fn main() {
    std::process::exit(lupiet_core::cli::run(std::env::args_os()));
}
