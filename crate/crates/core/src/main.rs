fn main() {
    std::process::exit(eigenloc::cli::main_with_args(std::env::args_os()));
}
