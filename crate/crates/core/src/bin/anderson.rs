fn main() {
    std::process::exit(anderson_core::cli::main_with_args(std::env::args().collect()));
}
