fn main() {
    std::process::exit(ucb_limit::cli::main_with_args(std::env::args_os()));
}
