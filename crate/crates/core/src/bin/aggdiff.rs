fn main() {
    std::process::exit(aggdiff::cli::main_with_args(std::env::args_os()));
}
