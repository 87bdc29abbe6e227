fn main() {
    std::process::exit(scbo::cli::main_with_args(std::env::args_os()));
}
