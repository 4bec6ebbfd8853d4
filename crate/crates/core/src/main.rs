fn main() {
    std::process::exit(compac::cli::main_with_args(std::env::args_os()));
}
