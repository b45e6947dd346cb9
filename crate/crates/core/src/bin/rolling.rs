fn main() {
    std::process::exit(rollkit::cli::main_with_args(std::env::args_os()));
}
