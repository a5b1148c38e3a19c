fn main() {
    std::process::exit(jamkit::cli::main_with_args(std::env::args_os()));
}
