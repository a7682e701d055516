fn main() {
    std::process::exit(yoccoz::cli::main_with_args(std::env::args_os()));
}
