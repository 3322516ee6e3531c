fn main() {
    std::process::exit(snc::cli::main_with_args(std::env::args_os()));
}
