fn main() {
    std::process::exit(wavephase::cli::main_with_args(std::env::args_os()));
}
