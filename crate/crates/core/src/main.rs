fn main() {
    std::process::exit(schatten_randomizer::cli::main_with_args(std::env::args_os()));
}
