fn main() {
    std::process::exit(dicholin_cli::main_with_args(std::env::args_os()));
}
