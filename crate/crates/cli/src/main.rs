fn main() {
    std::process::exit(hokdv_cli::main_with_args(std::env::args_os()));
}
