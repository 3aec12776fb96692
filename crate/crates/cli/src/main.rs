fn main() {
    std::process::exit(baerdec_cli::main_with_args(std::env::args_os()));
}
