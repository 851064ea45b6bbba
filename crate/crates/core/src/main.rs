fn main() {
    std::process::exit(qzkp_lab::cli::main_with_args(std::env::args_os()));
}
