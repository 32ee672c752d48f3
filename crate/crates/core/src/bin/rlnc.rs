fn main() {
    std::process::exit(rlnc_core::cli::main_with_args(std::env::args_os()));
}
