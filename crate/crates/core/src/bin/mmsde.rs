fn main() {
    std::process::exit(mmsde::cli::main_with_args(std::env::args_os()));
}
