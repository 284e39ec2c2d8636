fn main() {
    std::process::exit(magwalk::cli::main_with_args(std::env::args_os()));
}
