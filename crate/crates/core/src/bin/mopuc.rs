fn main() {
    std::process::exit(mopuc::cli::main_with_args(std::env::args_os()));
}
