fn main() {
    std::process::exit(dfop::cli::main_with_args(std::env::args_os()));
}
