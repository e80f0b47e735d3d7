fn main() {
    std::process::exit(iwasawa_params::cli::main_with_args(std::env::args_os()))
}
