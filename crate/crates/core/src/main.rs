fn main() {
    env_logger::init();
    std::process::exit(halfline_nls::cli::main_with_args(std::env::args_os()));
}
