fn main() {
    glmp_cli::init_logging();
    std::process::exit(glmp_cli::main_with_args(std::env::args_os()));
}
