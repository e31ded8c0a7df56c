fn main() {
    std::process::exit(verbum_service::cli::main_with_args(std::env::args_os()));
}
