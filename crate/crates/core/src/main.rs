fn main() {
    hpa_dyn::exec::init_threads_from_env();
    std::process::exit(hpa_dyn::cli::main_with_args(std::env::args_os()));
}
