fn main() {
    std::process::exit(workbench_core::cli::run(std::env::args_os()));
}
