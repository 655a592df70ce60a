fn main() {
    std::process::exit(gnnx_service::cli::run(std::env::args_os()));
}
