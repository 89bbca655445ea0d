fn main() {
    std::process::exit(srf_lab::cli::run(std::env::args_os()));
}
