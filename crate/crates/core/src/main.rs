fn main() {
    std::process::exit(nmf_mm::cli::run(std::env::args_os()));
}
