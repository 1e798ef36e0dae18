fn main() {
    std::process::exit(csnk_harness::cli::run(std::env::args_os()));
}
