fn main() {
    std::process::exit(bvfair::cli::cli_main(std::env::args_os()));
}
