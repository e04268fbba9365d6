fn main() {
    std::process::exit(lmsnav::cli::cli_main(std::env::args_os()));
}
