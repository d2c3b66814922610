fn main() {
    std::process::exit(fda_cli::cli_main(std::env::args_os()));
}
