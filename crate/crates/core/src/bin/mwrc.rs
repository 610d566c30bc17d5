fn main() {
    std::process::exit(mwrc::cli::cli_main(std::env::args_os()));
}
