fn main() {
    std::process::exit(slexp::cli::cli_main(std::env::args_os()));
}
