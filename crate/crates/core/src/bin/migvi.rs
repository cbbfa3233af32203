fn main() {
    std::process::exit(migvi::runner::cli_main(std::env::args_os()));
}
