fn main() {
    std::process::exit(metacmi::experiments::cli_main(std::env::args_os()));
}
