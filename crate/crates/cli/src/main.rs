fn main() {
    std::process::exit(vwsd_cli::run(std::env::args_os()));
}
