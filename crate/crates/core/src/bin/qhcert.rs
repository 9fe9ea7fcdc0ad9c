fn main() {
    std::process::exit(qhcert::cli::run(std::env::args_os()));
}
