fn main() {
    std::process::exit(ulsgan::cli::run(std::env::args_os()));
}
