fn main() {
    std::process::exit(jscc_cli::run());
}
