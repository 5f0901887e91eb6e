fn main() {
    std::process::exit(qsl::cli::main());
}
