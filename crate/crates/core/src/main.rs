fn main() {
    std::process::exit(malearn::cli::main());
}
