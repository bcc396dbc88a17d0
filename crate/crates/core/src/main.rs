fn main() {
    std::process::exit(voluma::cli::main());
}
