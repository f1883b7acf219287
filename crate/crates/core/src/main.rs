fn main() {
    std::process::exit(wickdist::cli::main());
}
