fn main() {
    std::process::exit(mixlab::cli::main());
}
