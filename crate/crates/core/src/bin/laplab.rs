fn main() {
    std::process::exit(laplab::cli::main());
}
