fn main() {
    std::process::exit(pondguard::cli::main_exit());
}
