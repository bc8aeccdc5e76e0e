fn main() {
    std::process::exit(suborbit::cli::main_entry());
}
