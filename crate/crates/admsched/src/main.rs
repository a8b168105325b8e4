fn main() {
    std::process::exit(admsched::cli::run());
}
