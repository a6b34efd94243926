fn main() {
    std::process::exit(dimmatch::cli::run());
}
