fn main() {
    std::process::exit(cdroop_cli::app::run());
}
