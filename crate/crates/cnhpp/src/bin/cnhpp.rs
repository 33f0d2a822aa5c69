fn main() {
    env_logger::init();
    std::process::exit(cnhpp::cli::main_entry());
}
