fn main() {
    std::process::exit(choralforge::cli::run(std::env::args_os()));
}
