fn main() {
    std::process::exit(cosofic::cli::run(std::env::args_os()));
}
