fn main() {
    std::process::exit(shadowsig::cli::run(std::env::args_os()));
}
