fn main() {
    std::process::exit(botmatch::cli::run(std::env::args_os()));
}
