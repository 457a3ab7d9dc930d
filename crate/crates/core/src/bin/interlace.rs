fn main() {
    std::process::exit(interlace::cli::run(std::env::args_os()));
}
