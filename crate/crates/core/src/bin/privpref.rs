fn main() {
    std::process::exit(privpref::cli::run(std::env::args_os()));
}
