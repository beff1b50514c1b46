fn main() {
    std::process::exit(heightlab::cli::cli_dispatch(std::env::args_os()));
}
