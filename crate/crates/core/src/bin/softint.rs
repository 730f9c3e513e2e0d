fn main() {
    std::process::exit(softint::cli::dispatch(std::env::args_os()));
}
