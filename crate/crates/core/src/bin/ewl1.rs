fn main() {
    std::process::exit(expander_wl1::cli::dispatch(std::env::args_os()));
}
