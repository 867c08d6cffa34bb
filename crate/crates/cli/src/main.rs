fn main() {
    std::process::exit(driftguard_cli::dispatch(std::env::args_os()));
}
