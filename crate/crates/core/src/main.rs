fn main() {
    std::process::exit(cheeger_buser::cli::run_cli(std::env::args_os()));
}
