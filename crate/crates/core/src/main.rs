fn main() {
    std::process::exit(charuco_forge::cli::run(std::env::args_os()));
}
