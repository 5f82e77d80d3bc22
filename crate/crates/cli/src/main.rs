fn main() {
    std::process::exit(evalsnr::cli::run(std::env::args_os()));
}
