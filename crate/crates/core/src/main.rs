fn main() {
    std::process::exit(cauchy_qam::cli::run());
}
