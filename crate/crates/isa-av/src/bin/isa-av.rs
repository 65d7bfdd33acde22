fn main() {
    std::process::exit(isa_av::cli::run(std::env::args().skip(1).collect()));
}
