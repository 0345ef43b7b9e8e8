fn main() {
    std::process::exit(phasewave_cli::app::main());
}
