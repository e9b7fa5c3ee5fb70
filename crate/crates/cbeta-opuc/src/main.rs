fn main() -> std::process::ExitCode {
    cbeta_opuc::cli::run()
}
