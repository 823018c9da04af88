fn main() -> std::process::ExitCode {
    trapkit::cli::main()
}
