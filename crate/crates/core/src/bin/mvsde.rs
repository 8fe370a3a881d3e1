fn main() -> std::process::ExitCode {
    mvsde::cli::main()
}
