fn main() -> std::process::ExitCode {
    scenedit::cli::main()
}
