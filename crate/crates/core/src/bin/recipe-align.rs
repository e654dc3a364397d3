fn main() -> std::process::ExitCode {
    recipe_align::cli::main()
}
