fn main() {
    std::process::exit(story2pseudo::pipeline::cli::main_with(std::env::args_os()));
}
