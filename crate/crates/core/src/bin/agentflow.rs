fn main() {
    std::process::exit(agentflow::cli::run(std::env::args_os()));
}
