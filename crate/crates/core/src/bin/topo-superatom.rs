fn main() {
    std::process::exit(topo_superatom::cli::main_with_args(std::env::args_os()));
}
