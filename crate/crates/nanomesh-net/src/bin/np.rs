fn main() {
    std::process::exit(nanomesh_net::cli::main(std::env::args_os()));
}
