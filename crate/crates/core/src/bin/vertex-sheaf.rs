fn main() {
    std::process::exit(vertex_sheaf::cli::main_entry());
}
