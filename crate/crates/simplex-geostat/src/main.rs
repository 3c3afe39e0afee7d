fn main() {
    std::process::exit(simplex_geostat::cli::main_entry());
}
