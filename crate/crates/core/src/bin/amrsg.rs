fn main() {
    amrsg::cli::main()
}
