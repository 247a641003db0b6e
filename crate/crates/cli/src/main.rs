fn main() {
    // Placeholder until subcommands land.
}
