//! Writes the demo workspace and its CSV into a directory (default: the
//! current one) so the CLI has something to chew on.

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| ".".to_string());
    let path = insightspec::demo::write_crime_workspace(std::path::Path::new(&dir))
        .expect("writable directory");
    println!("{}", path.display());
}
