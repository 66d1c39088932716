//! Regenerates the committed fixture documents: `cargo run --example write_fixtures`.

use std::path::Path;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&dir)?;
    for (name, text) in residua_cli::fixtures::committed() {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}
