//! Writes the canonical built-in model files into `models/`.
fn main() -> std::io::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models");
    for name in transduce_core::builtin::NAMES {
        let model = transduce_core::builtin::builtin(name).expect("built-in");
        std::fs::write(
            dir.join(format!("{name}.rxm.json")),
            transduce::serialize_model(&model),
        )?;
    }
    Ok(())
}
