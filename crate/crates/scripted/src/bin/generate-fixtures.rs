fn main() -> anyhow::Result<()> {
    linkkg_scripted::write_all()?;
    println!("wrote {}", linkkg_scripted::fixtures_dir().display());
    Ok(())
}
