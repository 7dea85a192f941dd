//! Regenerates the bundled toy dataset and its feature file.
//!
//! `cargo run -p datasetlens-core --example make_toy -- data/toy`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use datasetlens_core::dataset::{write_canonical, write_feature_file};
use datasetlens_core::synthetic::toy_dataset;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/toy".into()));
    std::fs::create_dir_all(&dir)?;
    let (ds, store) = toy_dataset(2020);
    write_canonical(&ds, BufWriter::new(File::create(dir.join("dataset.jsonl"))?))?;
    write_feature_file(&store, BufWriter::new(File::create(dir.join("features.jsonl"))?))?;
    println!(
        "wrote {} images and {} instances to {}",
        ds.images().len(),
        ds.instances().len(),
        dir.display()
    );
    Ok(())
}
