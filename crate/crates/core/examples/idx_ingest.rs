// Writes a tiny IDX image/label pair, reads it back and extracts a
// standardized binary task.
//
//     cargo run --example idx_ingest

use fedgen::data::{extract_binary_task, load_mnist_idx, standardize, RawImageSet};

fn run_example() -> fedgen::Result<()> {
    let dir = std::env::temp_dir().join(format!("fedgen-idx-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| fedgen::Error::Config(format!("{}: {e}", dir.display())))?;
    let (images, labels) = (dir.join("images-idx3-ubyte"), dir.join("labels-idx1-ubyte"));

    // Six 2x2 images: digits 1, 6 and 3.
    let pixels = vec![
        255, 0, 255, 0, //
        0, 255, 0, 255, //
        10, 20, 30, 40, //
        200, 10, 220, 0, //
        5, 250, 0, 240, //
        1, 2, 3, 4,
    ];
    let raw = RawImageSet::new(2, 2, pixels, vec![1, 6, 3, 1, 6, 3])?;
    raw.write_idx(&images, &labels)?;

    let back = load_mnist_idx(&images, &labels)?;
    println!("read {} images of {}x{}", back.count(), back.rows, back.cols);
    let task = extract_binary_task(&back, 1, 6)?;
    let (train, _, st) = standardize(&task, &[])?;
    for s in &train {
        println!("  y={:+} x={:?}", s.y.sign(), s.x.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    }
    println!("column means {:?}", st.mean);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() -> fedgen::Result<()> {
    run_example()
}
