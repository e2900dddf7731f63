//! Render the default 5x5 board to a PGM and print the ground-truth corners.
//!
//! `cargo run --example render_board -- [out.pgm]`

use charuco_forge::board::{render_board, BoardSpec};
use charuco_forge::image::write_pgm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "board.pgm".into());
    let spec = BoardSpec::default_5x5();
    let (img, corners) = render_board(&spec, 40, 20)?;
    write_pgm(&img, &out)?;
    println!("wrote {out} ({}x{})", img.width(), img.height());
    for c in corners {
        println!("corner {:>2}: ({:.1}, {:.1})", c.id, c.x, c.y);
    }
    Ok(())
}
