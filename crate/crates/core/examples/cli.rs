//! Drive the command-line interface in-process, the same way the `charuco`
//! binary does.

use charuco_forge::cli::run_with_output;

fn main() {
    let dir = std::env::temp_dir().join("charuco_cli_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let board = dir.join("board.pgm");
    let board = board.to_str().unwrap();
    let mut out = Vec::new();
    let code = run_with_output(["charuco", "render-board", "--out", board], &mut out);
    println!("render-board exit {code}");
    out.clear();
    let code = run_with_output(["charuco", "detect", "--method", "classical", "--image", board], &mut out);
    println!("detect exit {code}\n{}", String::from_utf8_lossy(&out));
}
