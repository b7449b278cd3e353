//! Round trip of a profile through the binary field format and the CSV profile.

use choquard::grid::{read_field, write_field};
use choquard::report::radial_profile_csv;
use choquard::{Field, GridSpec};

fn main() -> choquard::Result<()> {
    let grid = GridSpec::new(vec![64, 32], 4.0)?;
    let f = Field::from_fn(&grid, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp())?;
    let path = std::env::temp_dir().join("choquard_field_io.fld");
    write_field(&f, &path)?;
    let back = read_field(&path)?;
    println!(
        "dims {:?}, identical after round trip: {}",
        back.grid().dims(),
        back == f
    );
    let csv = radial_profile_csv(&f)?;
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    std::fs::remove_file(&path).map_err(|e| choquard::Error::io(&path, e))?;
    Ok(())
}
