//! Prints the geometric distance bins for a few horizons.

use ddf_curriculum::ddf::BinSpec;

fn main() -> ddf_curriculum::Result<()> {
    for (horizon, bins) in [(50, 5), (50, 10), (200, 6)] {
        let spec = BinSpec::new(horizon, bins)?;
        let ranges: Vec<String> = (1..=bins)
            .map(|b| {
                let (lo, hi) = spec.range(b);
                format!("{lo}-{hi}")
            })
            .collect();
        println!("T={horizon:<4} B={bins:<3} {}", ranges.join("  "));
    }
    Ok(())
}
