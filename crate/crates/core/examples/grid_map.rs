//! Loads a map from text and prints shortest-path distances from its start.

use ddf_curriculum::envs::GridNavEnv;

const MAP: &str = "\
S....#....
.....#....
.....#....
..........
.....#....
#.####....
.....#....
";

fn main() -> ddf_curriculum::Result<()> {
    let env = GridNavEnv::from_map(MAP, 50)?;
    let dist = env.distances_from(env.start())?;
    for y in 0..env.height() {
        let row: String = (0..env.width())
            .map(|x| match dist[y * env.width() + x] {
                Some(d) => format!("{d:>3}"),
                None => "  #".to_string(),
            })
            .collect();
        println!("{row}");
    }
    println!("{} free cells", env.free_cells().len());
    Ok(())
}
