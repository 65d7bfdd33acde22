//! Render the instance space as deterministic SVG scatter plots: outcome
//! colouring (safe red, unsafe blue) and feature colouring (red low, blue
//! high).
//!
//! ```bash
//! cargo run --example plot_space
//! ```

use isa_av::metadata::Outcome;
use isa_av::pilot::InstanceSpace;
use isa_av::plot::{render_svg, ColorSource};
use isa_av::rng;
use isa_av::Result;
use rand::Rng;

fn main() -> Result<()> {
    let mut rng_ = rng::stream(1, &[rng::tag("plot-example")]);
    let n = 150;
    let mut space = InstanceSpace {
        instance_ids: (0..n).map(|i| format!("sc{i:03}")).collect(),
        coords: Vec::new(),
        outcomes: Vec::new(),
    };
    let mut speeds = Vec::new();
    for _ in 0..n {
        let z1: f64 = rng_.gen_range(-2.0..2.0);
        let z2: f64 = rng_.gen_range(-2.0..2.0);
        space.coords.push([z1, z2]);
        space
            .outcomes
            .push(if z1 + z2 > 0.0 { Outcome::Unsafe } else { Outcome::Safe });
        speeds.push(10.0 + 5.0 * z1);
    }

    let dir = std::env::temp_dir().join("isa-av-plot-example");
    std::fs::create_dir_all(&dir).unwrap();

    let outcome_path = dir.join("outcome.svg");
    render_svg(&space, ColorSource::Outcome, None, &outcome_path)?;
    println!("outcome plot  -> {}", outcome_path.display());

    let speed_path = dir.join("ego_speed.svg");
    render_svg(
        &space,
        ColorSource::Feature { name: "ego_speed", values: &speeds },
        None,
        &speed_path,
    )?;
    println!("feature plot  -> {}", speed_path.display());

    let bytes = std::fs::read(&outcome_path).unwrap();
    render_svg(&space, ColorSource::Outcome, None, &outcome_path)?;
    assert_eq!(bytes, std::fs::read(&outcome_path).unwrap(), "deterministic bytes");
    println!("re-render produced identical bytes ({} bytes)", bytes.len());
    Ok(())
}
