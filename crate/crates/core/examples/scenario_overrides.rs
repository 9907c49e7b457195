//! Loading a preset, applying `key=value` overrides and inspecting the
//! resulting scenario; invalid overrides are reported, not applied.

use aerial_passivity::scenario::{Scenario, PRESETS};

fn main() -> aerial_passivity::Result<()> {
    println!("bundled presets: {}", PRESETS.map(|(n, _)| n).join(", "));

    let base = Scenario::load("igs_push")?;
    let tuned = base.with_overrides(&[
        "tank.eta1=0.9",
        "valves.igs_limits=[2,1,1,30,3]",
        "sim.policy=sga",
    ])?;
    println!("\noverridden scenario:\n{}", tuned.to_toml());

    for bad in [
        "tank.lower=500",
        "tank.volume=3",
        "valves.sga_priority=[1,1,2,3,4]",
        "sim.dt",
    ] {
        match base.with_overrides(&[bad]) {
            Ok(_) => println!("{bad}: accepted"),
            Err(e) => println!("{bad}: {e}"),
        }
    }
    Ok(())
}
