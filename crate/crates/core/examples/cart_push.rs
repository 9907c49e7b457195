//! Pushing the cart with wrench tracking under one of the policies, then
//! writing the run log as CSV.
//!
//! `cargo run --example cart_push -- [igs|wgs|sga] [out.csv]`

use std::fs::File;
use std::io::BufWriter;

use aerial_passivity::power_valves::Policy;
use aerial_passivity::scenario::Scenario;
use aerial_passivity::simulator::{run, write_csv};

fn main() -> aerial_passivity::Result<()> {
    let mut args = std::env::args().skip(1);
    let policy: Policy = args.next().as_deref().unwrap_or("igs").parse()?;
    let scenario = Scenario::load(&format!("{policy}_push"))?;
    let out = run(&scenario)?;

    println!(
        "{:>5} {:>8} {:>8} {:>9} {:>9} {:>8} {:>6} {:>6}",
        "t", "cart m", "f_c N", "est f_x", "trk f_x", "H_t J", "alpha", "g1"
    );
    for row in out.log.iter().step_by(400) {
        println!(
            "{:5.1} {:8.4} {:8.3} {:9.3} {:9.3} {:8.3} {:6.3} {:6.3}",
            row.t,
            row.cart.position,
            row.contact_force,
            row.estimate.force().x,
            row.tracking_command.force().x,
            row.tank_energy,
            row.alpha,
            row.filtered_gains[0]
        );
    }
    println!("\n{}", out.summary.to_text());

    if let Some(path) = args.next() {
        let file = File::create(&path).map_err(|e| aerial_passivity::Error::Io {
            path: path.clone().into(),
            source: e,
        })?;
        write_csv(&out.log, BufWriter::new(file))?;
        println!("log written to {path}");
    }
    Ok(())
}
