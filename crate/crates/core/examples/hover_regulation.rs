//! Impedance regulation in free flight: the vehicle starts displaced and
//! yawed, and settles onto the reference pose with the tank attached.

use aerial_passivity::geometry::linear;
use aerial_passivity::interaction_controller::pose_error;
use aerial_passivity::scenario::Scenario;
use aerial_passivity::simulator::Simulation;

fn main() -> aerial_passivity::Result<()> {
    let scenario = Scenario::load("igs_push")?.with_overrides(&[
        "environment.enabled=false",
        "reference.tracking_start=1e9",
        "vehicle.position=[0.15,-0.1,1.05]",
        "vehicle.rotation_vector=[0,0,0.2]",
        "tank.initial_energy=90",
        "impedance.stiffness=[25,25,25,180,180,180]",
        "impedance.damping=[8,8,8,60,60,60]",
        "sim.duration=4",
    ])?;
    let reference = scenario.reference();
    let mut sim = Simulation::new(&scenario)?;

    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>9}",
        "t", "|e_lin| m", "|e_rot|", "|v| m/s", "H_t J"
    );
    let mut k = 0;
    while let Some(row) = sim.advance() {
        if k % 250 == 0 {
            let e = pose_error(&row.vehicle, &reference);
            println!(
                "{:5.2} {:10.5} {:10.5} {:10.5} {:9.4}",
                row.t,
                linear(&e).norm(),
                e.fixed_rows::<3>(0).norm(),
                linear(&row.vehicle.twist).norm(),
                row.tank_energy
            );
        }
        k += 1;
    }
    if let Some(t) = sim.termination() {
        println!("stopped early: {t:?}");
    }
    let e = pose_error(sim.state(), &reference);
    println!(
        "final pose error: {:.2e} m, {:.2e} rad",
        linear(&e).norm(),
        e.fixed_rows::<3>(0).norm()
    );
    Ok(())
}
