//! Energy tank bookkeeping: filling from damping, the upper cut-off, and
//! the `α` ramp that closes the valves as the tank approaches its floor.

use aerial_passivity::energy_tank::{TankConfig, TankState};

fn main() -> aerial_passivity::Result<()> {
    let config = TankConfig::default();
    let h = 1e-3;
    let mut tank = TankState::new(config)?;
    println!(
        "tank: initial {} J, bounds [{}, {}] J, eta = ({}, {})",
        config.initial_energy, config.lower, config.upper, config.eta1, config.eta2
    );

    println!("\nfilling with d1 = 20 W, d2 = 5 W");
    for k in 1..=1000 {
        let u = tank.step(20.0, 5.0, [0.0; 3], h)?;
        tank = u.state;
        if k % 200 == 0 {
            println!(
                "  t = {:.1} s  H_t = {:7.4} J  beta = {}  admitted {:6.3} W",
                k as f64 * h,
                tank.energy(),
                tank.beta(),
                u.inflow
            );
        }
    }

    println!("\ndraining with 4 W of passivity-violating flow, scaled by alpha");
    let mut t = 0.0;
    while tank.alpha() > 1e-3 && t < 10.0 {
        let demand = 4.0 * tank.alpha();
        tank = tank.step(0.0, 0.0, [demand, 0.0, 0.0], h)?.state;
        t += h;
        if ((t / h).round() as usize).is_multiple_of(500) {
            println!(
                "  t = {t:.1} s  H_t = {:7.4} J  alpha = {:.4}",
                tank.energy(),
                tank.alpha()
            );
        }
    }
    println!(
        "  floor approached at t = {t:.2} s with H_t = {:.4} J",
        tank.energy()
    );

    match tank.step(0.0, 0.0, [500.0, 0.0, 0.0], h) {
        Err(e) => println!("\nunscaled 500 W demand at the floor: {e}"),
        Ok(u) => println!("\nunexpected: demand accepted, H_t = {}", u.state.energy()),
    }
    Ok(())
}
