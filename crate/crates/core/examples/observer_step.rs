//! Momentum observer response to a 5 N step in the body-x force while the
//! vehicle holds hover thrust. The estimate follows `5·(1 − e^(−K_o·t))`.

use aerial_passivity::geometry::{Vec3, Vec6};
use aerial_passivity::rigid_body::{
    gravity_wrench, integrate, momentum, InertiaParams, RigidBodyState, Wrench,
};
use aerial_passivity::wrench_observer::ObserverState;

fn main() -> aerial_passivity::Result<()> {
    let params = InertiaParams::diagonal(4.0, Vec3::new(0.08, 0.08, 0.14))?;
    let gain = 10.0;
    let h = 1e-3;
    let mut state = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 1.0));
    let mut observer = ObserverState::new(Vec6::repeat(gain), momentum(&state, &params))?;
    let external = Wrench::from_parts(&Vec3::zeros(), &Vec3::new(5.0, 0.0, 0.0));
    let open = Vec6::repeat(1.0);

    println!(
        "{:>5} {:>10} {:>10} {:>10}",
        "t", "est f_x", "analytic", "error"
    );
    for k in 0..=1000 {
        let t = k as f64 * h;
        if k % 50 == 0 {
            let est = observer.estimate().force().x;
            let exact = 5.0 * (1.0 - (-gain * t).exp());
            println!("{t:5.2} {est:10.5} {exact:10.5} {:10.2e}", est - exact);
        }
        let hover = Wrench(-gravity_wrench(&params, &state.rotation).0);
        let next = integrate(&state, &params, &hover, &external, h)?.state;
        observer = observer.step(&state, &next, &params, &hover, &open, h).0;
        state = next;
    }
    Ok(())
}
