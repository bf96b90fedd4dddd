use openpath::pathsampler::{oracle_1d, Oracle1dConfig};
use openpath::units::{force_constant, PROTON_MASS_AMU};

fn main() {
    let t = 269.0;
    let c2 = 0.5 * force_constant(3017.6, PROTON_MASS_AMU);
    for (c3r, c4r) in [
        (-2.4f64, 3.0f64), (-2.6, 3.0), (-2.8, 3.0), (-2.9, 3.0), (-3.0, 3.0),
        (-2.872, 3.0), (-2.87, 3.0),
    ] {
        let single_well = 9.0 * c3r * c3r < 32.0 * c4r;
        let (c3, c4) = (c3r * c2, c4r * c2);
        match oracle_1d(
            |x| c2 * x * x + c3 * x * x * x + c4 * x * x * x * x,
            t,
            PROTON_MASS_AMU,
            &Oracle1dConfig::default(),
        ) {
            Ok(r) => {
                let omega = r.effective_frequency_cm1(t, PROTON_MASS_AMU).unwrap();
                println!(
                    "c3/c2 = {c3r:+.2}, c4/c2 = {c4r:.2} (single well {single_well}): omega_eff = {omega:7.1} cm^-1"
                );
            }
            Err(e) => println!("c3/c2 = {c3r:+.2}: {e}"),
        }
    }
}
