//! The eight local modes on each side of a 2% index step at one comoving frequency.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium, Side};
use rif_core::modes::labelled_modes;
use rif_core::scattering::{ScatteringSettings, Scenario};

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let sc = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let omega_prime = 0.5;
    println!("omega' = {omega_prime}: {}", sc.configuration(omega_prime).configuration);
    for side in [Side::Left, Side::Right] {
        let roots = labelled_modes(
            sc.step().medium(side),
            omega_prime,
            sc.frame(),
            side,
            sc.sli(side),
            &sc.settings().modes,
        )?;
        for r in roots {
            let label = r.label.map(|l| l.to_string()).unwrap_or_default();
            println!(
                "{label:>5}  omega = {:+.6}{:+.6}i  k' = {:+.6}{:+.6}i  v'_g = {:?}",
                r.lab.omega.re,
                r.lab.omega.im,
                r.comoving.k.re,
                r.comoving.k.im,
                r.comoving_group_velocity
            );
        }
    }
    Ok(())
}
