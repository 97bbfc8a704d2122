//! Polarization vectors, conserved norm and flux normalization of propagating modes.

use rif_core::fields::{mode_vector, norm_current, scalar_product_density};
use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium, Side};
use rif_core::modes::labelled_modes;
use rif_core::scattering::{ScatteringSettings, Scenario};
use std::f64::consts::PI;

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let sc = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let side = Side::Right;
    let medium = sc.step().medium(side);
    let roots = labelled_modes(medium, 0.4, sc.frame(), side, sc.sli(side), &sc.settings().modes)?;
    let modes: Vec<_> = roots
        .iter()
        .filter(|r| r.propagating)
        .map(|r| mode_vector(medium, r, sc.frame()))
        .collect::<rif_core::Result<_>>()?;
    for m in &modes {
        let rho = scalar_product_density(m, m)?.re;
        let j = norm_current(m, m, sc.frame())?.re;
        println!(
            "{:>5}  rho = {:+.3e}  2*pi*j = {:+.12}",
            m.root.label.unwrap(),
            rho,
            2.0 * PI * j
        );
    }
    let cross = norm_current(&modes[0], &modes[1], sc.frame())?;
    println!("cross current between distinct modes: {:.2e}", cross.norm());
    Ok(())
}
