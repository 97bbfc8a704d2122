//! Refractive index and group velocity of fused silica across the optical branch.

use rif_core::medium::SellmeierMedium;
use rif_core::units::omega_from_wavelength;

fn main() -> rif_core::Result<()> {
    let silica = SellmeierMedium::fused_silica();
    println!("static index {:.6}", silica.static_index());
    println!("{:>10} {:>10} {:>10}", "lambda_nm", "n", "v_g");
    for nm in [250.0, 400.0, 532.0, 800.0, 1064.0, 1550.0, 2000.0] {
        let w = omega_from_wavelength(nm * 1e-3);
        println!(
            "{nm:>10.1} {:>10.6} {:>10.6}",
            silica.refractive_index(w)?,
            silica.group_velocity(w)?
        );
    }
    Ok(())
}
