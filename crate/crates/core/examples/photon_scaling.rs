//! Photon number over 1 mm of propagation versus step height, with power-law fits.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium};
use rif_core::scattering::{ScatteringSettings, Scenario};
use rif_core::spectra::{fit_line, fit_power_law, photon_sweep, PhotonOptions};

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let base = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let dns = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 3e-2, 4e-2, 5.2e-2, 5.4e-2, 5.6e-2, 5.8e-2, 6e-2];
    let rows = photon_sweep(&base, &dns, 1000.0, &PhotonOptions::default())?;
    for r in &rows {
        println!(
            "dn = {:.4}  N = {:.4e}  horizon width = {:.4}",
            r.delta_n, r.photons.photons, r.width.horizon
        );
    }
    let pts: Vec<_> = rows.iter().map(|r| (r.delta_n, r.photons.photons)).collect();
    let growth = fit_power_law(&pts, (1e-3, 4e-2))?;
    let saturated = fit_power_law(&pts, (0.052, 0.06))?;
    println!("growth exponent {:.3} (r2 {:.5})", growth.exponent, growth.r_squared);
    println!("saturated exponent {:.3}", saturated.exponent);
    let widths: Vec<_> = rows
        .iter()
        .filter(|r| r.delta_n <= 0.05)
        .map(|r| (r.delta_n, r.width.horizon))
        .collect();
    println!("width slope {:.4} (r2 {:.5})", fit_line(&widths)?.slope, fit_line(&widths)?.r_squared);
    Ok(())
}
