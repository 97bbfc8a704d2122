//! Moving-frame emission spectrum of every out-mode for a 2% step.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium};
use rif_core::scattering::{ScatteringSettings, Scenario};
use rif_core::spectra::{default_moving_frame_spectrum, trapezoid, DEFAULT_COMOVING_POINTS};

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let sc = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let t = default_moving_frame_spectrum(&sc, DEFAULT_COMOVING_POINTS)?;
    println!("{} points, {} quarantined", t.len(), t.metadata.quarantine.len());
    for c in &t.columns {
        println!("{:>5}  integral = {:.6e}", c.name, trapezoid(&t.axis, &c.values));
    }
    Ok(())
}
