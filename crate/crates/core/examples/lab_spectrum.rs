//! Laboratory-frame spectrum per unit wavelength, its peak and the horizon markers.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium};
use rif_core::scattering::{ScatteringSettings, Scenario};
use rif_core::spectra::default_lab_spectrum;

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let sc = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let t = default_lab_spectrum(&sc)?;
    let (i, peak) = t
        .total
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let mode = t
        .columns
        .iter()
        .max_by(|a, b| a.values[i].total_cmp(&b.values[i]))
        .unwrap();
    println!("peak {peak:.4e} at {:.1} nm from {}", t.axis[i], mode.name);
    for m in &t.metadata.markers {
        println!("{:<22} {:.1} nm", m.name, m.value);
    }
    Ok(())
}
