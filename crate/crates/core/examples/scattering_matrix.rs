//! Scattering matrix at a black-hole frequency: pseudo-unitarity and spontaneous fluxes.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium};
use rif_core::scattering::{s_matrix, ScatteringSettings, Scenario};

fn main() -> rif_core::Result<()> {
    let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02)?;
    let sc = Scenario::new(step, FrontFrame::new(0.66)?, ScatteringSettings::default())?;
    let s = s_matrix(&sc, 0.5)?;
    println!("configuration {}", s.configuration.configuration);
    println!("in  {:?}", s.in_labels.iter().map(|l| l.to_string()).collect::<Vec<_>>());
    println!("out {:?}", s.out_labels.iter().map(|l| l.to_string()).collect::<Vec<_>>());
    println!("pseudo-unitarity residual {:.2e}", s.pseudo_unitarity_residual());
    for (label, flux) in s.out_labels.iter().zip(s.fluxes()) {
        println!("{label:>5}  I' = {flux:.6e}");
    }
    Ok(())
}
