//! Subluminal intervals of both media and the horizon-interval width versus step height.

use rif_core::medium::{FrontFrame, IndexStep, SellmeierMedium, Side};
use rif_core::scattering::{ScatteringSettings, Scenario};
use rif_core::spectra::sli_width;

fn main() -> rif_core::Result<()> {
    let frame = FrontFrame::new(0.66)?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10}", "dn", "minL", "maxL", "minR", "maxR", "horizon");
    for dn in [1e-3, 1e-2, 2e-2, 4e-2, 5.2e-2, 6e-2] {
        let step = IndexStep::new(SellmeierMedium::fused_silica(), dn)?;
        let sc = Scenario::new(step, frame, ScatteringSettings::default())?;
        let (l, r) = (sc.sli(Side::Left).unwrap(), sc.sli(Side::Right).unwrap());
        println!(
            "{dn:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            l.omega_min,
            l.omega_max,
            r.omega_min,
            r.omega_max,
            sli_width(&sc).horizon
        );
    }
    Ok(())
}
