//! Runs the `sli` and `photons` commands from an inline TOML configuration.

use rif_core::cli::{execute, Command};
use rif_core::config::RunConfig;

fn main() -> rif_core::Result<()> {
    let out = std::env::temp_dir().join("rif_run_config_example");
    let text = format!(
        "[step]\ndelta_n = 0.01\n[photons]\nlength_mm = 2.0\n[output]\ndir = {:?}\n",
        out.display().to_string()
    );
    let cfg = RunConfig::from_toml_str(&text)?;
    println!("config sha256 {}", cfg.hash());
    for cmd in [Command::Sli, Command::Photons] {
        for f in execute(&cmd, &cfg)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}
