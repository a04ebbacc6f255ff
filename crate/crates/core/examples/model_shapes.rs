//! Stage-by-stage channel and spatial schedule of the three networks, and a
//! real forward pass of a narrow structure encoder.

use inpaint_core::blocks::{assemble, ModelSpec, Role};
use inpaint_core::init;

fn main() -> inpaint_core::Result<()> {
    for role in [Role::Tsr, Role::Sfe, Role::Ftr] {
        println!("{}", role.name());
        for row in assemble(&ModelSpec::new(role).size(256))?.trace(256, 256)? {
            println!("  {:<24} {:>4} @ {}x{}", row.label, row.channels, row.h, row.w);
        }
    }
    let spec = ModelSpec::new(Role::Sfe).width(0.125).size(64);
    let net = assemble(&spec)?.build(0)?;
    let out = net.run(&init::normal(&[1, spec.in_channels, 64, 64], 1.0, &mut init::rng(1)), None)?;
    let shapes: Vec<_> = out.emitted.iter().map(|t| t.shape().to_vec()).collect();
    println!("SFE at 1/8 width emits {shapes:?}");
    Ok(())
}
