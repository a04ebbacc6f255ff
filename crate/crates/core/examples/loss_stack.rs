//! Evaluates each loss term on a toy prediction and combines them with the
//! default weights.

use inpaint_core::init;
use inpaint_core::losses::{
    adversarial_losses, feature_match, gradient_prior_loss, masked_l1, resize_mask_for_patches, total_loss,
    DiscOutput, LossParts, LossWeights, PatchResize,
};
use inpaint_core::priors::sobel_gradients;
use inpaint_core::Tensor;

fn main() -> inpaint_core::Result<()> {
    let mut rng = init::rng(3);
    let gt = init::uniform(&[1, 3, 32, 32], 0.0, 1.0, &mut rng);
    let noise = init::normal(&[1, 3, 32, 32], 0.1, &mut rng);
    let pred = gt.zip_map(&noise, "pred", |a, b| (a + b).clamp(0.0, 1.0))?;
    let mask = Tensor::from_fn4([1, 1, 32, 32], |_, _, y, x| if (5..19).contains(&y) && (9..27).contains(&x) { 1.0 } else { 0.0 });

    let nearest = resize_mask_for_patches(&mask, 8, PatchResize::Nearest)?;
    let patches = resize_mask_for_patches(&mask, 8, PatchResize::MaxPool)?;
    println!("patch-level holes: nearest {} of 16, maxpool {} of 16", nearest.sum(), patches.sum());

    let real = DiscOutput::new(init::uniform(&[1, 1, 4, 4], 0.6, 0.9, &mut rng));
    let fake = DiscOutput::new(init::uniform(&[1, 1, 4, 4], 0.2, 0.5, &mut rng));
    let (l_d, l_g) = adversarial_losses(&real, &fake, &patches)?;
    let parts = LossParts {
        l1: masked_l1(&pred, &gt, &mask)?,
        l_d,
        l_g,
        gp: 0.05,
        fm: feature_match(&[gt.clone()], &[pred.clone()])?,
        hrf: 0.02,
    };
    for (name, v) in parts.named() {
        println!("{name:>4} {v:.5}");
    }
    println!("total {:.5}", total_loss(&parts, &LossWeights::default())?);
    let edges = Tensor::from_fn4([1, 3, 32, 32], |_, _, _, x| if x == 16 { 1.0 } else { 0.0 });
    let prior = gradient_prior_loss(&sobel_gradients(&pred), &sobel_gradients(&gt), &edges)?;
    println!("gradient prior {prior:.5}");
    Ok(())
}
