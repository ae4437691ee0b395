//! KL divergence against a standard normal versus the sliced Wasserstein
//! distance to standard-normal samples, for latents that drift away from
//! the prior.

use rexfer::autodiff::{SeededRng, Tensor};
use rexfer::losses::*;

fn main() -> rexfer::Result<()> {
    let (rows, dim) = (256, 8);
    let mut rng = SeededRng::new(5);
    let noise = standard_normal_sample(rows, dim, &mut rng);
    println!("shift  scale      KLD      SWD");
    for (shift, scale) in [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (0.0, 0.5), (0.0, 2.0)] {
        let z = Tensor::new(vec![rows, dim], noise.data().iter().map(|e| shift + scale * e).collect())?;
        let mu = Tensor::full(&[rows, dim], shift);
        let log_var = Tensor::full(&[rows, dim], 2.0 * f64::ln(scale));
        let k = kld(&mu, &log_var)?;
        let s = swd(&z, &mut SeededRng::new(9), SWD_PROJECTIONS)?;
        println!("{shift:>5} {scale:>6} {k:>8.4} {s:>8.4}");
    }
    Ok(())
}
