//! Finite-difference checks of individual layers and of the whole reduced
//! network under its training loss.

use rexfer::autodiff::*;
use rexfer::rexfernet::*;

fn randn(shape: &[usize], seed: u64) -> Tensor {
    let mut r = SeededRng::new(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.normal()).collect()).unwrap()
}

fn main() -> rexfer::Result<()> {
    let rng = &mut SeededRng::new(1);
    let mut conv = Conv1d::new(3, 4, 5, 2, Padding::Same, Some(4), rng);
    let mut deconv = ConvTranspose1d::new(3, 2, 13, 2, Padding::Same, Some(8), rng);
    let r1 = grad_check_layer(&mut conv, randn(&[2, 16, 3], 2), Mode::Eval, 3, 1e-5)?;
    let r2 = grad_check_layer(&mut deconv, randn(&[2, 8, 3], 2), Mode::Eval, 3, 1e-5)?;
    println!("sub-window conv:   {} entries, max rel error {:.2e}", r1.checked, r1.max_rel_error);
    println!("sub-window deconv: {} entries, max rel error {:.2e}", r2.checked, r2.max_rel_error);

    let refs: Vec<ReferenceStats> = (0..2).map(|i| ReferenceStats::new(1.0, 2.0, i).unwrap()).collect();
    for v in Variant::ALL {
        let mut model = Model::new(ModelConfig::reduced(v), &mut SeededRng::new(7))?;
        let mut obj = ModelObjective::new(&mut model, randn(&[2, 64, 3], 8), randn(&[2, 64], 9), refs.clone(), Mode::Train, 10);
        let r = grad_check(&mut obj, 1e-5, 5)?;
        println!("model {v}: {} entries, max rel error {:.2e}", r.checked, r.max_rel_error);
    }
    Ok(())
}
