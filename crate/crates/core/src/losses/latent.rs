//! Latent regularisers: closed-form KL divergence to N(0, I) and the
//! sliced Wasserstein distance to a standard-normal sample.

use crate::autodiff::{SeededRng, Tensor};
use crate::error::{Error, Result};

pub const SWD_PROJECTIONS: usize = 50;

/// Mean over rows of `0.5 * sum_d (mu^2 + exp(lv) - 1 - lv)`, with gradients
/// for `mu` and `lv`.
pub fn kld_grad(mu: &Tensor, log_var: &Tensor) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if mu.shape() != log_var.shape() {
        return Err(Error::shape("kld", mu.shape(), log_var.shape()));
    }
    let rows = mu.rows().0 as f64;
    let mut total = 0.0;
    let mut g_mu = Vec::with_capacity(mu.len());
    let mut g_lv = Vec::with_capacity(mu.len());
    for (m, lv) in mu.data().iter().zip(log_var.data()) {
        let e = lv.exp();
        total += 0.5 * (m * m + e - 1.0 - lv);
        g_mu.push(m / rows);
        g_lv.push(0.5 * (e - 1.0) / rows);
    }
    Ok((total / rows, g_mu, g_lv))
}

pub fn kld(mu: &Tensor, log_var: &Tensor) -> Result<f64> {
    Ok(kld_grad(mu, log_var)?.0)
}

/// `rows x dim` matrix of independent standard normals.
pub fn standard_normal_sample(rows: usize, dim: usize, rng: &mut SeededRng) -> Tensor {
    let data = (0..rows * dim).map(|_| rng.normal()).collect();
    Tensor::new(vec![rows, dim], data).expect("sized by construction")
}

/// `count` directions drawn uniformly on the unit sphere in `dim` dimensions.
pub fn random_directions(count: usize, dim: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        })
        .collect()
}

/// Sliced Wasserstein distance between the rows (trailing axis = latent
/// dimension) of `z` and of `reference`
/// (same count) along the given unit directions, with its gradient for `z`.
/// Each slice contributes the mean squared difference of sorted projections.
pub fn swd_with_reference(z: &Tensor, reference: &Tensor, directions: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    if z.shape() != reference.shape() {
        return Err(Error::shape("swd", z.shape(), reference.shape()));
    }
    let (rows, dim) = z.rows();
    if rows < 2 {
        return Err(Error::InvalidArgument(format!("SWD needs at least 2 samples, got {rows}")));
    }
    if directions.is_empty() || directions.iter().any(|d| d.len() != dim) {
        return Err(Error::InvalidArgument("projection directions must match the latent dimension".into()));
    }
    let project = |m: &Tensor, dir: &[f64]| -> Vec<f64> {
        m.data().chunks(dim).map(|r| r.iter().zip(dir).map(|(a, b)| a * b).sum()).collect()
    };
    let scale = 1.0 / (rows as f64 * directions.len() as f64);
    let mut total = 0.0;
    let mut grad = vec![0.0; z.len()];
    let mut order: Vec<usize> = (0..rows).collect();
    for dir in directions {
        let p = project(z, dir);
        let mut q = project(reference, dir);
        q.sort_by(f64::total_cmp);
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
        for (rank, &row) in order.iter().enumerate() {
            let d = p[row] - q[rank];
            total += d * d;
            let g = 2.0 * d * scale;
            for (gz, u) in grad[row * dim..(row + 1) * dim].iter_mut().zip(dir) {
                *gz += g * u;
            }
        }
    }
    Ok((total * scale, grad))
}

/// SWD of `z` against a fresh standard-normal sample of the same size. The
/// reference is drawn from `rng` before the directions.
pub fn swd_grad(z: &Tensor, rng: &mut SeededRng, projections: usize) -> Result<(f64, Vec<f64>)> {
    let (rows, dim) = z.rows();
    let reference = standard_normal_sample(rows, dim, rng).reshape(z.shape())?;
    let directions = random_directions(projections, dim, rng);
    swd_with_reference(z, &reference, &directions)
}

pub fn swd(z: &Tensor, rng: &mut SeededRng, projections: usize) -> Result<f64> {
    Ok(swd_grad(z, rng, projections)?.0)
}
