//! Stage geometry and parameter budgets of the four model variants.

use rexfer::rexfernet::*;

fn main() -> rexfer::Result<()> {
    let cfg = ModelConfig::paper(Variant::D);
    println!("stage        in -> out  filters kernel sub-window  f_c (Hz)");
    for (kind, stages) in [("encoder", &cfg.encoder), ("decoder", &cfg.decoder)] {
        for s in stages {
            println!("{kind:<8} {:>6} -> {:<4} {:>7} {:>6} {:>10}  {:>8.2}", s.in_len, s.out_len, s.filters, s.kernel, s.sub_window, s.f_c());
        }
    }
    let base = count_parameters(&ModelConfig::paper(Variant::A))?.total;
    for v in Variant::ALL {
        let b = count_parameters(&ModelConfig::paper(v))?;
        println!("\n{v} ({}): {} parameters, {:.2}% fewer than A", v.description(), b.total, 100.0 * (1.0 - b.total as f64 / base as f64));
        for (name, n) in &b.blocks {
            println!("  {name:<16} {n:>8}");
        }
    }
    Ok(())
}
