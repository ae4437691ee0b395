//! Builds the electrode neighbourhood graph of the default montage.

use rexfer::eegdata::*;

fn main() -> rexfer::Result<()> {
    let montage = Montage::default_28();
    let map = build_neighbor_map(&montage, DEFAULT_NEIGHBOR_THRESHOLD)?;
    for (i, label) in map.labels.iter().enumerate() {
        let names: Vec<&str> = map.of(i).iter().map(|&j| map.labels[j].as_str()).collect();
        println!("{label:>4}: {}", names.join(" "));
    }

    // the four benchmark channels: Cz sees the other three
    let sub = montage.subset(&BENCHMARK_CHANNELS)?;
    let small = build_neighbor_map(&sub, DEFAULT_NEIGHBOR_THRESHOLD)?;
    println!("benchmark {BENCHMARK_TARGET} neighbours: {:?}", small.of_label(BENCHMARK_TARGET)?);
    Ok(())
}
