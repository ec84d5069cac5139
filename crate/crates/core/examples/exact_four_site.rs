//! Exact reference dynamics of the 4-site chain model (the README example).

use excidyn::analysis::{series_from_states, Encoding};
use excidyn::exact::{evolve_exact, ExactOptions};
use excidyn::hamiltonians::{encode_frenkel_binary, four_site_chain_snapshot, HamiltonianSource};
use excidyn::sim::StateVector;

fn main() -> excidyn::Result<()> {
    let (h, _offset) = encode_frenkel_binary(&four_site_chain_snapshot())?;
    let source = HamiltonianSource::from_pauli_sum(&h);
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 2.0).collect();
    let states = evolve_exact(
        &source,
        &StateVector::zero(2),
        &grid,
        &ExactOptions::default(),
    )?;
    let series = series_from_states(grid, &states, &Encoding::Binary { n_sites: 4 })?;
    println!(
        "site-1 population at the end: {}",
        series.populations.last().unwrap()[0]
    );
    Ok(())
}
