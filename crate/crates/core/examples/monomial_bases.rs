//! Weight-space bases: monomials of fixed degree and lattice points of
//! moment-polytope fibers.

use toeplitz_lab::multiindex::{enumerate_degree, enumerate_fiber, fiber_count_growth, SubtorusData};

fn main() -> toeplitz_lab::Result<()> {
    let basis = enumerate_degree(3, 2);
    println!("degree-2 monomials in 3 variables ({}):", basis.len());
    for b in &basis {
        println!("  {:?}", b.entries());
    }

    let sub = SubtorusData::cp1_cross_cp1();
    println!("\nCP1 x CP1 fiber at k = 2:");
    for beta in enumerate_fiber(&sub, 2)? {
        println!("  {:?}", beta.entries());
    }

    let weighted = SubtorusData::new(vec![vec![1, 2]], vec![2])?;
    println!("\nweights (1, 2), alpha = 2, k = 1: {:?}", enumerate_fiber(&weighted, 1)?);

    println!("\nlattice counts, CP1 x CP1:");
    for (k, count) in fiber_count_growth(&sub, &[1, 2, 4, 8, 16, 32])? {
        println!("  k = {k:>2}  count = {count:>5}  (k+1)^2 = {}", (k + 1) * (k + 1));
    }
    Ok(())
}
