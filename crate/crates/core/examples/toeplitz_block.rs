//! Assembling Toeplitz blocks on the Hardy space of S^3 and reading off exact
//! eigenvalues of invariant symbols.

use toeplitz_lab::hardy_sphere::{assemble_block, exact_diagonal, monomial_norm, SymbolPoly};
use toeplitz_lab::multiindex::MultiIndex;
use toeplitz_lab::spectral::eigenvalues;

fn main() -> toeplitz_lab::Result<()> {
    println!("||z^mu||^2 on S^5:");
    for mu in [[0u32, 0, 0], [1, 0, 0], [2, 1, 0], [1, 1, 1]] {
        println!("  mu = {mu:?}: {}", monomial_norm(&MultiIndex::from(mu), 3));
    }

    // |z_1|^2 / |z|^2 is diagonal with eigenvalue (alpha_1 + 1)/(k + 2).
    let density = SymbolPoly::coordinate_density(2, 0);
    println!("\nexact eigenvalues of |z1|^2/|z|^2 at k = 4:");
    for (alpha, value) in exact_diagonal(&density, 4)? {
        println!("  {:?} -> {value}", alpha.entries());
    }

    // The hopping symbol couples neighbouring monomials.
    let hop = SymbolPoly::hopping(2, 0, 1, 1.0);
    let block = assemble_block(&hop, 2, 3)?;
    println!("\nhopping block at k = 3 (dim {}, hermitian defect {:e}):", block.dim(), block.hermitian_defect());
    for r in 0..block.dim() {
        let row: Vec<String> = (0..block.dim()).map(|c| format!("{:+.4}", block.matrix[(r, c)].re)).collect();
        println!("  [{}]", row.join(" "));
    }
    println!("eigenvalues: {:?}", eigenvalues(&block)?);

    let mut csv = Vec::new();
    block.write_csv(&mut csv)?;
    print!("\nnonzero entries as CSV:\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
