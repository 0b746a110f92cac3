//! Leading coefficients by two independent routes: Monte Carlo on the sphere
//! and centroid quadrature on the simplex.

use toeplitz_lab::hardy_sphere::{InvariantSymbol, SymbolPoly};
use toeplitz_lab::reduction::{c0_simplex_quad, c0_sphere_mc, calibrate_volume, sphere_sigma_volume, SphereSymbol};
use toeplitz_lab::spectral::TestFunction;

fn main() -> toeplitz_lab::Result<()> {
    for n in 2..=4 {
        let ks: Vec<u64> = (10..=100).step_by(10).collect();
        println!("n = {n}: sigma volume {:.12}, from lattice counts {:.12}", sphere_sigma_volume(n), calibrate_volume(n, &ks)?);
    }

    let f = TestFunction::power(2);
    let a1 = InvariantSymbol::coordinate_power(2, 0, 1);
    let mc = c0_sphere_mc(SphereSymbol::Invariant(&a1), &f, 2, 1 << 20, 7)?;
    let quad = c0_simplex_quad(&a1, &f, 2, 512)?;
    println!("\nF = a1, f = x^2: MC {:.6} +/- {:.1e}, quadrature {quad:.10}", mc.c0, mc.stderr);

    let hop = SymbolPoly::hopping(2, 0, 1, 1.0);
    let mc = c0_sphere_mc(SphereSymbol::Poly(&hop), &f, 2, 1 << 20, 7)?;
    // On S^3 the hopping symbol is 2 Re(z1 zbar2), whose square averages to 1/3.
    println!("hopping, f = x^2: MC {:.6} +/- {:.1e}, exact {:.6}", mc.c0, mc.stderr, 2.0 * std::f64::consts::PI / 3.0);
    Ok(())
}
