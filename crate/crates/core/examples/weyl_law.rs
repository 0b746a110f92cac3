//! Spectral measures of a Toeplitz operator on S^5 against the reduced-space
//! integral: `(2 pi / k)^{n-1} trace f(Q_k)` converges to `c_0(f)`.

use rayon::prelude::*;
use toeplitz_lab::hardy_sphere::{assemble_block, InvariantSymbol};
use toeplitz_lab::reduction::c0_simplex_quad;
use toeplitz_lab::spectral::{fit_expansion, measure_eigen, richardson_c0, scaled_measure, TestFunction};

fn main() -> toeplitz_lab::Result<()> {
    let n = 3;
    let symbol = InvariantSymbol::coordinate_power(n, 0, 2);
    let poly = symbol.to_symbol_poly().expect("polynomial symbol");
    let f = TestFunction::centered_square(0.5);

    let samples: Vec<(u64, f64)> = (10u32..=60)
        .step_by(5)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let block = assemble_block(&poly, n, k)?;
            Ok((u64::from(k), scaled_measure(measure_eigen(&block, &f)?, (n - 1) as u32, u64::from(k))))
        })
        .collect::<toeplitz_lab::Result<_>>()?;

    let reference = c0_simplex_quad(&symbol, &f, n, 256)?;
    println!("{:>4} {:>14} {:>12}", "k", "scaled mu", "ratio");
    for &(k, v) in &samples {
        println!("{k:>4} {v:>14.10} {:>12.8}", v / reference);
    }
    let fit = fit_expansion(&samples, 2)?;
    let (rich, err) = richardson_c0(&samples, 2)?;
    println!("\nfit c = {:?}", fit.coefficients);
    println!("fit residual {:e}", fit.residual);
    println!("richardson c0 = {rich:.10} (+/- {err:e})");
    println!("quadrature c0 = {reference:.10}");
    Ok(())
}
