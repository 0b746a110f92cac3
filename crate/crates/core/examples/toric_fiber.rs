//! Equivariant spectra on CP1 x CP1 and the leading term of the scaled
//! fiber measure.

use toeplitz_lab::hardy_sphere::InvariantSymbol;
use toeplitz_lab::multiindex::SubtorusData;
use toeplitz_lab::spectral::{fit_expansion, TestFunction};
use toeplitz_lab::toric::{
    check_multiplicity_free, equivariant_spectrum, regular_free_check, scaled_fiber_measure, theorem2_leading,
    LeadingOptions,
};

fn main() -> toeplitz_lab::Result<()> {
    let sub = SubtorusData::cp1_cross_cp1();
    let freeness = regular_free_check(&sub)?;
    println!("freeness check: {}", if freeness.pass { "pass" } else { "fail" });
    for v in &freeness.vertices {
        println!("  vertex {:?} support {:?} minor {:?}", v.vertex, v.support, v.minor);
    }

    let symbol = InvariantSymbol::coordinate_power(4, 0, 1).plus(&InvariantSymbol::coordinate_power(4, 2, 1));
    let f = TestFunction::identity();
    let spec = equivariant_spectrum(&sub, 2, &symbol)?;
    check_multiplicity_free(&spec)?;
    println!("\nspectrum at k = 2:");
    for e in &spec.entries {
        println!("  beta {:?} -> {} = {:.6}", e.beta.entries(), e.exact, e.lambda);
    }

    let reference = theorem2_leading(&sub, &symbol, &f, &LeadingOptions::default())?;
    println!("\nleading term {:.6} +/- {:.1e} (V_alpha = {:.10})", reference.value, reference.stderr, reference.volume);
    let mut samples = Vec::new();
    for k in (8..=40).step_by(4) {
        let spec = equivariant_spectrum(&sub, k, &symbol)?;
        let s = scaled_fiber_measure(&spec, &f);
        println!("  k = {k:>2}: count {:>4}, scaled {s:.8}, ratio {:.6}", spec.entries.len(), s / reference.value);
        samples.push((k, s));
    }
    println!("fitted c0 = {:.8}", fit_expansion(&samples, 2)?.c0());
    Ok(())
}
