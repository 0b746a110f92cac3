//! The model space R x T: orthonormality of the Hardy basis, the isometry
//! identities, and a negative control without the normalization constant.

use toeplitz_lab::canonical_model::{
    annihilation_residual, check_isometry, check_isometry_with, fm_eval, gram_matrix, positive_indices, ModelIndex,
    Normalization, QuadratureSpec, Stencil, DEFAULT_TOLERANCE,
};

fn main() -> toeplitz_lab::Result<()> {
    let idx = ModelIndex::new(vec![3], 1)?;
    println!("f_3(0, 0) = {}", fm_eval(&idx, &[0.0], &[0.0])?);

    let indices = positive_indices(5, 1);
    let quad = QuadratureSpec::default();
    for nodes in [8, 16, 32, 64] {
        let q = QuadratureSpec { hermite_nodes: nodes, ..quad };
        let g = gram_matrix(&indices, &q)?;
        let diag = (0..indices.len()).map(|i| (g.matrix[(i, i)].re - 1.0).abs()).fold(0.0, f64::max);
        println!("hermite nodes {nodes:>2}: max |G_mm - 1| = {diag:.2e}");
    }

    let report = check_isometry(&indices, &quad)?;
    println!("\n{}", serde_json::to_string_pretty(&report.to_json()).expect("json"));

    let broken = check_isometry_with(&indices, &quad, Normalization::Dropped, DEFAULT_TOLERANCE)?;
    println!("\nwithout normalization: pass = {}, {} entries flagged", broken.pass, broken.exceedance_count);

    for stencil in [Stencil::Central, Stencil::FivePoint] {
        let worst = indices
            .iter()
            .map(|i| annihilation_residual(i, 1e-3, stencil, 4.0, 401))
            .collect::<toeplitz_lab::Result<Vec<_>>>()?;
        let worst: Vec<String> = worst.iter().map(|r| format!("{r:.2e}")).collect();
        println!("annihilation residual ({stencil:?}) for m = 1..5: {}", worst.join(", "));
    }
    Ok(())
}
