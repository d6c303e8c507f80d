//! Log-normal permeability fields for several correlation strengths, with a
//! VTK round trip of one of them.
//!
//! cargo run --release --example gaussian_field -- [cells] [seed]

use mrcmflow::fields::{load_field, save_cell_field, FieldFormat, GaussianFieldSpec, GaussianSampler};
use mrcmflow::grid::StructuredGrid2D;

fn main() -> mrcmflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(64);
    let seed = args.get(1).copied().unwrap_or(1) as u64;

    let grid = StructuredGrid2D::new(n, n, 1.0, 1.0)?;
    // The covariance factorisation is the expensive part; draw all fields from one.
    let sampler = GaussianSampler::new(grid)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "delta", "min K", "max K", "log10 c");
    for delta in [0.5, 1.5, 2.5, 4.5] {
        let k = sampler.generate(&GaussianFieldSpec::new(delta, seed))?;
        println!("{delta:>6} {:>12.4e} {:>12.4e} {:>10.2}", k.min(), k.max(), (k.max() / k.min()).log10());
    }

    let k = sampler.generate(&GaussianFieldSpec::new(2.5, seed))?;
    let path = std::env::temp_dir().join(format!("gaussian_{n}_{seed}.vtk"));
    save_cell_field(&path, &k, FieldFormat::Vtk, "permeability")?;
    let back = load_field(&path, grid)?;
    let diff = k.values.iter().zip(&back.values).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
    println!("wrote {} (round trip relative difference {diff:.1e})", path.display());
    Ok(())
}
