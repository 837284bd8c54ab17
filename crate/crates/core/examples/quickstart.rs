//! Minimal end-to-end use of the library: sketch, fit a λ path, tune by GCV.

use nalgebra::{DMatrix, DVector};
use sketchridge_core::tuning::record_for;
use sketchridge_core::{
    build_compressed, fit_path, generate_sketch, select_lambda, Criterion, Dataset, Method,
    PathOptions, SketchSpec,
};

fn main() -> sketchridge_core::Result<()> {
    // Toy design: 500 rows, 8 predictors.
    let x = DMatrix::from_fn(500, 8, |i, j| ((i * 31 + j * 7) % 13) as f64 - 6.0);
    let y = &x * DVector::from_element(8, 0.5);
    let data = Dataset::new(x, y)?;

    // Compress to 60 rows with a sparse sketch (s = 3, seed 42).
    let sketch = generate_sketch(&SketchSpec::new(data.n(), 60, 3.0, 42)?)?;
    let cd = build_compressed(&data, &sketch)?;

    // Fit the full λ path and select by GCV for the fully compressed fit.
    let grid = [0.1, 1.0, 10.0, 100.0];
    let path = fit_path(&cd, &data, &grid, &PathOptions { with_ridge: true })?;
    let records = path
        .iter()
        .map(|f| record_for(f, Method::Fc, data.n(), None))
        .collect::<sketchridge_core::Result<Vec<_>>>()?;
    let (best, _) = select_lambda(&records, Criterion::Gcv)?;
    println!("fully compressed fit selects λ = {best}");
    Ok(())
}
