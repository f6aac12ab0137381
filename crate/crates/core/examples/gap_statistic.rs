//! Gap statistic on three Gaussian blobs: the Gap curve, the
//! one-standard-error choice and the jump-ranked candidates.

use dementia_subtypes::clustering::{gap_statistic, GapSettings};
use dementia_subtypes::seed::rng_from;
use ndarray::Array2;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let centres = [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)];
    let noise = Normal::new(0.0, 0.8)?;
    let mut rng = rng_from(21);
    let mut points = Array2::zeros((centres.len() * 60, 2));
    for (i, mut row) in points.rows_mut().into_iter().enumerate() {
        let (cx, cy) = centres[i % centres.len()];
        row[0] = cx + noise.sample(&mut rng);
        row[1] = cy + noise.sample(&mut rng);
    }

    let settings = GapSettings {
        k_max: 8,
        references: 30,
        seed: 21,
        ..GapSettings::default()
    };
    let result = gap_statistic(points.view(), &settings)?;
    println!("{:>3} {:>9} {:>9} {:>9}", "k", "log W", "Gap", "s_k");
    for e in &result.entries {
        println!("{:>3} {:>9.4} {:>9.4} {:>9.4}", e.k, e.log_w, e.gap, e.s_k);
    }
    println!("one-standard-error K: {:?}", result.one_se_k);
    for c in &result.candidates {
        println!("candidate K = {} (jump {:.4})", c.k, c.jump);
    }
    Ok(())
}
