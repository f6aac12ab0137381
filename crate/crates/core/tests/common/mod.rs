//! Builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::NaiveDate;
use dementia_subtypes::cohort::{CdrComponents, CdrLevel, CognitiveScores, Visit};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn date(days: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + chrono::Duration::days(days)
}

/// A visit whose components all equal its global CDR.
pub fn visit(patient: &str, n: usize, day: i64, cdr: CdrLevel) -> Visit {
    Visit {
        visit_id: format!("{patient}-V{n}"),
        patient_id: patient.to_string(),
        visit_date: date(day),
        global_cdr: cdr,
        components: CdrComponents::complete([cdr; 6]),
        cognitive: CognitiveScores::default(),
        diagnoses: BTreeSet::new(),
    }
}

/// `per_centre` points around each centre with isotropic noise `sd`, and
/// the planted label of every row.
pub fn blobs<R: Rng>(
    centres: &[Vec<f64>],
    per_centre: usize,
    sd: f64,
    rng: &mut R,
) -> (Array2<f64>, Vec<usize>) {
    let d = centres[0].len();
    let noise = Normal::new(0.0, sd).unwrap();
    let mut x = Array2::zeros((centres.len() * per_centre, d));
    let mut labels = Vec::with_capacity(x.nrows());
    for (c, centre) in centres.iter().enumerate() {
        for i in 0..per_centre {
            let row = c * per_centre + i;
            for j in 0..d {
                x[[row, j]] = centre[j] + noise.sample(rng);
            }
            labels.push(c);
        }
    }
    (x, labels)
}

/// Centres on the axes of a `d`-dimensional space, `spacing` apart.
pub fn axis_centres(k: usize, d: usize, spacing: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let mut v = vec![0.0; d];
            v[c % d] = spacing * (1 + c / d) as f64;
            v
        })
        .collect()
}
