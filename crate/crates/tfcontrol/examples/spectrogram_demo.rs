//! Time-frequency localization with the Gabor synthesis operator.
//!
//! Builds a control measure with two atoms at different (frequency, pulse
//! time) locations, synthesizes the field, and computes its Gabor
//! spectrogram. The printed heat map shows two well-separated blobs, one
//! per atom, and the same data is written to `out/demo_spectrogram.csv`.
//!
//! Run with: cargo run --example spectrogram_demo

use num_complex::Complex64;
use tfcontrol::{
    io, spectrogram, EnvelopeSpace, FrequencyGrid, OperatorKind, SynthesisOperator, TimeGrid,
};

fn main() -> tfcontrol::Result<()> {
    let tg = TimeGrid::new(100.0, 2048)?;
    let sigma = 6.0;
    let grid = FrequencyGrid::tensor(vec![2.0, 4.0], vec![30.0, 70.0])?;
    let op = SynthesisOperator::new(OperatorKind::GaborTf, grid, tg, EnvelopeSpace::Scalar, Some(sigma))?;

    // one pulse at (omega = 2, t = 30) and one at (omega = 4, t = 70)
    let mut u = op.zero_measure();
    for i in 0..u.grid.len() {
        let (w, pt) = u.grid.atom(i);
        if (w == 2.0 && pt == Some(30.0)) || (w == 4.0 && pt == Some(70.0)) {
            u.atoms[i].coeffs[0] = Complex64::new(1.0, 0.0);
        }
    }
    let field = op.synthesize(&u)?;

    let freqs: Vec<f64> = (0..=30).map(|i| 1.0 + 4.0 * i as f64 / 30.0).collect();
    let times: Vec<f64> = (0..=40).map(|i| 100.0 * i as f64 / 40.0).collect();
    let rows = spectrogram(&field, &tg, &freqs, &times, sigma)?;

    let peak = rows.iter().flatten().cloned().fold(0.0f64, f64::max);
    println!("Gabor spectrogram (rows: omega 5 -> 1, columns: t 0 -> 100)\n");
    for row in rows.iter().rev() {
        let line: String = row
            .iter()
            .map(|&m| match m / peak {
                x if x > 0.6 => '#',
                x if x > 0.3 => '+',
                x if x > 0.1 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{line}|");
    }

    let out = std::path::Path::new("out/demo_spectrogram.csv");
    io::write_spectrogram_csv(out, &freqs, &times, &rows)?;
    println!("\nwritten to {}", out.display());
    Ok(())
}
