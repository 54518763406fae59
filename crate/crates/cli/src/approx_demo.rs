use std::f64::consts::PI;
use std::io::Write;

use qdnn::approx::{exponent_specs, monomial_max_error};
use qdnn::layers::make_cosine_activation_layer;

pub const TOLERANCE: f64 = 1e-12;

pub struct Report {
    pub monomial_max_error: f64,
    pub cosine_max_error: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.monomial_max_error <= TOLERANCE && self.cosine_max_error <= TOLERANCE
    }
}

pub fn run(max_vars: usize, max_degree: usize, points: usize, out: &mut dyn Write) -> anyhow::Result<Report> {
    writeln!(out, "monomials on a {points}-point grid per variable")?;
    writeln!(out, "{:<20} {:>6} {:>12}", "exponents", "degree", "max error")?;
    let mut mono = 0.0f64;
    for k in 1..=max_vars {
        for spec in exponent_specs(k, max_degree)? {
            let err = monomial_max_error(&spec, points)?;
            mono = mono.max(err);
            writeln!(out, "{:<20} {:>6} {:>12.3e}", spec.to_string(), spec.degree(), err)?;
        }
    }
    writeln!(out, "monomial max error {mono:.3e}")?;
    writeln!(out)?;

    let width = 4;
    let layer = make_cosine_activation_layer(width)?;
    writeln!(out, "cosine activation, {width} qubits")?;
    writeln!(out, "{:>10} {:>20} {:>20} {:>12}", "x", "cos x", "layer", "error")?;
    let mut cos = 0.0f64;
    let xs: Vec<f64> = (0..=16).map(|i| -2.0 * PI + i as f64 * PI / 4.0).collect();
    for chunk in xs.chunks(width) {
        let mut x = chunk.to_vec();
        x.resize(width, 0.0);
        let y = layer.forward(&x)?;
        for (xi, yi) in chunk.iter().zip(&y) {
            let err = (xi.cos() - yi).abs();
            cos = cos.max(err);
            writeln!(out, "{xi:>10.5} {:>20.15} {yi:>20.15} {err:>12.3e}", xi.cos())?;
        }
    }
    writeln!(out, "cosine max error {cos:.3e}")?;
    let report = Report {
        monomial_max_error: mono,
        cosine_max_error: cos,
    };
    writeln!(out, "status: {}", if report.passed() { "ok" } else { "FAILED" })?;
    Ok(report)
}
