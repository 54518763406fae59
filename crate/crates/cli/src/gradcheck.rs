use std::f64::consts::PI;
use std::io::Write;

use qdnn::data::{AngleScale, Sample};
use qdnn::grad::{
    adjoint_gradient, finite_difference_gradient, shift_gradient_all, ExpectationJob, Gradient, GradientEngine,
};
use qdnn::network::{batch_loss, batch_loss_and_grad, build_mnist_network};
use qdnn::pqc::{CircuitTemplate, GateTemplate, ParamRef};
use qdnn::simcore::{Axis, Observable, PauliString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::settings::{usage_error, NetworkChoice};

pub const FD_TOLERANCE: f64 = 1e-6;
pub const ADJOINT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub jobs: usize,
    pub min_qubits: usize,
    pub max_qubits: usize,
    pub network: NetworkChoice,
    pub batch: usize,
    pub fd_step: f64,
    pub engine: GradientEngine,
}

#[derive(Debug, Clone, Default)]
pub struct Deviations {
    pub components: usize,
    pub vs_fd: f64,
    pub shift_vs_adjoint: f64,
}

impl Deviations {
    fn passed(&self) -> bool {
        self.vs_fd <= FD_TOLERANCE && self.shift_vs_adjoint <= ADJOINT_TOLERANCE
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub jobs: Deviations,
    pub network: Option<Deviations>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.jobs.passed() && self.network.as_ref().map_or(true, Deviations::passed)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn flat(g: &Gradient) -> Vec<f64> {
    g.inputs.iter().chain(&g.weights).copied().collect()
}

fn random_axis(rng: &mut ChaCha8Rng) -> Axis {
    Axis::ALL[rng.gen_range(0..3)]
}

/// A circuit with at least one input and one weight slot; some slots drive
/// several gates.
fn random_template(rng: &mut ChaCha8Rng, n: usize) -> anyhow::Result<CircuitTemplate> {
    loop {
        let (mut n_in, mut n_w) = (0usize, 0usize);
        let mut gates = Vec::new();
        for _ in 0..rng.gen_range(6..=40) {
            if rng.gen_bool(0.25) {
                let control = rng.gen_range(0..n);
                let target = (control + rng.gen_range(1..n)) % n;
                gates.push(GateTemplate::Cnot { control, target });
                continue;
            }
            let param = match rng.gen_range(0..5) {
                0 | 1 => {
                    let s = if n_in > 0 && rng.gen_bool(0.2) { rng.gen_range(0..n_in) } else { n_in };
                    n_in = n_in.max(s + 1);
                    ParamRef::Input(s)
                }
                2 | 3 => {
                    let s = if n_w > 0 && rng.gen_bool(0.2) { rng.gen_range(0..n_w) } else { n_w };
                    n_w = n_w.max(s + 1);
                    ParamRef::Weight(s)
                }
                _ => ParamRef::Const(rng.gen_range(-PI..PI)),
            };
            gates.push(GateTemplate::Rotation {
                axis: random_axis(rng),
                qubit: rng.gen_range(0..n),
                param,
            });
        }
        if n_in > 0 && n_w > 0 {
            return Ok(CircuitTemplate::new(n, gates)?);
        }
    }
}

fn random_observable(rng: &mut ChaCha8Rng, n: usize) -> anyhow::Result<Observable> {
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut factors = Vec::new();
        for q in 0..n {
            if rng.gen_bool(0.5) {
                factors.push((q, random_axis(rng)));
            }
        }
        terms.push(PauliString::new(rng.gen_range(-1.0..1.0), factors)?);
    }
    Ok(Observable::new(terms))
}

fn check_jobs(rng: &mut ChaCha8Rng, o: &GradcheckOptions) -> anyhow::Result<Deviations> {
    let mut d = Deviations::default();
    for _ in 0..o.jobs {
        let n = rng.gen_range(o.min_qubits..=o.max_qubits);
        let t = random_template(rng, n)?;
        let x: Vec<f64> = (0..t.num_input_slots()).map(|_| rng.gen_range(-PI..PI)).collect();
        let w: Vec<f64> = (0..t.num_weight_slots()).map(|_| rng.gen_range(-PI..PI)).collect();
        let obs = random_observable(rng, n)?;
        let job = ExpectationJob::new(&t, &obs, &x, &w)?;
        let shift = flat(&shift_gradient_all(&job)?);
        let fd = flat(&finite_difference_gradient(&job, o.fd_step)?);
        let adj = flat(&adjoint_gradient(&job)?);
        d.components += shift.len();
        d.vs_fd = d.vs_fd.max(max_abs_diff(&shift, &fd));
        d.shift_vs_adjoint = d.shift_vs_adjoint.max(max_abs_diff(&shift, &adj));
    }
    Ok(d)
}

fn check_network(rng: &mut ChaCha8Rng, o: &GradcheckOptions) -> anyhow::Result<Deviations> {
    let mut net = build_mnist_network();
    let params: Vec<f64> = (0..net.num_params()).map(|_| rng.gen_range(-PI..PI)).collect();
    net.set_parameters(&params)?;
    let scale = AngleScale::DEFAULT.radians();
    let samples: Vec<Sample> = (0..o.batch)
        .map(|i| Sample {
            features: (0..net.input_dim()).map(|_| rng.gen_range(0.0..scale)).collect(),
            label: (i % 2) as u8,
        })
        .collect();
    let batch: Vec<&Sample> = samples.iter().collect();
    let (_, grad) = batch_loss_and_grad(&net, &batch, o.engine)?;
    let (_, shift) = batch_loss_and_grad(&net, &batch, GradientEngine::Shift)?;
    let (_, adj) = batch_loss_and_grad(&net, &batch, GradientEngine::Adjoint)?;
    let h = o.fd_step;
    let mut fd = Vec::with_capacity(params.len());
    let mut probe = net.clone();
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += h;
        probe.set_parameters(&p)?;
        let up = batch_loss(&probe, &batch)?;
        p[i] -= 2.0 * h;
        probe.set_parameters(&p)?;
        fd.push((up - batch_loss(&probe, &batch)?) / (2.0 * h));
    }
    Ok(Deviations {
        components: params.len(),
        vs_fd: max_abs_diff(&grad, &fd),
        shift_vs_adjoint: max_abs_diff(&shift, &adj),
    })
}

pub fn run(o: &GradcheckOptions, out: &mut dyn Write) -> anyhow::Result<GradcheckReport> {
    if o.min_qubits < 2 || o.max_qubits < o.min_qubits || o.max_qubits > 12 {
        return Err(usage_error("qubit range must satisfy 2 <= --min-qubits <= --max-qubits <= 12"));
    }
    if o.batch == 0 {
        return Err(usage_error("--batch must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    writeln!(out, "seed {}", o.seed)?;
    let jobs = check_jobs(&mut rng, o)?;
    writeln!(
        out,
        "random jobs: {} ({}-{} qubits, {} components)",
        o.jobs, o.min_qubits, o.max_qubits, jobs.components
    )?;
    writeln!(out, "  max |shift - fd|      {:.3e}", jobs.vs_fd)?;
    writeln!(out, "  max |shift - adjoint| {:.3e}", jobs.shift_vs_adjoint)?;
    let network = match o.network {
        NetworkChoice::None => None,
        NetworkChoice::Mnist => {
            let d = check_network(&mut rng, o)?;
            writeln!(
                out,
                "network: {} parameters, batch {}, engine {}",
                d.components, o.batch, o.engine
            )?;
            writeln!(out, "  max |{} - fd| {:.3e}", o.engine, d.vs_fd)?;
            writeln!(out, "  max |shift - adjoint| {:.3e}", d.shift_vs_adjoint)?;
            Some(d)
        }
    };
    let report = GradcheckReport { jobs, network };
    writeln!(
        out,
        "tolerances: fd {FD_TOLERANCE:.0e}, adjoint {ADJOINT_TOLERANCE:.0e}; status: {}",
        if report.passed() { "ok" } else { "FAILED" }
    )?;
    Ok(report)
}
