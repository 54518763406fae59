//! One PASS/FAIL line per acceptance criterion. Criteria 5 to 8 read the
//! MNIST IDX files from `QDNN_DATA_DIR` or `<workspace>/data/mnist`.

#[path = "../../core/tests/common/mod.rs"]
#[allow(dead_code)]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::dense;
use qdnn::data::{load_binary_mnist_dir, AngleScale, Sample};
use qdnn::grad::GradientEngine;
use qdnn::layers::make_cosine_activation_layer;
use qdnn::network::{build_mnist_network, evaluate, train, LrSchedule, TrainConfig, TrainingLog};
use qdnn_cli::gradcheck::{GradcheckOptions, ADJOINT_TOLERANCE, FD_TOLERANCE};
use qdnn_cli::settings::NetworkChoice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [1, 2, 3];
const SANITY_SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> anyhow::Result<Verdict>) -> bool {
    let start = Instant::now();
    let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e:#}")));
    let took = start.elapsed();
    let in_time = limit.map_or(true, |l| took <= l);
    let pass = v.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
    println!(
        "[{}] {id}. {name}: {}; {:.1}s{budget}",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64()
    );
    pass
}

fn data_dir() -> PathBuf {
    std::env::var_os("QDNN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn gradient_certification() -> anyhow::Result<Verdict> {
    let opts = GradcheckOptions {
        seed: 2024,
        jobs: 50,
        min_qubits: 2,
        max_qubits: 6,
        network: NetworkChoice::Mnist,
        batch: 2,
        fd_step: 1e-5,
        engine: GradientEngine::Shift,
    };
    let r = qdnn_cli::gradcheck::run(&opts, &mut std::io::sink())?;
    let net = r.network.clone().unwrap_or_default();
    Ok(verdict(
        r.passed(),
        format!(
            "jobs {} comps fd {:.1e} adj {:.1e}; network {} params fd {:.1e} adj {:.1e} (limits {FD_TOLERANCE:.0e}, {ADJOINT_TOLERANCE:.0e})",
            r.jobs.components, r.jobs.vs_fd, r.jobs.shift_vs_adjoint, net.components, net.vs_fd, net.shift_vs_adjoint
        ),
    ))
}

fn oracle_equivalence() -> anyhow::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let gates = rng.gen_range(1..=40);
        let t = common::random_template(&mut rng, n, gates);
        let x = common::random_angles(&mut rng, t.num_input_slots());
        let w = common::random_angles(&mut rng, t.num_weight_slots());
        let obs = common::random_observable(&mut rng, n);
        let got = t.run(&x, &w)?.expectation(&obs)?;
        let want = dense::expectation(&dense::final_state(&t, &x, &w), &dense::observable(n, &obs));
        worst = worst.max((got - want).abs());
    }
    Ok(verdict(worst <= 1e-10, format!("100 circuits, max deviation {worst:.1e} (limit 1e-10)")))
}

fn monomial_exactness() -> anyhow::Result<Verdict> {
    let r = qdnn_cli::approx_demo::run(3, 6, 11, &mut std::io::sink())?;
    let mut cos_worst = 0.0f64;
    let layer = make_cosine_activation_layer(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect();
        for (y, xi) in layer.forward(&x)?.iter().zip(&x) {
            cos_worst = cos_worst.max((y - xi.cos()).abs());
        }
    }
    let worst_cos = cos_worst.max(r.cosine_max_error);
    Ok(verdict(
        r.monomial_max_error <= 1e-12 && worst_cos <= 1e-12,
        format!(
            "monomials up to 3 variables and degree 6 max error {:.1e}, cosine {:.1e} (limit 1e-12)",
            r.monomial_max_error, worst_cos
        ),
    ))
}

fn architecture() -> anyhow::Result<Verdict> {
    let net = build_mnist_network();
    let counts: Vec<(usize, usize)> = net.layers().iter().map(|l| (l.weights().len(), l.bias().len())).collect();
    let mut dims = vec![net.input_dim()];
    dims.extend(net.layers().iter().map(|l| l.output_dim()));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut net = net;
    let p: Vec<f64> = (0..net.num_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
    net.set_parameters(&p)?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        let y = net.predict(&x)?;
        worst = worst.max((y.iter().sum::<f64>() - 1.0).abs());
    }
    let ok = counts == [(136, 24), (84, 12), (32, 0)] && dims == [64, 24, 12, 2] && worst <= 1e-10;
    Ok(verdict(ok, format!("params {counts:?}, dims {dims:?}, output sum deviation {worst:.1e}")))
}

struct SeedRun {
    seed: u64,
    accuracy: f64,
    final_loss: f64,
    log: TrainingLog,
}

fn full_runs(train_set: &[Sample], test_set: &[Sample]) -> anyhow::Result<Vec<SeedRun>> {
    let mut runs = Vec::new();
    for seed in SEEDS {
        let mut config = TrainConfig::mnist(seed);
        config.eval_every = 0;
        let (net, log) = train(build_mnist_network(), train_set, test_set, config)?;
        let (_, accuracy) = evaluate(&net, test_set)?;
        let final_loss = log.train_loss_at(400).ok_or_else(|| anyhow::anyhow!("no iteration 400"))?;
        runs.push(SeedRun { seed, accuracy, final_loss, log });
    }
    Ok(runs)
}

fn seed_passes(r: &SeedRun) -> bool {
    r.accuracy >= 0.98 && r.final_loss <= 0.05
}

fn reproduction(runs: &[SeedRun], test_len: usize) -> Verdict {
    let passing = runs.iter().filter(|r| seed_passes(r)).count();
    let each: Vec<String> = runs
        .iter()
        .map(|r| format!("seed {} acc {:.2}% loss {:.4}", r.seed, 100.0 * r.accuracy, r.final_loss))
        .collect();
    verdict(
        passing >= 2 && test_len == 2115,
        format!("{}/3 seeds pass on {test_len} test images ({})", passing, each.join(", ")),
    )
}

fn loss_curve(runs: &[SeedRun]) -> Verdict {
    let mut ok = true;
    let mut each = Vec::new();
    let mut any = false;
    for r in runs.iter().filter(|r| seed_passes(r)) {
        any = true;
        let first = r.log.train_loss_at(1).unwrap_or(f64::NAN);
        let ratio = r.final_loss / first;
        ok &= ratio <= 0.25;
        each.push(format!("seed {} ratio {ratio:.3}", r.seed));
    }
    verdict(ok && any, format!("loss(400)/loss(1): {} (limit 0.25)", each.join(", ")))
}

fn sanity(train_set: &[Sample], test_set: &[Sample]) -> anyhow::Result<Verdict> {
    let config = TrainConfig {
        iterations: 50,
        batch_size: 64,
        schedule: LrSchedule::two_phase(0.01, 0.001, 25)?,
        seed: SANITY_SEED,
        engine: GradientEngine::Adjoint,
        eval_every: 0,
    };
    let (net, _) = train(build_mnist_network(), train_set, test_set, config)?;
    let (_, acc) = evaluate(&net, test_set)?;
    Ok(verdict(acc >= 0.95, format!("seed {SANITY_SEED} test accuracy {:.2}% (limit 95%)", 100.0 * acc)))
}

fn determinism(data: &Path) -> anyhow::Result<Verdict> {
    let root = tempfile::tempdir()?;
    let mut outs = Vec::new();
    for threads in ["1", "4"] {
        let out = root.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_qdnn"))
            .args(["train", "--iterations", "6", "--batch", "48", "--switch-at", "3"])
            .args(["--eval-every", "3", "--checkpoint-every", "3", "--seed", "17", "--threads", threads])
            .arg("--data-dir")
            .arg(data)
            .arg("--out-dir")
            .arg(&out)
            .env_remove("QDNN_CONFIG")
            .output()?;
        anyhow::ensure!(status.status.success(), "train failed: {}", String::from_utf8_lossy(&status.stderr));
        outs.push(out);
    }
    let mut names: Vec<String> = std::fs::read_dir(&outs[0])?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        let a = std::fs::read(outs[0].join(n))?;
        let b = std::fs::read(outs[1].join(n)).unwrap_or_default();
        if a != b {
            differing.push(n.clone());
        }
    }
    let same_set = std::fs::read_dir(&outs[1])?.count() == names.len();
    Ok(verdict(
        differing.is_empty() && same_set && names.len() == 3,
        format!("threads 1 vs 4: {} files compared, {} differ", names.len(), differing.len()),
    ))
}

fn main() {
    let mut all = true;
    all &= report(1, "gradient certification", Some(Duration::from_secs(300)), gradient_certification);
    all &= report(2, "oracle equivalence", Some(Duration::from_secs(60)), oracle_equivalence);
    all &= report(3, "monomial exactness", None, monomial_exactness);
    all &= report(4, "architecture fidelity", None, architecture);

    let dir = data_dir();
    match load_binary_mnist_dir(&dir, AngleScale::DEFAULT) {
        Ok((train_set, test_set)) => {
            let mut runs = None;
            all &= report(5, "experiment reproduction", Some(Duration::from_secs(7200)), || {
                let r = full_runs(&train_set, &test_set)?;
                let v = reproduction(&r, test_set.len());
                runs = Some(r);
                Ok(v)
            });
            all &= report(7, "loss curve", None, || match &runs {
                Some(r) => Ok(loss_curve(r)),
                None => anyhow::bail!("no completed 400-iteration runs"),
            });
            all &= report(6, "fast sanity run", Some(Duration::from_secs(600)), || sanity(&train_set, &test_set));
            all &= report(8, "determinism", None, || determinism(&dir));
        }
        Err(e) => {
            let msg = format!("MNIST not readable from {} ({e}); set QDNN_DATA_DIR", dir.display());
            for (id, name) in [
                (5, "experiment reproduction"),
                (6, "fast sanity run"),
                (7, "loss curve"),
                (8, "determinism"),
            ] {
                all &= report(id, name, None, || Ok(verdict(false, msg.clone())));
            }
        }
    }
    if !all {
        std::process::exit(1);
    }
}
