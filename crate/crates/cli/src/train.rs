use std::io::Write;

use anyhow::Context;
use qdnn::data::load_binary_mnist_dir;
use qdnn::network::{build_network, Trainer};

use crate::checkpoint::{checkpoint_name, Checkpoint};
use crate::metrics::MetricsWriter;
use crate::settings::{usage_error, TrainSettings};

pub const METRICS_FILE: &str = "metrics.csv";

pub fn run(settings: &TrainSettings, out: &mut dyn Write) -> anyhow::Result<()> {
    let (train, test) = load_binary_mnist_dir(&settings.data_dir, settings.angle_scale)?;
    if train.is_empty() {
        anyhow::bail!("no training digits 0 or 1 in {}", settings.data_dir.display());
    }
    let net = build_network(&settings.layers).map_err(|e| usage_error(format!("layer configuration: {e}")))?;
    if net.input_dim() != qdnn::data::FEATURES || net.output_dim() != 2 {
        return Err(usage_error(format!(
            "network maps {} -> {}, data needs {} -> 2",
            net.input_dim(),
            net.output_dim(),
            qdnn::data::FEATURES
        )));
    }
    std::fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("creating {}", settings.out_dir.display()))?;
    let mut metrics = MetricsWriter::create(&settings.out_dir.join(METRICS_FILE))?;
    let mut trainer = Trainer::new(net, settings.config.clone(), train.len())?;
    let save = |t: &Trainer| -> anyhow::Result<()> {
        let ck = Checkpoint::capture(&settings.layers, settings.angle_scale, t.network(), t.optimizer(), t.step());
        ck.save(&settings.out_dir.join(checkpoint_name(t.step())))
    };
    let every = settings.checkpoint_every;
    let log = trainer.run(&train, &test, |t, row| -> anyhow::Result<()> {
        metrics.write(row)?;
        if every > 0 && row.iteration > 0 && row.iteration % every == 0 {
            save(t)?;
        }
        Ok(())
    })?;
    let last = log.last().expect("log has the initial row");
    if every == 0 || last.iteration == 0 || last.iteration % every != 0 {
        save(&trainer)?;
    }
    writeln!(
        out,
        "final test accuracy {} (loss {}) after {} iterations",
        crate::metrics::number(last.test_accuracy),
        crate::metrics::number(last.test_loss),
        last.iteration
    )?;
    writeln!(out, "checkpoint {}", settings.out_dir.join(checkpoint_name(last.iteration)).display())?;
    Ok(())
}
