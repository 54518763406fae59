use std::io::Write;

use qdnn::data::load_binary_mnist_dir;
use qdnn::network::evaluate;

use crate::checkpoint::Checkpoint;
use crate::metrics::number;
use crate::settings::{resolve_data_dir, ConfigFile, EvalArgs, Split};

pub const HEADER: &str = "iteration,split,loss,accuracy";

/// Prints a header and one CSV row in the number format of `metrics.csv`.
pub fn run(args: &EvalArgs, file: &ConfigFile, out: &mut dyn Write) -> anyhow::Result<()> {
    let data_dir = resolve_data_dir(&args.data_dir, file)?;
    let restored = Checkpoint::load(&args.checkpoint)?.restore()?;
    let (train, test) = load_binary_mnist_dir(&data_dir, restored.angle_scale)?;
    let samples = match args.split {
        Split::Train => &train,
        Split::Test => &test,
    };
    let (loss, accuracy) = evaluate(&restored.network, samples)?;
    writeln!(out, "{HEADER}")?;
    writeln!(
        out,
        "{},{},{},{}",
        restored.step,
        args.split,
        number(Some(loss)),
        number(Some(accuracy))
    )?;
    Ok(())
}
