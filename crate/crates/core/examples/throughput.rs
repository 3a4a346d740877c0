//! Batch pipeline throughput with the mock extractor and toy generator.

use signvox::pipeline::benchmark_throughput;
use signvox::specgen::GeneratorWeights;
use signvox::PipelineConfig;

fn main() -> signvox::Result<()> {
    let cfg = PipelineConfig::toy();
    let weights = GeneratorWeights::init(&cfg.generator, cfg.seed)?;
    let report = benchmark_throughput(5000, &weights, &cfg, 5)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
