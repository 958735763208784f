//! Screen-name classifier: does a handle look machine generated? Trains on
//! a synthetic benchmark and scores a few names.
//!
//! cargo run --release --example random_strings

use botmatch::randstring::{gen_benchmark, predict, train, TrainConfig};

fn main() -> botmatch::Result<()> {
    let (random, human) = gen_benchmark(2000, 7);
    let model = train(&random, &human, &TrainConfig::default())?;
    println!("final training loss {:.4}", model.losses.last().copied().unwrap_or(f64::NAN));
    for name in ["Xk9Qz2LmP0aR", "jenny_bakes", "TruthNews247", "a8Fh3kLq", "maple_leaf_fan"] {
        println!("{name:16} {:.3}", predict(&model, name)?);
    }
    let json = model.to_json()?;
    println!("model json is {} bytes", json.len());
    Ok(())
}
