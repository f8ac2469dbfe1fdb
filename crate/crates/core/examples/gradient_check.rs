//! Compares backprop gradients of a small multi-source model against
//! central differences on a handful of random parameter coordinates.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use ape::model::{Model, ModelConfig, SessionOptions, SourceMode};
use ape::numerics::FloatWidth;
use ape::training::{nll_loss, Batch, Triplet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(
    model: &Model<f64>,
    batch: &Batch,
    grads: bool,
) -> ape::Result<(f64, Option<Vec<ape::numerics::Tensor<f64>>>)> {
    let mut s = model.session(SessionOptions {
        grad: grads,
        ..SessionOptions::train(3)
    });
    let (logits, _) = s.forward(&batch.src, &batch.mt, &batch.pe_input)?;
    let l = nll_loss(&mut s.tape, logits, batch.pe_target.ids(), 0.1)?;
    let v = s.value(l).data()[0];
    Ok((v, if grads { Some(s.backward(l)?) } else { None }))
}

fn main() -> ape::Result<()> {
    let cfg = ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 16,
        vocab_size: 10,
        dropout: 0.1,
        max_len: 16,
        float: FloatWidth::F64,
        mode: SourceMode::Multi,
    };
    let mut model = Model::<f64>::new(cfg, 1)?;
    let a = Triplet::new(vec![4, 5, 6], vec![7, 8], vec![7, 9, 4])?;
    let b = Triplet::new(vec![9], vec![5, 6, 7], vec![5, 6])?;
    let batch = Batch::from_triplets(&[&a, &b])?;

    let (value, grads) = loss(&model, &batch, true)?;
    let grads = grads.expect("requested");
    println!("loss {value:.6}, {} parameters", model.param_count());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let h = 1e-6;
    for _ in 0..8 {
        let p = rng.random_range(0..model.params().len());
        let k = rng.random_range(0..model.params()[p].len());
        let orig = model.params()[p].data()[k];
        model.params_mut()[p].data_mut()[k] = orig + h;
        let plus = loss(&model, &batch, false)?.0;
        model.params_mut()[p].data_mut()[k] = orig - h;
        let minus = loss(&model, &batch, false)?.0;
        model.params_mut()[p].data_mut()[k] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        println!(
            "{:<24} [{k:>3}]  backprop {:+.8e}  numeric {:+.8e}",
            model.param_names()[p],
            grads[p].data()[k],
            numeric
        );
    }
    Ok(())
}
