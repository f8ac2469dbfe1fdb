//! TER with its edit breakdown and BLEU, at sentence and corpus level.
//!
//! ```text
//! cargo run --example metrics
//! ```

use ape::metrics::{evaluate_pairs, sentence_bleu, ter, EvalPair};

fn main() -> ape::Result<()> {
    let pairs = [
        ("the cat sat on the mat", "the cat sat on the mat"),
        ("on the mat the cat sat", "the cat sat on the mat"),
        ("a cat sat on mat", "the cat sat on the mat"),
        ("the dog is here", "the cat sat on the mat"),
    ];
    println!(
        "{:<26} {:>6} {:>4} {:>4} {:>4} {:>4} {:>7}",
        "hypothesis", "TER", "ins", "del", "sub", "shf", "BLEU+1"
    );
    for (h, r) in pairs {
        let (h, r): (Vec<&str>, Vec<&str>) = (h.split(' ').collect(), r.split(' ').collect());
        let t = ter(&h, &r);
        println!(
            "{:<26} {:>6.3} {:>4} {:>4} {:>4} {:>4} {:>7.2}",
            h.join(" "),
            t.score,
            t.insertions,
            t.deletions,
            t.substitutions,
            t.shifts,
            sentence_bleu(&h, &r)
        );
    }
    let corpus: Vec<EvalPair> = pairs
        .iter()
        .map(|(h, r)| EvalPair::from_lines(h, r))
        .collect();
    let report = evaluate_pairs(&corpus)?;
    print!("{}", report.table());
    println!("{}", report.to_json());
    Ok(())
}
