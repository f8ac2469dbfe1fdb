use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{SeqBatch, BOS, EOS, PAD};

/// One training example: source, machine translation and its post-edit.
/// `pe` holds the bare tokens; BOS / EOS are added when batching.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub src: Vec<usize>,
    pub mt: Vec<usize>,
    pub pe: Vec<usize>,
}

impl Triplet {
    pub fn new(src: Vec<usize>, mt: Vec<usize>, pe: Vec<usize>) -> Result<Self> {
        if src.is_empty() || mt.is_empty() || pe.is_empty() {
            return Err(Error::Input("triplet with an empty side".into()));
        }
        Ok(Self { src, mt, pe })
    }

    /// Decoder input: BOS followed by the post-edit.
    pub fn pe_input(&self) -> Vec<usize> {
        std::iter::once(BOS)
            .chain(self.pe.iter().copied())
            .collect()
    }

    /// Decoder target: the post-edit followed by EOS.
    pub fn pe_target(&self) -> Vec<usize> {
        self.pe
            .iter()
            .copied()
            .chain(std::iter::once(EOS))
            .collect()
    }
}

/// Padded id matrices for a group of triplets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub src: SeqBatch,
    pub mt: SeqBatch,
    pub pe_input: SeqBatch,
    pub pe_target: SeqBatch,
    /// Positions of the member triplets in the batched corpus.
    pub members: Vec<usize>,
    /// Non-PAD target tokens.
    pub target_tokens: usize,
}

impl Batch {
    pub fn from_triplets(triplets: &[&Triplet]) -> Result<Self> {
        let src: Vec<&[usize]> = triplets.iter().map(|t| t.src.as_slice()).collect();
        let mt: Vec<&[usize]> = triplets.iter().map(|t| t.mt.as_slice()).collect();
        let pe_in: Vec<Vec<usize>> = triplets.iter().map(|t| t.pe_input()).collect();
        let pe_out: Vec<Vec<usize>> = triplets.iter().map(|t| t.pe_target()).collect();
        let pe_target = SeqBatch::new(&pe_out)?;
        let target_tokens = pe_target.ids().iter().filter(|&&id| id != PAD).count();
        Ok(Self {
            src: SeqBatch::new(&src)?,
            mt: SeqBatch::new(&mt)?,
            pe_input: SeqBatch::new(&pe_in)?,
            pe_target,
            members: Vec::new(),
            target_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.src.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in the padded src, mt and pe matrices.
    pub fn padded_tokens(&self) -> usize {
        self.src.ids().len() + self.mt.ids().len() + self.pe_input.ids().len()
    }

    pub fn pad_tokens(&self) -> usize {
        self.src.pad_count() + self.mt.pad_count() + self.pe_input.pad_count()
    }
}

#[derive(Debug, Clone)]
pub struct Batching {
    pub batches: Vec<Batch>,
    /// Triplets that alone exceed the token budget.
    pub skipped: Vec<usize>,
}

fn footprint(rows: usize, src: usize, mt: usize, pe: usize) -> usize {
    rows * (src + mt + pe + 1)
}

/// Groups triplets into batches whose padded src + mt + pe matrices hold at
/// most `token_budget` cells.
///
/// Triplets are ordered by length so each batch holds similar shapes, then
/// the batch order is shuffled with `seed`. Ties in length are broken by a
/// seeded shuffle, so the grouping itself also varies with the seed.
pub fn make_batches(triplets: &[Triplet], token_budget: usize, seed: u64) -> Result<Batching> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| {
        let t = &triplets[i];
        (t.pe.len(), t.mt.len(), t.src.len())
    });

    let mut skipped = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let (mut ms, mut mm, mut mp) = (0, 0, 0);
    for i in order {
        let t = &triplets[i];
        if footprint(1, t.src.len(), t.mt.len(), t.pe.len()) > token_budget {
            log::warn!("triplet {i} exceeds the token budget of {token_budget}; skipped");
            skipped.push(i);
            continue;
        }
        let (ns, nm, np) = (ms.max(t.src.len()), mm.max(t.mt.len()), mp.max(t.pe.len()));
        if !current.is_empty() && footprint(current.len() + 1, ns, nm, np) > token_budget {
            groups.push(std::mem::take(&mut current));
            (ms, mm, mp) = (t.src.len(), t.mt.len(), t.pe.len());
        } else {
            (ms, mm, mp) = (ns, nm, np);
        }
        current.push(i);
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups.shuffle(&mut rng);

    let batches = groups
        .into_iter()
        .map(|members| {
            let refs: Vec<&Triplet> = members.iter().map(|&i| &triplets[i]).collect();
            let mut b = Batch::from_triplets(&refs)?;
            b.members = members;
            Ok(b)
        })
        .collect::<Result<_>>()?;
    skipped.sort_unstable();
    Ok(Batching { batches, skipped })
}
