/// Low-rank adapters on a set of linear projections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoraShape {
    /// `(input_dim, output_dim)` of every adapted projection, all layers.
    pub projections: Vec<(u64, u64)>,
    pub rank: u64,
}

impl LoraShape {
    /// The same projections repeated in each of `layers` layers.
    pub fn repeated(layers: usize, per_layer: &[(u64, u64)], rank: u64) -> Self {
        Self { projections: per_layer.iter().copied().cycle().take(layers * per_layer.len()).collect(), rank }
    }
}

/// `r * (d_in + d_out)` summed over adapted projections.
pub fn lora_param_count(shape: &LoraShape) -> u64 {
    shape.projections.iter().map(|(i, o)| shape.rank * (i + o)).sum()
}

pub fn lora_fraction_pct(count: u64, total_params: u64) -> f64 {
    100.0 * count as f64 / total_params as f64
}

/// Reported total size of the base vision-language model.
pub const QWEN3_VL_2B_TOTAL_PARAMS: u64 = 2_100_000_000;

/// q/k/v/o projections of every decoder layer of the 2B model's language
/// tower: 28 layers, hidden 2048, 16 query heads and 8 key/value heads of
/// width 128.
pub fn qwen3_vl_2b_text(rank: u64) -> LoraShape {
    const HIDDEN: u64 = 2048;
    const HEAD_DIM: u64 = 128;
    let q = 16 * HEAD_DIM;
    let kv = 8 * HEAD_DIM;
    LoraShape::repeated(28, &[(HIDDEN, q), (HIDDEN, kv), (HIDDEN, kv), (q, HIDDEN)], rank)
}
