//! Small, exact model of multimodal token fusion and action decoding.
//!
//! Features from each modality are projected into a shared width `d_llm`,
//! stacked as `[language; visual; audio; proprio; empty-action slots]`, passed
//! through a deterministic linear stand-in for the language backbone, and the
//! last `K * D` hidden rows are decoded one scalar each by a shared MLP head
//! into a `K x D` action block in `[-1, 1]`. Training uses a mean L1 loss.
//!
//! Everything is `f64` so finite-difference checks have headroom.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::spectral::{LogPowerSpectrogram, LOG_FLOOR_DB};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("{context}: expected width {expected}, got {found}")]
    DimMismatch { context: &'static str, expected: usize, found: usize },
    #[error("{context}: expected {expected} rows, got {found}")]
    ShapeMismatch { context: &'static str, expected: String, found: String },
    #[error("{context}: expected {expected:?} features, got {found:?}")]
    ModalityMismatch { context: &'static str, expected: Modality, found: Modality },
    #[error("invalid feature block: {0}")]
    InvalidBlock(String),
    #[error("invalid model dimensions: {0}")]
    InvalidDims(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Modality {
    Visual,
    Audio,
    Proprio,
    Language,
    /// Mixed-modality sequences and decoder hidden states.
    Hidden,
}

/// `rows x dim` token matrix tagged with its modality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    modality: Modality,
    data: Array2<f64>,
}

impl FeatureBlock {
    pub fn new(modality: Modality, data: Array2<f64>) -> Result<Self, FusionError> {
        if data.ncols() == 0 {
            return Err(FusionError::InvalidBlock("feature width must be positive".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FusionError::InvalidBlock("entries must be finite".into()));
        }
        Ok(Self { modality, data })
    }

    pub fn zeros(modality: Modality, rows: usize, dim: usize) -> Self {
        assert!(dim > 0, "feature width must be positive");
        Self { modality, data: Array2::zeros((rows, dim)) }
    }

    /// Seeded uniform entries in `[-scale, scale]`.
    pub fn random(modality: Modality, rows: usize, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(dim > 0, "feature width must be positive");
        Self { modality, data: uniform_matrix(rows, dim, scale, rng) }
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    fn expect_dim(&self, context: &'static str, expected: usize) -> Result<(), FusionError> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(FusionError::DimMismatch { context, expected, found: self.dim() })
        }
    }

    fn expect_modality(&self, context: &'static str, expected: Modality) -> Result<(), FusionError> {
        if self.modality == expected {
            Ok(())
        } else {
            Err(FusionError::ModalityMismatch { context, expected, found: self.modality })
        }
    }
}

fn uniform_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let dist = Uniform::new_inclusive(-scale, scale);
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// Range of the seeded parameter initialization.
pub const INIT_SCALE: f64 = 0.1;

/// Widths and token counts of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelDims {
    pub d_vis: usize,
    pub d_aud: usize,
    pub d_prop: usize,
    /// Width of the raw proprioceptive state vector.
    pub d_state: usize,
    pub d_llm: usize,
    pub n_lang: usize,
    /// Patch tokens from the third-person camera.
    pub n_third: usize,
    /// Patch tokens from the wrist camera.
    pub n_wrist: usize,
    pub n_aud: usize,
    /// Future timesteps predicted at once.
    pub k: usize,
    /// Width of one control command.
    pub d: usize,
}

/// Patch tokens per camera view.
pub const PATCHES_PER_VIEW: usize = 256;

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            d_vis: 48,
            d_aud: 32,
            d_prop: 16,
            d_state: 8,
            d_llm: 64,
            n_lang: 10,
            n_third: PATCHES_PER_VIEW,
            n_wrist: PATCHES_PER_VIEW,
            n_aud: 4,
            k: 8,
            d: 7,
        }
    }
}

impl ModelDims {
    pub fn n_vis(&self) -> usize {
        self.n_third + self.n_wrist
    }

    pub fn action_slots(&self) -> usize {
        self.k * self.d
    }

    /// `N_l + N_v + N_a + 1 + K * D`.
    pub fn sequence_len(&self) -> usize {
        self.n_lang + self.n_vis() + self.n_aud + 1 + self.action_slots()
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let fields = [
            ("d_vis", self.d_vis),
            ("d_aud", self.d_aud),
            ("d_prop", self.d_prop),
            ("d_state", self.d_state),
            ("d_llm", self.d_llm),
            ("n_lang", self.n_lang),
            ("n_aud", self.n_aud),
            ("k", self.k),
            ("d", self.d),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(FusionError::InvalidDims(format!("{name} must be positive")));
        }
        if self.n_vis() == 0 {
            return Err(FusionError::InvalidDims("at least one visual token is required".into()));
        }
        Ok(())
    }
}

/// Affine layer `y = x W + b` with `W` of shape `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn seeded(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let weight = uniform_matrix(input, output, INIT_SCALE, rng);
        let dist = Uniform::new_inclusive(-INIT_SCALE, INIT_SCALE);
        let bias = Array1::from_shape_simple_fn(output, || dist.sample(rng));
        Self { weight, bias }
    }

    pub fn identity(n: usize) -> Self {
        Self { weight: Array2::eye(n), bias: Array1::zeros(n) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weight: Array2::zeros((input, output)), bias: Array1::zeros(output) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Stack of linear layers with `tanh` between them (not after the last).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(layers: Vec<Linear>) -> Result<Self, FusionError> {
        if layers.is_empty() {
            return Err(FusionError::InvalidDims("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(FusionError::DimMismatch {
                    context: "MLP layer chaining",
                    expected: pair[0].output_dim(),
                    found: pair[1].input_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Layers with widths `widths[0] -> widths[1] -> ...`, seeded uniform.
    pub fn seeded(widths: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = widths.windows(2).map(|w| Linear::seeded(w[0], w[1], rng)).collect();
        Self::new(layers).expect("consecutive widths chain")
    }

    pub fn zeros(widths: &[usize]) -> Self {
        let layers = widths.windows(2).map(|w| Linear::zeros(w[0], w[1])).collect();
        Self::new(layers).expect("consecutive widths chain")
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let (last, hidden) = self.layers.split_last().expect("non-empty");
        let mut h = x.to_owned();
        for layer in hidden {
            h = layer.forward(h.view()).mapv(f64::tanh);
        }
        last.forward(h.view())
    }

    fn expect_depth(self, context: &'static str, depth: usize) -> Result<Self, FusionError> {
        if self.depth() == depth {
            Ok(self)
        } else {
            Err(FusionError::ShapeMismatch { context, expected: format!("{depth} layers"), found: format!("{} layers", self.depth()) })
        }
    }
}

/// Linear map from visual features to the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualProjector(pub Linear);

/// Three-layer MLP from audio features to the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioProjector(Mlp);

impl AudioProjector {
    pub fn new(mlp: Mlp) -> Result<Self, FusionError> {
        mlp.expect_depth("audio projector", 3).map(Self)
    }

    pub fn seeded(d_aud: usize, d_llm: usize, rng: &mut ChaCha8Rng) -> Self {
        Self(Mlp::seeded(&[d_aud, d_llm, d_llm, d_llm], rng))
    }
}

/// State encoder (one `tanh` layer, state -> `d_prop`) followed by a
/// two-layer projector MLP to the shared width.
#[derive(Debug, Clone, PartialEq)]
pub struct ProprioProjector {
    state: Linear,
    projector: Mlp,
}

impl ProprioProjector {
    pub fn new(state: Linear, projector: Mlp) -> Result<Self, FusionError> {
        let projector = projector.expect_depth("proprio projector", 2)?;
        if state.output_dim() != projector.input_dim() {
            return Err(FusionError::DimMismatch {
                context: "proprio projector input",
                expected: state.output_dim(),
                found: projector.input_dim(),
            });
        }
        Ok(Self { state, projector })
    }

    pub fn seeded(d_state: usize, d_prop: usize, d_llm: usize, rng: &mut ChaCha8Rng) -> Self {
        let state = Linear::seeded(d_state, d_prop, rng);
        Self { state, projector: Mlp::seeded(&[d_prop, d_llm, d_llm], rng) }
    }

    /// The `1 x d_prop` state embedding.
    pub fn embed_state(&self, state: &[f64]) -> Result<FeatureBlock, FusionError> {
        if state.len() != self.state.input_dim() {
            return Err(FusionError::DimMismatch {
                context: "proprio state",
                expected: self.state.input_dim(),
                found: state.len(),
            });
        }
        let x = ArrayView2::from_shape((1, state.len()), state).expect("row vector");
        FeatureBlock::new(Modality::Proprio, self.state.forward(x).mapv(f64::tanh))
    }
}

/// Four-layer MLP head mapping each hidden row to one action scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionHead(Mlp);

impl ActionHead {
    pub fn new(mlp: Mlp) -> Result<Self, FusionError> {
        let mlp = mlp.expect_depth("action head", 4)?;
        if mlp.output_dim() != 1 {
            return Err(FusionError::DimMismatch { context: "action head output", expected: 1, found: mlp.output_dim() });
        }
        Ok(Self(mlp))
    }

    pub fn seeded(d_llm: usize, rng: &mut ChaCha8Rng) -> Self {
        Self(Mlp::seeded(&[d_llm, d_llm, d_llm, d_llm, 1], rng))
    }

    pub fn zeros(d_llm: usize) -> Self {
        Self(Mlp::zeros(&[d_llm, d_llm, d_llm, d_llm, 1]))
    }
}

/// Learnable placeholder rows appended for the action slots.
#[derive(Debug, Clone, PartialEq)]
pub struct EmptyActionEmbeddings(pub Array2<f64>);

impl EmptyActionEmbeddings {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self(Array2::zeros((dims.action_slots(), dims.d_llm)))
    }

    pub fn seeded(dims: &ModelDims, rng: &mut ChaCha8Rng) -> Self {
        Self(uniform_matrix(dims.action_slots(), dims.d_llm, INIT_SCALE, rng))
    }
}

/// Row-wise concatenation of the two camera views, third-person first.
pub fn concat_views(third: &FeatureBlock, wrist: &FeatureBlock) -> Result<FeatureBlock, FusionError> {
    third.expect_modality("third-person view", Modality::Visual)?;
    wrist.expect_modality("wrist view", Modality::Visual)?;
    wrist.expect_dim("wrist view", third.dim())?;
    let data = concatenate(Axis(0), &[third.data.view(), wrist.data.view()]).expect("widths match");
    Ok(FeatureBlock { modality: Modality::Visual, data })
}

pub fn project_visual(features: &FeatureBlock, projector: &VisualProjector) -> Result<FeatureBlock, FusionError> {
    features.expect_modality("visual projection", Modality::Visual)?;
    features.expect_dim("visual projection", projector.0.input_dim())?;
    Ok(FeatureBlock { modality: Modality::Visual, data: projector.0.forward(features.data.view()) })
}

pub fn project_audio(features: &FeatureBlock, projector: &AudioProjector) -> Result<FeatureBlock, FusionError> {
    features.expect_modality("audio projection", Modality::Audio)?;
    features.expect_dim("audio projection", projector.0.input_dim())?;
    Ok(FeatureBlock { modality: Modality::Audio, data: projector.0.forward(features.data.view()) })
}

/// Encodes the raw state and projects it to a single `1 x d_llm` token.
pub fn project_proprio(state: &[f64], projector: &ProprioProjector) -> Result<FeatureBlock, FusionError> {
    let embedded = projector.embed_state(state)?;
    Ok(FeatureBlock { modality: Modality::Proprio, data: projector.projector.forward(embedded.data.view()) })
}

/// `[visual; audio; proprio]` along the token axis.
pub fn multimodal_tokens(
    visual: &FeatureBlock,
    audio: &FeatureBlock,
    proprio: &FeatureBlock,
) -> Result<FeatureBlock, FusionError> {
    audio.expect_dim("audio tokens", visual.dim())?;
    proprio.expect_dim("proprio token", visual.dim())?;
    if proprio.rows() != 1 {
        return Err(FusionError::ShapeMismatch {
            context: "proprio token",
            expected: "1".into(),
            found: proprio.rows().to_string(),
        });
    }
    let data = concatenate(Axis(0), &[visual.data.view(), audio.data.view(), proprio.data.view()]).expect("widths match");
    Ok(FeatureBlock { modality: Modality::Hidden, data })
}

/// `[language; modal tokens; empty-action slots]`.
pub fn assemble_sequence(
    language: &FeatureBlock,
    modal: &FeatureBlock,
    dims: &ModelDims,
    empty_actions: &EmptyActionEmbeddings,
) -> Result<FeatureBlock, FusionError> {
    language.expect_dim("language tokens", dims.d_llm)?;
    modal.expect_dim("modal tokens", dims.d_llm)?;
    let empty = &empty_actions.0;
    if empty.ncols() != dims.d_llm {
        return Err(FusionError::DimMismatch { context: "empty action embeddings", expected: dims.d_llm, found: empty.ncols() });
    }
    let checks = [
        ("language tokens", dims.n_lang, language.rows()),
        ("modal tokens", dims.n_vis() + dims.n_aud + 1, modal.rows()),
        ("empty action embeddings", dims.action_slots(), empty.nrows()),
    ];
    for (context, expected, found) in checks {
        if expected != found {
            return Err(FusionError::ShapeMismatch { context, expected: expected.to_string(), found: found.to_string() });
        }
    }
    let data = concatenate(Axis(0), &[language.data.view(), modal.data.view(), empty.view()]).expect("widths match");
    Ok(FeatureBlock { modality: Modality::Hidden, data })
}

/// Deterministic stand-in for the language backbone: one seeded
/// `d_llm x d_llm` linear map applied to every row independently.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneStub {
    weight: Option<Array2<f64>>,
}

impl BackboneStub {
    pub fn identity() -> Self {
        Self { weight: None }
    }

    /// `I + U(-0.1, 0.1)` so that decoded rows keep their scale.
    pub fn seeded(d_llm: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { weight: Some(Array2::eye(d_llm) + uniform_matrix(d_llm, d_llm, INIT_SCALE, &mut rng)) }
    }

    pub fn decode(&self, input: &FeatureBlock) -> Result<FeatureBlock, FusionError> {
        let data = match &self.weight {
            None => input.data.clone(),
            Some(w) => {
                input.expect_dim("backbone input", w.nrows())?;
                input.data.dot(w)
            }
        };
        Ok(FeatureBlock { modality: Modality::Hidden, data })
    }
}

/// The last `K * D` rows of the decoded sequence.
pub fn extract_action_hidden(decoded: &FeatureBlock, dims: &ModelDims) -> Result<FeatureBlock, FusionError> {
    let slots = dims.action_slots();
    if decoded.rows() < slots {
        return Err(FusionError::ShapeMismatch {
            context: "action hidden states",
            expected: format!("at least {slots}"),
            found: decoded.rows().to_string(),
        });
    }
    let start = decoded.rows() - slots;
    Ok(FeatureBlock { modality: Modality::Hidden, data: decoded.data.slice(s![start.., ..]).to_owned() })
}

/// `K x D` continuous actions in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBlock {
    values: Array2<f64>,
}

impl ActionBlock {
    pub fn new(values: Array2<f64>) -> Result<Self, FusionError> {
        if values.iter().any(|v| !(v.is_finite() && (-1.0..=1.0).contains(v))) {
            return Err(FusionError::InvalidBlock("actions must lie in [-1, 1]".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Action vector for future step `k`.
    pub fn step(&self, k: usize) -> Vec<f64> {
        self.values.row(k).to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// Decodes each action hidden row to a scalar with the shared head, squashes
/// with `tanh`, and reshapes row-major: entry `[k][i]` comes from row `k * D + i`.
pub fn action_head(hidden: &FeatureBlock, head: &ActionHead, dims: &ModelDims) -> Result<ActionBlock, FusionError> {
    if hidden.rows() != dims.action_slots() {
        return Err(FusionError::ShapeMismatch {
            context: "action head input",
            expected: dims.action_slots().to_string(),
            found: hidden.rows().to_string(),
        });
    }
    hidden.expect_dim("action head input", head.0.input_dim())?;
    let scalars = head.0.forward(hidden.data.view()).mapv(f64::tanh);
    let values = scalars.into_shape_with_order((dims.k, dims.d)).expect("K*D scalars");
    Ok(ActionBlock { values })
}

/// Mean L1 loss and its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Loss {
    pub loss: f64,
    /// `sign(pred - truth) / (K * D)`, with `sign(0) = 0`.
    pub grad: Array2<f64>,
}

pub fn l1_loss(pred: &ActionBlock, truth: &ActionBlock) -> Result<L1Loss, FusionError> {
    l1_loss_raw(&pred.values, &truth.values)
}

/// L1 loss on plain matrices, used where predictions leave the action range
/// (e.g. finite-difference probes).
pub fn l1_loss_raw(pred: &Array2<f64>, truth: &Array2<f64>) -> Result<L1Loss, FusionError> {
    if pred.dim() != truth.dim() {
        return Err(FusionError::ShapeMismatch {
            context: "l1 loss",
            expected: format!("{:?}", truth.dim()),
            found: format!("{:?}", pred.dim()),
        });
    }
    let n = pred.len().max(1) as f64;
    let diff = pred - truth;
    let loss = diff.iter().map(|d| d.abs()).sum::<f64>() / n;
    let grad = diff.mapv(|d| if d > 0.0 { 1.0 / n } else if d < 0.0 { -1.0 / n } else { 0.0 });
    Ok(L1Loss { loss, grad })
}

/// Embeds an instruction into `N_l x d_llm` language tokens.
pub trait LanguageEmbedder {
    fn embed(&self, instruction: &str) -> FeatureBlock;
}

/// Whitespace tokenizer with one seeded random vector per distinct token.
/// Stands in for a real tokenizer and embedding table.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub d_llm: usize,
    pub seed: u64,
}

impl LanguageEmbedder for HashEmbedder {
    fn embed(&self, instruction: &str) -> FeatureBlock {
        let rows: Vec<Array1<f64>> = instruction
            .split_whitespace()
            .map(|token| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(token.as_bytes()));
                let dist = Uniform::new_inclusive(-1.0, 1.0);
                Array1::from_shape_simple_fn(self.d_llm, || dist.sample(&mut rng))
            })
            .collect();
        let mut data = Array2::zeros((rows.len(), self.d_llm));
        for (mut dst, src) in data.rows_mut().into_iter().zip(&rows) {
            dst.assign(src);
        }
        FeatureBlock { modality: Modality::Language, data }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Stand-in audio tokenizer: one token per spectrogram frame, bins averaged
/// into `d_aud` contiguous bands and mapped from `[-180, 0]` dB to `[-1, 1]`.
pub fn audio_tokens_from_spectrogram(spec: &LogPowerSpectrogram, d_aud: usize) -> Result<FeatureBlock, FusionError> {
    if d_aud == 0 || d_aud > spec.num_bins() {
        return Err(FusionError::InvalidDims(format!("d_aud must be in 1..={}", spec.num_bins())));
    }
    let bins = spec.num_bins();
    let mut data = Array2::zeros((spec.num_frames(), d_aud));
    for (f, mut row) in data.rows_mut().into_iter().enumerate() {
        let frame = spec.frame(f);
        for (band, slot) in row.iter_mut().enumerate() {
            let (lo, hi) = (band * bins / d_aud, (band + 1) * bins / d_aud);
            let mean = frame[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            *slot = (mean / -LOG_FLOOR_DB * 2.0 + 1.0).clamp(-1.0, 1.0);
        }
    }
    FeatureBlock::new(Modality::Audio, data)
}

/// All learnable pieces of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub visual: VisualProjector,
    pub audio: AudioProjector,
    pub proprio: ProprioProjector,
    pub empty_actions: EmptyActionEmbeddings,
    pub head: ActionHead,
}

impl FusionParams {
    pub fn seeded(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            visual: VisualProjector(Linear::seeded(dims.d_vis, dims.d_llm, &mut rng)),
            audio: AudioProjector::seeded(dims.d_aud, dims.d_llm, &mut rng),
            proprio: ProprioProjector::seeded(dims.d_state, dims.d_prop, dims.d_llm, &mut rng),
            empty_actions: EmptyActionEmbeddings::seeded(dims, &mut rng),
            head: ActionHead::seeded(dims.d_llm, &mut rng),
        }
    }
}

/// Inputs of one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub language: FeatureBlock,
    pub third_view: FeatureBlock,
    pub wrist_view: FeatureBlock,
    pub audio: FeatureBlock,
    pub state: Vec<f64>,
}

impl Observation {
    /// Seeded synthetic observation with unit-range features.
    pub fn synthetic(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let language = HashEmbedder { d_llm: dims.d_llm, seed }.embed(&synthetic_instruction(dims.n_lang));
        Self {
            language,
            third_view: FeatureBlock::random(Modality::Visual, dims.n_third, dims.d_vis, 1.0, &mut rng),
            wrist_view: FeatureBlock::random(Modality::Visual, dims.n_wrist, dims.d_vis, 1.0, &mut rng),
            audio: FeatureBlock::random(Modality::Audio, dims.n_aud, dims.d_aud, 1.0, &mut rng),
            state: uniform_matrix(1, dims.d_state, 1.0, &mut rng).into_raw_vec_and_offset().0,
        }
    }
}

fn synthetic_instruction(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

/// Intermediate shapes and the decoded action block of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub sequence: FeatureBlock,
    pub decoded: FeatureBlock,
    pub actions: ActionBlock,
}

pub fn forward(
    obs: &Observation,
    params: &FusionParams,
    backbone: &BackboneStub,
    dims: &ModelDims,
) -> Result<ForwardPass, FusionError> {
    dims.validate()?;
    let visual = concat_views(&obs.third_view, &obs.wrist_view)?;
    let modal = multimodal_tokens(
        &project_visual(&visual, &params.visual)?,
        &project_audio(&obs.audio, &params.audio)?,
        &project_proprio(&obs.state, &params.proprio)?,
    )?;
    let sequence = assemble_sequence(&obs.language, &modal, dims, &params.empty_actions)?;
    let decoded = backbone.decode(&sequence)?;
    let hidden = extract_action_hidden(&decoded, dims)?;
    let actions = action_head(&hidden, &params.head, dims)?;
    Ok(ForwardPass { sequence, decoded, actions })
}

/// Agreement between the analytic loss gradient and central differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheck {
    pub step: f64,
    pub max_abs_error: f64,
    pub coordinates_checked: usize,
    pub coordinates_skipped: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Coordinates closer than this to a tie are not differentiable at the probe
/// step and are skipped.
pub const GRAD_CHECK_TIE_MARGIN: f64 = 1e-4;

pub fn check_l1_gradient(pred: &Array2<f64>, truth: &Array2<f64>, step: f64, tolerance: f64) -> Result<GradCheck, FusionError> {
    let analytic = l1_loss_raw(pred, truth)?.grad;
    let mut max_err = 0.0f64;
    let (mut checked, mut skipped) = (0, 0);
    for (idx, g) in analytic.indexed_iter() {
        if (pred[idx] - truth[idx]).abs() <= GRAD_CHECK_TIE_MARGIN {
            skipped += 1;
            continue;
        }
        let mut plus = pred.clone();
        plus[idx] += step;
        let mut minus = pred.clone();
        minus[idx] -= step;
        let numeric = (l1_loss_raw(&plus, truth)?.loss - l1_loss_raw(&minus, truth)?.loss) / (2.0 * step);
        max_err = max_err.max((numeric - g).abs());
        checked += 1;
    }
    Ok(GradCheck {
        step,
        max_abs_error: max_err,
        coordinates_checked: checked,
        coordinates_skipped: skipped,
        tolerance,
        passed: max_err <= tolerance,
    })
}

/// Report of a seeded synthetic forward pass plus loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub seed: u64,
    pub dims: ModelDims,
    pub sequence_shape: [usize; 2],
    pub expected_sequence_rows: usize,
    pub action_block: Vec<Vec<f64>>,
    pub target_block: Vec<Vec<f64>>,
    pub loss: f64,
    pub grad_check: GradCheck,
    pub audio_source: String,
}

/// Runs the full fusion path on a seeded synthetic episode. When `audio` is
/// given it replaces the synthetic audio tokens and sets `n_aud`.
pub fn run_demo(seed: u64, dims: ModelDims, audio: Option<FeatureBlock>) -> Result<DemoReport, FusionError> {
    let mut dims = dims;
    let mut obs = Observation::synthetic(&dims, seed);
    let source = match audio {
        Some(tokens) => {
            dims.n_aud = tokens.rows();
            dims.d_aud = tokens.dim();
            obs = Observation::synthetic(&dims, seed);
            obs.audio = tokens;
            "spectrogram"
        }
        None => "synthetic",
    };
    dims.validate()?;
    let params = FusionParams::seeded(&dims, seed.wrapping_add(1));
    let backbone = BackboneStub::seeded(dims.d_llm, seed.wrapping_add(2));
    let pass = forward(&obs, &params, &backbone, &dims)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let target = ActionBlock::new(uniform_matrix(dims.k, dims.d, 1.0, &mut rng))?;
    let loss = l1_loss(&pass.actions, &target)?;
    let grad_check = check_l1_gradient(pass.actions.values(), target.values(), 1e-6, 1e-6)?;

    Ok(DemoReport {
        seed,
        dims,
        sequence_shape: [pass.sequence.rows(), pass.sequence.dim()],
        expected_sequence_rows: dims.sequence_len(),
        action_block: pass.actions.to_rows(),
        target_block: target.to_rows(),
        loss: loss.loss,
        grad_check,
        audio_source: source.to_string(),
    })
}
