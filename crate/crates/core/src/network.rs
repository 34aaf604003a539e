//! Fault-free forward pass of a fully connected network mapped onto the
//! array.
//!
//! Matrix and vector indices in this module are 0-based: weight `(i, j)`
//! connects input neuron `i` to output neuron `j`, and output neuron `j`
//! is computed by array column `j + 1`.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::{mask, relu, BitWidths, QuantizationStrategy, Word};

/// Geometry of the array and shape of the network it runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkConfig {
    /// Array rows `R`.
    pub rows: usize,
    /// Array columns `C`.
    pub cols: usize,
    /// Layer count `L`.
    pub layers: usize,
    /// Neurons per layer `N`.
    pub neurons: usize,
    pub widths: BitWidths,
    pub quantization: QuantizationStrategy,
    /// Read accumulators as two's complement at the activation function.
    pub signed: bool,
}

impl Default for NetworkConfig {
    /// A 4x4 array running one 4-neuron layer at the default widths.
    fn default() -> Self {
        NetworkConfig {
            rows: 4,
            cols: 4,
            layers: 1,
            neurons: 4,
            widths: BitWidths::default(),
            quantization: QuantizationStrategy::KeepHigh,
            signed: false,
        }
    }
}

impl NetworkConfig {
    pub fn new(rows: usize, cols: usize, layers: usize, neurons: usize) -> Result<Self> {
        let cfg = NetworkConfig {
            rows,
            cols,
            layers,
            neurons,
            ..NetworkConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_widths(mut self, widths: BitWidths) -> Self {
        self.widths = widths;
        self
    }

    pub fn with_quantization(mut self, quantization: QuantizationStrategy) -> Self {
        self.quantization = quantization;
        self
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn with_signed(mut self, signed: bool) -> Self {
        self.signed = signed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.widths.validate()?;
        if self.rows == 0 {
            return Err(Error::out_of_range("rows", 0, ">= 1"));
        }
        if self.cols == 0 {
            return Err(Error::out_of_range("cols", 0, ">= 1"));
        }
        if self.layers == 0 {
            return Err(Error::out_of_range("layers", 0, ">= 1"));
        }
        let limit = self.rows.min(self.cols);
        if self.neurons == 0 || self.neurons > limit {
            return Err(Error::out_of_range(
                "neurons",
                self.neurons as i64,
                format!("1..={limit} (must fit in rows and columns)"),
            ));
        }
        Ok(())
    }

    /// Activation function followed by quantization on a raw accumulator
    /// value.
    #[inline]
    pub fn activate(&self, acc: u32) -> u32 {
        let w = self.widths;
        let acc = relu(Word::wrapping(acc as i64, w.accumulator), self.signed).value();
        self.quantization.apply(acc, w.accumulator, w.activation)
    }
}

/// The `N x N` weight matrix shared by every layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightMatrix {
    n: usize,
    width: u8,
    values: Vec<u32>,
}

impl WeightMatrix {
    pub fn from_rows(rows: &[Vec<u64>], weight_bits: u8) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Config("weight matrix is empty".into()));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "weight row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for &v in row {
                values.push(Word::new(v, weight_bits)?.value());
            }
        }
        Ok(WeightMatrix {
            n,
            width: weight_bits,
            values,
        })
    }

    /// Builds a matrix from row-major raw values without range checks on
    /// the caller side; values are validated here.
    pub fn from_row_major(n: usize, values: Vec<u32>, weight_bits: u8) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::Config(format!(
                "expected {} weights for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|&&v| v as u64 > mask(weight_bits)) {
            return Err(Error::out_of_range(
                "weight",
                bad as i64,
                format!("0..={}", mask(weight_bits)),
            ));
        }
        Ok(WeightMatrix {
            n,
            width: weight_bits,
            values,
        })
    }

    /// Parses the plain-text format: `N` lines of `N` whitespace separated
    /// non-negative integers. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, weight_bits: u8, source_name: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let row = body
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|_| Error::Parse {
                        source_name: source_name.to_string(),
                        line: idx + 1,
                        message: format!("{tok:?} is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            lines.push(idx + 1);
        }
        let n = rows.len();
        for (row, &line) in rows.iter().zip(&lines) {
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line,
                message,
            };
            if row.len() != n {
                return Err(parse_err(format!("expected {n} weights, found {}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&v| v > mask(weight_bits)) {
                return Err(parse_err(format!(
                    "weight {bad} does not fit in {weight_bits} bits"
                )));
            }
        }
        Self::from_rows(&rows, weight_bits)
    }

    pub fn load(path: &Path, weight_bits: u8) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, weight_bits, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn width(&self) -> u8 {
        self.width
    }

    /// Weight `w_{i,j}` (0-based).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.n + j]
    }

    pub fn word(&self, i: usize, j: usize) -> Word {
        Word::wrapping(self.get(i, j) as i64, self.width)
    }

    /// Copy with entry `(i, j)` replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: u32) -> Self {
        let mut out = self.clone();
        out.values[i * self.n + j] = value & mask(self.width) as u32;
        out
    }

    /// Relabels neurons: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let values = (0..n * n)
            .map(|k| self.get(perm[k / n], perm[k % n]))
            .collect();
        WeightMatrix {
            n,
            width: self.width,
            values,
        }
    }

    pub fn row_major(&self) -> &[u32] {
        &self.values
    }
}

impl fmt::Display for WeightMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Activations `x_1(l) .. x_N(l)` entering a layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationVector(Vec<u32>);

impl ActivationVector {
    pub fn new(values: Vec<u32>, activation_bits: u8) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v as u64 > mask(activation_bits)) {
            return Err(Error::out_of_range(
                "activation",
                bad as i64,
                format!("0..={}", mask(activation_bits)),
            ));
        }
        Ok(ActivationVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        ActivationVector(vec![0; n])
    }

    /// The `index`-th vector in lexicographic order over `levels^n`
    /// vectors, first neuron most significant.
    pub fn from_index(mut index: u64, n: usize, levels: u64) -> Self {
        let mut values = vec![0u32; n];
        for slot in values.iter_mut().rev() {
            *slot = (index % levels) as u32;
            index /= levels;
        }
        ActivationVector(values)
    }

    /// Inverse of [`ActivationVector::from_index`].
    pub fn index(&self, levels: u64) -> u64 {
        self.0.iter().fold(0, |acc, &v| acc * levels + v as u64)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub(crate) fn from_raw(values: Vec<u32>) -> Self {
        ActivationVector(values)
    }
}

impl fmt::Display for ActivationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `y = x * w mod 2^multiplier_bits`.
#[inline]
pub fn mac_product(x: Word, w: Word, widths: BitWidths) -> Word {
    Word::wrapping(x.value() as i64 * w.value() as i64, widths.multiplier)
}

#[inline]
pub(crate) fn product_raw(x: u32, w: u32, widths: BitWidths) -> u32 {
    ((x as u64 * w as u64) & mask(widths.multiplier)) as u32
}

/// Partial sum `Y_{a,m}` over the first `upto` inputs (0-based `m`),
/// wrapping at every accumulation step.
#[inline]
pub(crate) fn partial_sum_raw(x: &[u32], w: &WeightMatrix, m: usize, upto: usize, widths: BitWidths) -> u32 {
    let acc_mask = mask(widths.accumulator);
    x[..upto].iter().enumerate().fold(0u64, |acc, (a, &xa)| {
        (acc + product_raw(xa, w.get(a, m), widths) as u64) & acc_mask
    }) as u32
}

/// `Y_{N,m}`: the accumulated value that column `m` (0-based) delivers to
/// its bottom accumulator.
pub fn column_sum(x: &ActivationVector, w: &WeightMatrix, m: usize, widths: BitWidths) -> Result<Word> {
    check_shapes(x, w)?;
    if m >= w.size() {
        return Err(Error::out_of_range(
            "column",
            m as i64,
            format!("0..{}", w.size()),
        ));
    }
    let sum = partial_sum_raw(x.as_slice(), w, m, x.len(), widths);
    Ok(Word::wrapping(sum as i64, widths.accumulator))
}

pub(crate) fn check_shapes(x: &ActivationVector, w: &WeightMatrix) -> Result<()> {
    if x.len() != w.size() {
        return Err(Error::Config(format!(
            "activation vector has {} entries but the weight matrix is {}x{}",
            x.len(),
            w.size(),
            w.size()
        )));
    }
    Ok(())
}

pub(crate) fn check_network(x: &ActivationVector, w: &WeightMatrix, cfg: &NetworkConfig) -> Result<()> {
    cfg.validate()?;
    check_shapes(x, w)?;
    if w.size() != cfg.neurons {
        return Err(Error::Config(format!(
            "weight matrix is {}x{} but the network has {} neurons",
            w.size(),
            w.size(),
            cfg.neurons
        )));
    }
    if w.width() != cfg.widths.weight {
        return Err(Error::Config(format!(
            "weight matrix holds {}-bit weights but the network uses {}-bit weights",
            w.width(),
            cfg.widths.weight
        )));
    }
    if let Some(&bad) = x.as_slice().iter().find(|&&v| v as u64 > mask(cfg.widths.activation)) {
        return Err(Error::out_of_range(
            "activation",
            bad as i64,
            format!("0..={}", mask(cfg.widths.activation)),
        ));
    }
    Ok(())
}

pub(crate) fn layer_reference_raw(x: &[u32], w: &WeightMatrix, cfg: &NetworkConfig, out: &mut [u32]) {
    let n = x.len();
    for (m, slot) in out.iter_mut().enumerate() {
        *slot = cfg.activate(partial_sum_raw(x, w, m, n, cfg.widths));
    }
}

/// One layer: `x_m(l+1) = quantize(relu(Y_{N,m}(l)))` for every output
/// neuron `m`.
pub fn forward_layer_reference(x: &ActivationVector, w: &WeightMatrix, cfg: &NetworkConfig) -> Result<ActivationVector> {
    check_network(x, w, cfg)?;
    let mut out = vec![0; x.len()];
    layer_reference_raw(x.as_slice(), w, cfg, &mut out);
    Ok(ActivationVector(out))
}

/// `cfg.layers` applications of [`forward_layer_reference`].
pub fn forward_network_reference(x: &ActivationVector, w: &WeightMatrix, cfg: &NetworkConfig) -> Result<ActivationVector> {
    check_network(x, w, cfg)?;
    let mut cur = x.as_slice().to_vec();
    let mut next = vec![0; cur.len()];
    for _ in 0..cfg.layers {
        layer_reference_raw(&cur, w, cfg, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ActivationVector(cur))
}
