// SPDX-License-Identifier: Apache-2.0

//! Versioned little-endian model files and JSON summaries.
//!
//! SVR: magic `GFDRSVR\0`, u32 version, f64 gamma, f64 bias, u64 dim,
//! u64 support count, then per support vector its coefficient and `dim`
//! features. MLP: magic `GFDRMLP\0`, u32 version, u64 layer count, then
//! per layer u64 inputs, u64 outputs, u8 activation, weights, biases.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::Serialize;

use super::mlp::{Activation, Dense, MlpFit, MlpModel, MlpParams};
use super::svr::{SvrFit, SvrModel, SvrParams};
use super::RegressError;

const SVR_MAGIC: &[u8; 8] = b"GFDRSVR\0";
const MLP_MAGIC: &[u8; 8] = b"GFDRMLP\0";
const VERSION: u32 = 1;

fn expect_header<R: Read>(input: &mut R, magic: &[u8; 8]) -> Result<(), RegressError> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(RegressError::Format("wrong magic".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(RegressError::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>, RegressError> {
    (0..n).map(|_| Ok(input.read_f64::<LittleEndian>()?)).collect()
}

pub fn write_svr<W: Write>(m: &SvrModel, mut out: W) -> Result<(), RegressError> {
    out.write_all(SVR_MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_f64::<LittleEndian>(m.gamma)?;
    out.write_f64::<LittleEndian>(m.bias)?;
    out.write_u64::<LittleEndian>(m.dim as u64)?;
    out.write_u64::<LittleEndian>(m.support_vectors.len() as u64)?;
    for (sv, &c) in m.support_vectors.iter().zip(&m.dual_coefficients) {
        out.write_f64::<LittleEndian>(c)?;
        for &v in sv {
            out.write_f64::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

pub fn read_svr<R: Read>(mut input: R) -> Result<SvrModel, RegressError> {
    expect_header(&mut input, SVR_MAGIC)?;
    let gamma = input.read_f64::<LittleEndian>()?;
    let bias = input.read_f64::<LittleEndian>()?;
    let dim = input.read_u64::<LittleEndian>()? as usize;
    let count = input.read_u64::<LittleEndian>()? as usize;
    let mut support_vectors = Vec::with_capacity(count);
    let mut dual_coefficients = Vec::with_capacity(count);
    for _ in 0..count {
        dual_coefficients.push(input.read_f64::<LittleEndian>()?);
        support_vectors.push(read_f64s(&mut input, dim)?);
    }
    Ok(SvrModel { gamma, support_vectors, dual_coefficients, bias, dim })
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Tanh => 1,
        Activation::Linear => 2,
    }
}

pub fn write_mlp<W: Write>(m: &MlpModel, mut out: W) -> Result<(), RegressError> {
    out.write_all(MLP_MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u64::<LittleEndian>(m.layers.len() as u64)?;
    for l in &m.layers {
        out.write_u64::<LittleEndian>(l.inputs as u64)?;
        out.write_u64::<LittleEndian>(l.outputs as u64)?;
        out.write_u8(activation_code(l.activation))?;
        for &w in l.weights.iter().chain(&l.biases) {
            out.write_f64::<LittleEndian>(w)?;
        }
    }
    Ok(())
}

pub fn read_mlp<R: Read>(mut input: R) -> Result<MlpModel, RegressError> {
    expect_header(&mut input, MLP_MAGIC)?;
    let count = input.read_u64::<LittleEndian>()? as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let inputs = input.read_u64::<LittleEndian>()? as usize;
        let outputs = input.read_u64::<LittleEndian>()? as usize;
        let activation = match input.read_u8()? {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Linear,
            other => return Err(RegressError::Format(format!("unknown activation code {other}"))),
        };
        let weights = read_f64s(&mut input, inputs * outputs)?;
        let biases = read_f64s(&mut input, outputs)?;
        layers.push(Dense { inputs, outputs, weights, biases, activation });
    }
    if layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
        return Err(RegressError::Format("layer shapes do not chain".into()));
    }
    Ok(MlpModel { layers })
}

/// Human-readable description written next to a saved SVR.
#[derive(Debug, Clone, Serialize)]
pub struct SvrSummary {
    pub model: &'static str,
    pub params: SvrParams,
    pub support_vectors: usize,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub max_kkt_violation: f64,
    pub dual_objective: f64,
}

impl SvrSummary {
    pub fn new(params: &SvrParams, model: &SvrModel, fit: &SvrFit) -> Self {
        SvrSummary {
            model: "svr",
            params: params.clone(),
            support_vectors: model.support_vectors.len(),
            bias: model.bias,
            iterations: fit.iterations,
            converged: fit.converged,
            degenerate: fit.degenerate,
            max_kkt_violation: fit.max_kkt_violation,
            dual_objective: fit.dual_objective,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MlpSummary {
    pub model: &'static str,
    pub params: MlpParams,
    /// `(output size, parameter count)` per layer.
    pub layers: Vec<(usize, usize)>,
    pub total_parameters: usize,
    pub first_epoch_mse: Option<f64>,
    pub final_epoch_mse: Option<f64>,
}

impl MlpSummary {
    pub fn new(params: &MlpParams, model: &MlpModel, fit: &MlpFit) -> Self {
        MlpSummary {
            model: "mlp",
            params: params.clone(),
            layers: model.layers.iter().map(|l| (l.outputs, l.weights.len() + l.biases.len())).collect(),
            total_parameters: model.param_count(),
            first_epoch_mse: fit.epoch_mse.first().copied(),
            final_epoch_mse: fit.epoch_mse.last().copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svr_round_trip() {
        let m = SvrModel {
            gamma: 0.01,
            support_vectors: vec![vec![1.0, -2.5], vec![0.0, 3.25]],
            dual_coefficients: vec![10.0, -4.5],
            bias: 0.125,
            dim: 2,
        };
        let mut buf = Vec::new();
        write_svr(&m, &mut buf).unwrap();
        assert_eq!(read_svr(&buf[..]).unwrap(), m);
        assert!(matches!(read_mlp(&buf[..]), Err(RegressError::Format(_))));
    }

    #[test]
    fn mlp_round_trip() {
        let m = MlpModel::init(&MlpParams { input_dim: 3, layer_sizes: vec![4, 2, 1], ..MlpParams::default() }).unwrap();
        let mut buf = Vec::new();
        write_mlp(&m, &mut buf).unwrap();
        assert_eq!(read_mlp(&buf[..]).unwrap(), m);
        assert!(read_mlp(&buf[..buf.len() - 1]).is_err());
    }
}
