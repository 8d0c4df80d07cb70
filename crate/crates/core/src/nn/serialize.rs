// SPDX-License-Identifier: Apache-2.0

//! `TBM1` model files (little-endian):
//!
//! ```text
//! "TBM1"
//! arch: K u32 | L u32 | main_kernel u32 | n_stages u32 | depths u32* | widths u32*
//!       | time_stride u32 | branch_enabled u8 | branch_width u32 | branch_kernel u32
//!       | n_classes u32
//! n_params u32, then per parameter:
//!       name (u32 length + UTF-8) | kind u8 | ndim u32 | dims u32* | f32 values
//! n_bn u32, then per batch-norm layer:
//!       name | C u32 | running_mean f32*C | running_var f32*C
//! ```

use crate::error::{Error, Result};
use crate::io::{put_string, Reader};

use super::model::{ArchConfig, BnState, Param, ParamKind, TwoBranchModel};
use super::tensor::Tensor;

pub const TBM_MAGIC: &[u8; 4] = b"TBM1";

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn kind_code(kind: ParamKind) -> u8 {
    match kind {
        ParamKind::ConvWeight => 0,
        ParamKind::BnScale => 1,
        ParamKind::BnShift => 2,
        ParamKind::FcWeight => 3,
        ParamKind::FcBias => 4,
    }
}

fn kind_from(code: u8) -> Result<ParamKind> {
    Ok(match code {
        0 => ParamKind::ConvWeight,
        1 => ParamKind::BnScale,
        2 => ParamKind::BnShift,
        3 => ParamKind::FcWeight,
        4 => ParamKind::FcBias,
        _ => return Err(Error::format("TBM1", format!("unknown parameter kind {code}"))),
    })
}

pub fn encode_model(model: &TwoBranchModel<f32>) -> Vec<u8> {
    let a = &model.arch;
    let mut out = Vec::new();
    out.extend_from_slice(TBM_MAGIC);
    put_u32(&mut out, a.channels);
    put_u32(&mut out, a.length);
    put_u32(&mut out, a.main_kernel);
    put_u32(&mut out, a.stage_depths.len());
    a.stage_depths.iter().for_each(|&d| put_u32(&mut out, d));
    a.stage_widths.iter().for_each(|&w| put_u32(&mut out, w));
    put_u32(&mut out, a.time_stride);
    out.push(a.branch_enabled as u8);
    put_u32(&mut out, a.branch_width);
    put_u32(&mut out, a.branch_kernel);
    put_u32(&mut out, a.n_classes);

    put_u32(&mut out, model.params.len());
    for p in &model.params {
        put_string(&mut out, &p.name);
        out.push(kind_code(p.kind));
        put_u32(&mut out, p.value.shape().len());
        p.value.shape().iter().for_each(|&d| put_u32(&mut out, d));
        put_f32s(&mut out, p.value.data());
    }
    put_u32(&mut out, model.bn.len());
    for b in &model.bn {
        put_string(&mut out, &b.name);
        put_u32(&mut out, b.running_mean.len());
        put_f32s(&mut out, &b.running_mean);
        put_f32s(&mut out, &b.running_var);
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<TwoBranchModel<f32>> {
    let mut r = Reader::new(bytes, "TBM1");
    if r.take(4)? != TBM_MAGIC {
        return Err(Error::format("TBM1", "bad magic"));
    }
    let mut u = || -> Result<usize> { Ok(r.u32()? as usize) };
    let channels = u()?;
    let length = u()?;
    let main_kernel = u()?;
    let stages = u()?;
    if stages > 64 {
        return Err(Error::format("TBM1", format!("implausible stage count {stages}")));
    }
    let stage_depths = (0..stages).map(|_| u()).collect::<Result<Vec<_>>>()?;
    let stage_widths = (0..stages).map(|_| u()).collect::<Result<Vec<_>>>()?;
    let time_stride = u()?;
    let branch_enabled = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(Error::format("TBM1", format!("bad branch flag {b}"))),
    };
    let branch_width = r.u32()? as usize;
    let branch_kernel = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    let arch = ArchConfig {
        channels,
        length,
        main_kernel,
        stage_depths,
        stage_widths,
        time_stride,
        branch_enabled,
        branch_width,
        branch_kernel,
        n_classes,
    };
    arch.validate()
        .map_err(|e| Error::format("TBM1", format!("stored architecture invalid: {e}")))?;

    let n_params = r.u32()? as usize;
    let mut params = Vec::with_capacity(n_params.min(4096));
    for _ in 0..n_params {
        let name = r.string()?;
        let kind = kind_from(r.u8()?)?;
        let ndim = r.u32()? as usize;
        if ndim > 8 {
            return Err(Error::format(
                "TBM1",
                format!("parameter {name} has {ndim} dimensions"),
            ));
        }
        let shape = (0..ndim)
            .map(|_| Ok(r.u32()? as usize))
            .collect::<Result<Vec<_>>>()?;
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::format("TBM1", "parameter size overflows"))?;
        let data = r.f32s(count)?;
        params.push(Param {
            name,
            kind,
            value: Tensor::new(shape, data),
        });
    }
    let n_bn = r.u32()? as usize;
    let mut bn = Vec::with_capacity(n_bn.min(4096));
    for _ in 0..n_bn {
        let name = r.string()?;
        let c = r.u32()? as usize;
        let running_mean = r.f32s(c)?;
        let running_var = r.f32s(c)?;
        bn.push(BnState {
            name,
            running_mean,
            running_var,
        });
    }
    r.finish()?;
    TwoBranchModel::from_parts(arch, params, bn).map_err(|e| Error::format("TBM1", e.to_string()))
}
