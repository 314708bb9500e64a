//! Versioned CNN checkpoint: layer specs, parameters as little-endian f32,
//! optional pipeline config and optional RMSProp state.

use std::io::{Read, Write};

use super::layers::{Activation, LayerSpec, Padding};
use super::model::CnnModel;
use super::optim::{RmsProp, RmsPropConfig};
use crate::container::{BinReader, BinWriter, CNN_MAGIC};
use crate::error::{Error, Result};

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::None => 0,
        Activation::Relu => 1,
        Activation::Softmax => 2,
    }
}

fn activation_from(code: u8) -> Result<Activation> {
    match code {
        0 => Ok(Activation::None),
        1 => Ok(Activation::Relu),
        2 => Ok(Activation::Softmax),
        _ => Err(Error::Format(format!("unknown activation code {code}"))),
    }
}

pub fn write_checkpoint<W: Write>(out: W, model: &CnnModel, optimizer: Option<&RmsProp>) -> Result<()> {
    let mut w = BinWriter::new(out, CNN_MAGIC)?;
    for &d in model.input_shape() {
        w.u32(d as u32)?;
    }
    w.u64(model.seed)?;
    let specs = model.specs();
    w.u32(specs.len() as u32)?;
    for spec in &specs {
        match *spec {
            LayerSpec::Conv2D { filters, padding, activation } => {
                w.u8(0)?;
                w.u32(filters as u32)?;
                w.u8(u8::from(padding == Padding::Valid))?;
                w.u8(activation_code(activation))?;
            }
            LayerSpec::MaxPool2D => w.u8(1)?,
            LayerSpec::Dropout { rate } => {
                w.u8(2)?;
                w.f64(rate)?;
            }
            LayerSpec::Flatten => w.u8(3)?,
            LayerSpec::Dense { units, activation } => {
                w.u8(4)?;
                w.u32(units as u32)?;
                w.u8(activation_code(activation))?;
            }
        }
    }
    w.pipeline(model.pipeline.as_ref())?;
    w.u32(model.params().len() as u32)?;
    for p in model.params() {
        w.u32(p.len() as u32)?;
        for &v in p.data() {
            w.f32(v as f32)?;
        }
    }
    match optimizer {
        None => w.u8(0)?,
        Some(opt) => {
            w.u8(1)?;
            w.f64(opt.config.lr)?;
            w.f64(opt.config.decay)?;
            w.f64(opt.config.rho)?;
            w.f64(opt.config.epsilon)?;
            w.u64(opt.iterations)?;
            for acc in &opt.accumulators {
                for &v in acc {
                    w.f32(v as f32)?;
                }
            }
        }
    }
    w.finish()
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<(CnnModel, Option<RmsProp>)> {
    let mut r = BinReader::new(input, CNN_MAGIC)?;
    let input_shape = (0..3).map(|_| Ok(r.u32()? as usize)).collect::<Result<Vec<_>>>()?;
    let seed = r.u64()?;
    let n_layers = r.u32()? as usize;
    let mut specs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let spec = match r.u8()? {
            0 => LayerSpec::Conv2D {
                filters: r.u32()? as usize,
                padding: if r.u8()? == 0 { Padding::Same } else { Padding::Valid },
                activation: activation_from(r.u8()?)?,
            },
            1 => LayerSpec::MaxPool2D,
            2 => LayerSpec::Dropout { rate: r.f64()? },
            3 => LayerSpec::Flatten,
            4 => LayerSpec::Dense {
                units: r.u32()? as usize,
                activation: activation_from(r.u8()?)?,
            },
            t => return Err(Error::Format(format!("unknown layer tag {t}"))),
        };
        specs.push(spec);
    }
    let mut model = CnnModel::from_specs(input_shape, &specs)?;
    model.seed = seed;
    model.pipeline = r.pipeline()?;
    let n_params = r.u32()? as usize;
    if n_params != model.params().len() {
        return Err(Error::Format(format!(
            "checkpoint has {n_params} parameter tensors, architecture needs {}",
            model.params().len()
        )));
    }
    for p in model.params_mut() {
        let len = r.u32()? as usize;
        if len != p.len() {
            return Err(Error::Format(format!("parameter tensor of {len} values, expected {}", p.len())));
        }
        for v in p.data_mut() {
            *v = f64::from(r.f32()?);
        }
    }
    let optimizer = if r.u8()? == 0 {
        None
    } else {
        let config = RmsPropConfig {
            lr: r.f64()?,
            decay: r.f64()?,
            rho: r.f64()?,
            epsilon: r.f64()?,
        };
        let mut opt = RmsProp::new(&model, config)?;
        opt.iterations = r.u64()?;
        for acc in &mut opt.accumulators {
            for v in acc.iter_mut() {
                *v = f64::from(r.f32()?);
            }
        }
        Some(opt)
    };
    Ok((model, optimizer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PipelineConfig;
    use crate::nn::model::{build_cnn, CnnArch};

    #[test]
    fn round_trip_within_f32_precision() {
        let mut m = build_cnn(13, 26, &CnnArch::reduced(), 9).unwrap();
        m.pipeline = Some(PipelineConfig::new(13, 30_000).unwrap());
        let mut opt = RmsProp::new(&m, RmsPropConfig::default()).unwrap();
        opt.iterations = 42;
        opt.accumulators[0][0] = 0.25;
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &m, Some(&opt)).unwrap();
        let (back, back_opt) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.specs(), m.specs());
        assert_eq!(back.pipeline, m.pipeline);
        for (a, b) in back.params().iter().zip(m.params()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(*x, f64::from(*y as f32));
            }
        }
        let back_opt = back_opt.unwrap();
        assert_eq!(back_opt.iterations, 42);
        assert_eq!(back_opt.accumulators[0][0], 0.25);

        buf[0] = b'X';
        assert!(matches!(read_checkpoint(buf.as_slice()), Err(Error::Format(_))));
    }
}
