//! Little-endian binary helpers shared by the model file formats.
//!
//! Every file starts with an 8-byte magic and a u32 format version.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::features::{Augmentations, PipelineConfig};

pub(crate) const SVM_MAGIC: &[u8; 8] = b"SERSVM\0\0";
pub(crate) const CNN_MAGIC: &[u8; 8] = b"SERCNN\0\0";
pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) struct BinWriter<W: Write> {
    out: W,
}

impl<W: Write> BinWriter<W> {
    pub fn new(mut out: W, magic: &[u8; 8]) -> Result<Self> {
        out.write_all(magic)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        Ok(Self { out })
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.out.write_all(&[v])?)
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.out.write_all(&v.to_le_bytes())?)
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.out.write_all(&v.to_le_bytes())?)
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        Ok(self.out.write_all(&v.to_le_bytes())?)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.out.write_all(&v.to_le_bytes())?)
    }

    pub fn pipeline(&mut self, cfg: Option<&PipelineConfig>) -> Result<()> {
        let Some(cfg) = cfg else {
            return self.u8(0);
        };
        self.u8(1)?;
        self.u32(cfg.n_mfcc as u32)?;
        self.u64(cfg.target_length as u64)?;
        self.u32(cfg.frame_length as u32)?;
        self.u32(cfg.n_mels as u32)?;
        self.f64(cfg.f_min)?;
        self.f64(cfg.f_max.unwrap_or(f64::NAN))?;
        self.u8(u8::from(cfg.augmentations.reverse) | (u8::from(cfg.augmentations.invert) << 1))
    }

    pub fn finish(mut self) -> Result<()> {
        Ok(self.out.flush()?)
    }
}

pub(crate) struct BinReader<R: Read> {
    input: R,
}

impl<R: Read> BinReader<R> {
    pub fn new(mut input: R, magic: &[u8; 8]) -> Result<Self> {
        let mut head = [0u8; 8];
        input
            .read_exact(&mut head)
            .map_err(|_| Error::Format("file too short for header".into()))?;
        if &head != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&head),
                String::from_utf8_lossy(magic)
            )));
        }
        let mut r = Self { input };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        Ok(r)
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.input
            .read_exact(&mut b)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        Ok(b)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    pub fn pipeline(&mut self) -> Result<Option<PipelineConfig>> {
        if self.u8()? == 0 {
            return Ok(None);
        }
        let n_mfcc = self.u32()? as usize;
        let target_length = self.u64()? as usize;
        let frame_length = self.u32()? as usize;
        let n_mels = self.u32()? as usize;
        let f_min = self.f64()?;
        let f_max = self.f64()?;
        let flags = self.u8()?;
        let cfg = PipelineConfig {
            n_mfcc,
            target_length,
            frame_length,
            n_mels,
            f_min,
            f_max: (!f_max.is_nan()).then_some(f_max),
            augmentations: Augmentations {
                reverse: flags & 1 != 0,
                invert: flags & 2 != 0,
            },
        };
        cfg.validate()?;
        Ok(Some(cfg))
    }
}
