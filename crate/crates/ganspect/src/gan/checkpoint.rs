use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gan::config::GanConfig;
use crate::gan::model::GanModel;
use crate::nn::ParamSet;

const MAGIC: &[u8; 8] = b"GSPCKPT1";

/// Serialize a model: config header plus the generator and discriminator
/// parameter containers. Round-trips bit-exactly.
pub fn checkpoint_to_bytes(model: &GanModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let c = &model.config;
    let push_u64 = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
    push_u64(&mut out, c.window_len as u64);
    push_u64(&mut out, c.latent_dim as u64);
    push_u64(&mut out, c.generator_hidden.len() as u64);
    for &h in &c.generator_hidden {
        push_u64(&mut out, h as u64);
    }
    push_u64(&mut out, c.discriminator_hidden as u64);
    push_u64(&mut out, c.batch_size as u64);
    push_u64(&mut out, c.epochs as u64);
    push_u64(&mut out, c.lr_g.to_bits());
    push_u64(&mut out, c.lr_d.to_bits());
    push_u64(&mut out, c.seed);

    for section in [&model.generator, &model.discriminator] {
        let bytes = section.to_bytes();
        push_u64(&mut out, bytes.len() as u64);
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<GanModel> {
    use crate::nn::params_byte_reader as reader;
    let mut r = reader(bytes);
    if r.take(8)? != MAGIC {
        return Err(Error::Data("checkpoint: bad magic".into()));
    }
    let window_len = r.u64()? as usize;
    let latent_dim = r.u64()? as usize;
    let n_hidden = r.u64()? as usize;
    if n_hidden > 64 {
        return Err(Error::Data(format!(
            "checkpoint: implausible generator layer count {n_hidden}"
        )));
    }
    let mut generator_hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        generator_hidden.push(r.u64()? as usize);
    }
    let discriminator_hidden = r.u64()? as usize;
    let batch_size = r.u64()? as usize;
    let epochs = r.u64()? as usize;
    let lr_g = r.f64()?;
    let lr_d = r.f64()?;
    let seed = r.u64()?;
    let config = GanConfig {
        window_len,
        latent_dim,
        generator_hidden,
        discriminator_hidden,
        batch_size,
        epochs,
        lr_g,
        lr_d,
        seed,
    };
    config.validate()?;

    let gen_len = r.u64()? as usize;
    let generator = ParamSet::from_bytes(r.take(gen_len)?)?;
    let disc_len = r.u64()? as usize;
    let discriminator = ParamSet::from_bytes(r.take(disc_len)?)?;
    if !r.is_empty() {
        return Err(Error::Data("checkpoint: trailing bytes".into()));
    }

    let model = GanModel {
        generator,
        discriminator,
        config,
    };
    // Reject checkpoints whose sections do not match the declared layout.
    model.generator_net()?;
    model.discriminator_net()?;
    Ok(model)
}

pub fn save_checkpoint(model: &GanModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<GanModel> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bit_exact() {
        let cfg = GanConfig {
            window_len: 5,
            generator_hidden: vec![2, 3],
            discriminator_hidden: 4,
            seed: 99,
            ..GanConfig::default()
        };
        let model = GanModel::init(&cfg).unwrap();
        let bytes = checkpoint_to_bytes(&model);
        let back = checkpoint_from_bytes(&bytes).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(bytes, checkpoint_to_bytes(&back));
    }

    #[test]
    fn corrupted_checkpoint_rejected() {
        let model = GanModel::init(&GanConfig {
            window_len: 4,
            generator_hidden: vec![2],
            discriminator_hidden: 3,
            ..GanConfig::default()
        })
        .unwrap();
        let mut bytes = checkpoint_to_bytes(&model);
        bytes[0] = b'X';
        assert!(checkpoint_from_bytes(&bytes).is_err());
        let bytes = checkpoint_to_bytes(&model);
        assert!(checkpoint_from_bytes(&bytes[..bytes.len() - 4]).is_err());
    }
}
