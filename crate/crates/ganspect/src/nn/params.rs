use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// One named parameter tensor plus its gradient slot of identical shape.
#[derive(Clone, Debug)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named parameter tensors for one network, in insertion order.
///
/// Insertion order is the serialization order, so two models constructed the
/// same way serialize to identical bytes when their values match.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    entries: Vec<(String, Param)>,
    index: HashMap<String, usize>,
}

const MAGIC: &[u8; 4] = b"PSET";
const FORMAT_VERSION: u32 = 1;

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::Argument(format!("duplicate parameter name {name:?}")));
        }
        let grad = Tensor::zeros(value.shape());
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), Param { value, grad }));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].1.value)
            .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i].1.value),
            None => Err(Error::Config(format!("missing parameter {name:?}"))),
        }
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].1.grad)
            .ok_or_else(|| Error::Config(format!("missing parameter {name:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    /// grad[name] += delta
    pub fn accumulate_grad(&mut self, name: &str, delta: &Tensor) -> Result<()> {
        match self.index.get(name) {
            Some(&i) => {
                let p = &mut self.entries[i].1;
                if p.grad.shape() != delta.shape() {
                    return Err(Error::Config(format!(
                        "gradient shape {:?} does not match parameter {name:?} shape {:?}",
                        delta.shape(),
                        p.grad.shape()
                    )));
                }
                p.grad.add_assign(delta);
                Ok(())
            }
            None => Err(Error::Config(format!("missing parameter {name:?}"))),
        }
    }

    pub fn zero_grads(&mut self) {
        for (_, p) in self.entries.iter_mut() {
            p.grad.fill(0.0);
        }
    }

    /// One plain SGD update: p <- p - lr * grad(p), then reset gradients.
    pub fn sgd_step(&mut self, learning_rate: f64) -> Result<()> {
        if !(learning_rate > 0.0) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        for (_, p) in self.entries.iter_mut() {
            p.value.add_scaled(-learning_rate, &p.grad);
            p.grad.fill(0.0);
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, p)| p.value.all_finite() && p.grad.all_finite())
    }

    /// Total number of scalar values across all parameters.
    pub fn value_count(&self) -> usize {
        self.entries.iter().map(|(_, p)| p.value.len()).sum()
    }

    /// Serialize values (not gradients) to the flat binary container.
    ///
    /// Layout, all integers little-endian: magic `PSET`, u32 format version,
    /// u64 entry count, then per entry: u64 name length, name bytes, u64
    /// shape rank, u64 dims, raw f64 bits. Round-trips bit-exactly.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.value_count() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (name, p) in &self.entries {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(p.value.shape().len() as u64).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in p.value.as_slice() {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ParamSet> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Data("parameter container: bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "parameter container: unsupported format version {version}"
            )));
        }
        let count = r.u64()? as usize;
        let mut ps = ParamSet::new();
        for _ in 0..count {
            let name_len = r.u64()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Data("parameter container: invalid name".into()))?;
            let rank = r.u64()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_bits(r.u64()?));
            }
            ps.insert(&name, Tensor::from_vec(&shape, data)?)?;
        }
        if !r.is_empty() {
            return Err(Error::Data(
                "parameter container: trailing bytes after last entry".into(),
            ));
        }
        Ok(ps)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ParamSet> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        ParamSet::from_bytes(&bytes)
    }
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Data("binary container: unexpected end of data".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> ParamSet {
        let mut ps = ParamSet::new();
        let mut rng = crate::rng::Rng::new(9);
        ps.insert(
            "w",
            Tensor::from_vec(&[2, 3], (0..6).map(|_| rng.normal()).collect()).unwrap(),
        )
        .unwrap();
        ps.insert("b", Tensor::from_vec(&[1, 3], vec![0.0, -1.5, 2.25]).unwrap())
            .unwrap();
        ps
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::zeros(&[1])).unwrap();
        assert!(matches!(
            ps.insert("w", Tensor::zeros(&[1])),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn sgd_step_applies_gradient() {
        let mut ps = ParamSet::new();
        ps.insert("p", Tensor::scalar(1.0)).unwrap();
        ps.accumulate_grad("p", &Tensor::scalar(2.0)).unwrap();
        ps.sgd_step(0.1).unwrap();
        assert!((ps.get("p").unwrap().item() - 0.8).abs() < 1e-15);
        // Gradients reset after the step.
        assert_eq!(ps.grad("p").unwrap().item(), 0.0);
    }

    #[test]
    fn sgd_zero_grad_is_noop() {
        let mut ps = sample_set();
        let before = ps.to_bytes();
        ps.sgd_step(0.5).unwrap();
        assert_eq!(before, ps.to_bytes());
    }

    #[test]
    fn sgd_two_steps_equal_double_lr() {
        let g = Tensor::scalar(3.0);
        let mut a = ParamSet::new();
        a.insert("p", Tensor::scalar(1.0)).unwrap();
        a.accumulate_grad("p", &g).unwrap();
        a.sgd_step(0.1).unwrap();
        a.accumulate_grad("p", &g).unwrap();
        a.sgd_step(0.1).unwrap();

        let mut b = ParamSet::new();
        b.insert("p", Tensor::scalar(1.0)).unwrap();
        b.accumulate_grad("p", &g).unwrap();
        b.sgd_step(0.2).unwrap();

        assert!((a.get("p").unwrap().item() - b.get("p").unwrap().item()).abs() < 1e-15);
    }

    #[test]
    fn sgd_rejects_nonpositive_lr() {
        let mut ps = sample_set();
        assert!(ps.sgd_step(0.0).is_err());
        assert!(ps.sgd_step(-1.0).is_err());
    }

    #[test]
    fn serialization_round_trip_bit_exact() {
        let ps = sample_set();
        let bytes = ps.to_bytes();
        let back = ParamSet::from_bytes(&bytes).unwrap();
        assert_eq!(bytes, back.to_bytes());
        assert_eq!(ps.get("w").unwrap(), back.get("w").unwrap());
    }

    #[test]
    fn from_bytes_rejects_garbage() {
        assert!(ParamSet::from_bytes(b"nope").is_err());
        let mut bytes = sample_set().to_bytes();
        bytes.push(0);
        assert!(ParamSet::from_bytes(&bytes).is_err());
    }
}
