//! Convolutional Q-network over correspondence-map observations.
//!
//! Input is a 2-channel image of pixel offsets (dx, dy) normalized by
//! the image side length, with invalid pixels zeroed. Four conv stages
//! reduce a side-S input to a (S/16)^2 feature vector feeding a linear
//! head with one output per discrete action.

use super::layers::{
    maxpool_backward, maxpool_forward, relu_backward, relu_forward, BatchNorm2d, Conv2d, Linear,
    PoolCache,
};
use super::DqnError;
use crate::env::NUM_ACTIONS;
use crate::worldsim::CorrespondenceMap;
use ndarray::{Array2, Array4};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::io::{Read, Write};
use std::path::Path;

const CHECKPOINT_MAGIC: &[u8; 4] = b"QNET";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone)]
pub struct QNetwork {
    pub input_size: usize,
    pub conv1: Conv2d,
    pub bn1: BatchNorm2d,
    pub conv2: Conv2d,
    pub bn2: BatchNorm2d,
    pub conv3: Conv2d,
    pub bn3: BatchNorm2d,
    pub conv4: Conv2d,
    pub fc: Linear,
}

pub struct ForwardCache {
    c1: super::layers::ConvCache,
    b1: super::layers::BnCache,
    m1: Array4<f64>,
    p1: PoolCache,
    c2: super::layers::ConvCache,
    b2: super::layers::BnCache,
    m2: Array4<f64>,
    p2: PoolCache,
    c3: super::layers::ConvCache,
    b3: super::layers::BnCache,
    m3: Array4<f64>,
    p3: PoolCache,
    c4: super::layers::ConvCache,
    flat: Array2<f64>,
    flat_dim: (usize, usize, usize, usize),
}

impl QNetwork {
    /// Build a He-initialized network for square side-`input_size`
    /// observations; the side must be divisible by 16.
    pub fn new(input_size: usize, seed: u64) -> Self {
        assert!(input_size % 16 == 0, "input side must be divisible by 16");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let feat = (input_size / 16) * (input_size / 16);
        Self {
            input_size,
            conv1: Conv2d::new("conv1", 2, 16, 5, 2, 2, &mut rng),
            bn1: BatchNorm2d::new("bn1", 16),
            conv2: Conv2d::new("conv2", 16, 32, 3, 1, 1, &mut rng),
            bn2: BatchNorm2d::new("bn2", 32),
            conv3: Conv2d::new("conv3", 32, 64, 3, 1, 1, &mut rng),
            bn3: BatchNorm2d::new("bn3", 64),
            conv4: Conv2d::new("conv4", 64, 1, 1, 1, 0, &mut rng),
            fc: Linear::new("fc", feat, NUM_ACTIONS, &mut rng),
        }
    }

    /// Flattened feature length ahead of the linear head.
    pub fn feature_len(&self) -> usize {
        (self.input_size / 16) * (self.input_size / 16)
    }

    /// Encode one observation as a [1, 2, s, s] tensor: offsets scaled
    /// by 1/side, invalid pixels zero.
    pub fn encode(&self, map: &CorrespondenceMap) -> Array4<f64> {
        self.encode_batch(std::slice::from_ref(map))
    }

    pub fn encode_batch<M: std::borrow::Borrow<CorrespondenceMap>>(
        &self,
        maps: &[M],
    ) -> Array4<f64> {
        let s = self.input_size;
        let scale = 1.0 / s as f64;
        let mut x = Array4::<f64>::zeros((maps.len(), 2, s, s));
        for (b, m) in maps.iter().enumerate() {
            let m = m.borrow();
            assert_eq!(m.width as usize, s);
            assert_eq!(m.height as usize, s);
            for i in 0..s {
                for j in 0..s {
                    let idx = i * s + j;
                    if m.valid[idx] {
                        x[(b, 0, i, j)] = m.dx[idx] * scale;
                        x[(b, 1, i, j)] = m.dy[idx] * scale;
                    }
                }
            }
        }
        x
    }

    /// Q-values in evaluation mode (frozen batch-norm statistics).
    pub fn forward_eval(&mut self, x: &Array4<f64>) -> Array2<f64> {
        let (y, _) = self.conv1.forward(x);
        let (y, _) = self.bn1.forward(&y, false);
        let (y, _) = relu_forward(&y);
        let (y, _) = maxpool_forward(&y);
        let (y, _) = self.conv2.forward(&y);
        let (y, _) = self.bn2.forward(&y, false);
        let (y, _) = relu_forward(&y);
        let (y, _) = maxpool_forward(&y);
        let (y, _) = self.conv3.forward(&y);
        let (y, _) = self.bn3.forward(&y, false);
        let (y, _) = relu_forward(&y);
        let (y, _) = maxpool_forward(&y);
        let (y, _) = self.conv4.forward(&y);
        let n = y.dim().0;
        let flat = y
            .into_shape_with_order((n, self.feature_len()))
            .expect("contiguous");
        self.fc.forward(&flat)
    }

    /// Q-values in training mode, with the caches needed for backward.
    pub fn forward_train(&mut self, x: &Array4<f64>) -> (Array2<f64>, ForwardCache) {
        let (y, c1) = self.conv1.forward(x);
        let (y, b1) = self.bn1.forward(&y, true);
        let b1 = b1.unwrap();
        let (y, m1) = relu_forward(&y);
        let (y, p1) = maxpool_forward(&y);
        let (y, c2) = self.conv2.forward(&y);
        let (y, b2) = self.bn2.forward(&y, true);
        let b2 = b2.unwrap();
        let (y, m2) = relu_forward(&y);
        let (y, p2) = maxpool_forward(&y);
        let (y, c3) = self.conv3.forward(&y);
        let (y, b3) = self.bn3.forward(&y, true);
        let b3 = b3.unwrap();
        let (y, m3) = relu_forward(&y);
        let (y, p3) = maxpool_forward(&y);
        let (y, c4) = self.conv4.forward(&y);
        let flat_dim = y.dim();
        let n = flat_dim.0;
        let flat = y
            .into_shape_with_order((n, self.feature_len()))
            .expect("contiguous");
        let q = self.fc.forward(&flat);
        (
            q,
            ForwardCache {
                c1,
                b1,
                m1,
                p1,
                c2,
                b2,
                m2,
                p2,
                c3,
                b3,
                m3,
                p3,
                c4,
                flat,
                flat_dim,
            },
        )
    }

    /// Accumulate parameter gradients from dL/dQ.
    pub fn backward(&mut self, cache: &ForwardCache, dq: &Array2<f64>) {
        let d = self.fc.backward(&cache.flat, dq);
        let d = d
            .clone()
            .into_shape_with_order(cache.flat_dim)
            .expect("contiguous");
        let d = self.conv4.backward(&cache.c4, &d);
        let d = maxpool_backward(&cache.p3, &d);
        let d = relu_backward(&cache.m3, &d);
        let d = self.bn3.backward(&cache.b3, &d);
        let d = self.conv3.backward(&cache.c3, &d);
        let d = maxpool_backward(&cache.p2, &d);
        let d = relu_backward(&cache.m2, &d);
        let d = self.bn2.backward(&cache.b2, &d);
        let d = self.conv2.backward(&cache.c2, &d);
        let d = maxpool_backward(&cache.p1, &d);
        let d = relu_backward(&cache.m1, &d);
        let d = self.bn1.backward(&cache.b1, &d);
        let _ = self.conv1.backward(&cache.c1, &d);
    }

    pub fn zero_grads(&mut self) {
        for (_, _, g) in self.trainable_mut() {
            g.fill(0.0);
        }
    }

    /// Greedy action for one observation; ties break to the lowest
    /// action index.
    pub fn act_greedy(&mut self, map: &CorrespondenceMap) -> usize {
        let x = self.encode(map);
        let q = self.forward_eval(&x);
        argmax_row(&q, 0)
    }

    /// Trainable parameters as (name, params, grads) flat slices.
    pub fn trainable_mut(&mut self) -> Vec<(String, &mut [f64], &mut [f64])> {
        let mut out: Vec<(String, &mut [f64], &mut [f64])> = Vec::new();
        for conv in [&mut self.conv1, &mut self.conv2, &mut self.conv3, &mut self.conv4] {
            out.push((
                format!("{}.w", conv.name),
                conv.w.as_slice_mut().unwrap(),
                conv.gw.as_slice_mut().unwrap(),
            ));
            out.push((
                format!("{}.b", conv.name),
                conv.b.as_slice_mut().unwrap(),
                conv.gb.as_slice_mut().unwrap(),
            ));
        }
        for bn in [&mut self.bn1, &mut self.bn2, &mut self.bn3] {
            out.push((
                format!("{}.gamma", bn.name),
                bn.gamma.as_slice_mut().unwrap(),
                bn.g_gamma.as_slice_mut().unwrap(),
            ));
            out.push((
                format!("{}.beta", bn.name),
                bn.beta.as_slice_mut().unwrap(),
                bn.g_beta.as_slice_mut().unwrap(),
            ));
        }
        out.push((
            "fc.w".into(),
            self.fc.w.as_slice_mut().unwrap(),
            self.fc.gw.as_slice_mut().unwrap(),
        ));
        out.push((
            "fc.b".into(),
            self.fc.b.as_slice_mut().unwrap(),
            self.fc.gb.as_slice_mut().unwrap(),
        ));
        out
    }

    /// All persistent state (parameters plus batch-norm running
    /// statistics) as (name, values) flat slices, in a fixed order.
    pub fn state_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        for conv in [&mut self.conv1, &mut self.conv2, &mut self.conv3, &mut self.conv4] {
            out.push((format!("{}.w", conv.name), conv.w.as_slice_mut().unwrap()));
            out.push((format!("{}.b", conv.name), conv.b.as_slice_mut().unwrap()));
        }
        for bn in [&mut self.bn1, &mut self.bn2, &mut self.bn3] {
            out.push((format!("{}.gamma", bn.name), bn.gamma.as_slice_mut().unwrap()));
            out.push((format!("{}.beta", bn.name), bn.beta.as_slice_mut().unwrap()));
            out.push((
                format!("{}.running_mean", bn.name),
                bn.running_mean.as_slice_mut().unwrap(),
            ));
            out.push((
                format!("{}.running_var", bn.name),
                bn.running_var.as_slice_mut().unwrap(),
            ));
        }
        out.push(("fc.w".into(), self.fc.w.as_slice_mut().unwrap()));
        out.push(("fc.b".into(), self.fc.b.as_slice_mut().unwrap()));
        out
    }

    /// Copy all state from another network of the same shape.
    pub fn copy_from(&mut self, other: &mut QNetwork) {
        assert_eq!(self.input_size, other.input_size);
        for ((_, dst), (_, src)) in self.state_mut().into_iter().zip(other.state_mut()) {
            dst.copy_from_slice(src);
        }
    }

    /// Binary checkpoint: "QNET" magic, version, tensor count, then
    /// name-tagged f32 tensors in network order.
    pub fn save(&mut self, path: &Path) -> Result<(), DqnError> {
        let input_size = self.input_size;
        let state = self.state_mut();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(CHECKPOINT_MAGIC)?;
        f.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        f.write_all(&(input_size as u32).to_le_bytes())?;
        f.write_all(&(state.len() as u32).to_le_bytes())?;
        for (name, values) in state {
            f.write_all(&(name.len() as u32).to_le_bytes())?;
            f.write_all(name.as_bytes())?;
            f.write_all(&(values.len() as u32).to_le_bytes())?;
            for v in values.iter() {
                f.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DqnError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(DqnError::BadCheckpoint("bad magic".into()));
        }
        let version = read_u32(&mut f)?;
        if version != CHECKPOINT_VERSION {
            return Err(DqnError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let input_size = read_u32(&mut f)? as usize;
        if input_size == 0 || input_size % 16 != 0 {
            return Err(DqnError::BadCheckpoint(format!(
                "bad input size {input_size}"
            )));
        }
        let mut net = QNetwork::new(input_size, 0);
        let count = read_u32(&mut f)? as usize;
        let state = net.state_mut();
        if count != state.len() {
            return Err(DqnError::BadCheckpoint(format!(
                "expected {} tensors, found {count}",
                state.len()
            )));
        }
        for (name, values) in state {
            let name_len = read_u32(&mut f)? as usize;
            let mut name_buf = vec![0u8; name_len];
            f.read_exact(&mut name_buf)?;
            if name_buf != name.as_bytes() {
                return Err(DqnError::BadCheckpoint(format!(
                    "tensor order mismatch at {name}"
                )));
            }
            let len = read_u32(&mut f)? as usize;
            if len != values.len() {
                return Err(DqnError::BadCheckpoint(format!(
                    "tensor {name}: expected {} values, found {len}",
                    values.len()
                )));
            }
            let mut buf = [0u8; 4];
            for v in values.iter_mut() {
                f.read_exact(&mut buf)?;
                *v = f32::from_le_bytes(buf) as f64;
            }
        }
        Ok(net)
    }
}

fn read_u32(f: &mut impl Read) -> Result<u32, DqnError> {
    let mut buf = [0u8; 4];
    f.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Index of the row maximum; ties break to the lowest index.
pub fn argmax_row(q: &Array2<f64>, row: usize) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    for (i, v) in q.row(row).iter().enumerate() {
        if *v > best {
            best = *v;
            best_idx = i;
        }
    }
    best_idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_map(seed: u64, side: u32) -> CorrespondenceMap {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = (side * side) as usize;
        let mut m = CorrespondenceMap::invalid(side, side);
        for i in 0..n {
            if rng.gen_bool(0.8) {
                m.valid[i] = true;
                m.dx[i] = rng.gen_range(-10.0..10.0);
                m.dy[i] = rng.gen_range(-10.0..10.0);
            }
        }
        m
    }

    #[test]
    fn shape_contract() {
        let mut net = QNetwork::new(64, 7);
        assert_eq!(net.feature_len(), 16);
        let x = net.encode_batch(&[random_map(1, 64), random_map(2, 64)]);
        assert_eq!(x.dim(), (2, 2, 64, 64));
        let q = net.forward_eval(&x);
        assert_eq!(q.dim(), (2, NUM_ACTIONS));
        assert!(q.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn encode_zeroes_invalid_pixels() {
        let net = QNetwork::new(64, 0);
        let mut m = random_map(3, 64);
        m.valid[100] = false;
        m.dx[100] = 500.0;
        let x = net.encode(&m);
        let (i, j) = (100 / 64, 100 % 64);
        assert_eq!(x[(0, 0, i, j)], 0.0);
        assert_eq!(x[(0, 1, i, j)], 0.0);
        // valid pixels are scaled by 1/side
        let k = (0..64 * 64).find(|&k| m.valid[k]).unwrap();
        assert!((x[(0, 0, k / 64, k % 64)] - m.dx[k] / 64.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_outputs() {
        let mut a = QNetwork::new(64, 11);
        let mut b = QNetwork::new(64, 11);
        let x = a.encode(&random_map(5, 64));
        assert_eq!(a.forward_eval(&x), b.forward_eval(&x));
    }

    #[test]
    fn zero_head_gives_zero_q() {
        let mut net = QNetwork::new(64, 0);
        net.fc = Linear::zero_init("fc", net.feature_len(), NUM_ACTIONS);
        let x = net.encode(&random_map(9, 64));
        let q = net.forward_eval(&x);
        assert!(q.iter().all(|&v| v == 0.0));
        // lowest-index tie-break on an all-zero row
        assert_eq!(argmax_row(&q, 0), 0);
    }

    #[test]
    fn argmax_affine_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for _ in 0..50 {
            let q = Array2::from_shape_fn((1, NUM_ACTIONS), |_| rng.gen_range(-3.0..3.0));
            let a = rng.gen_range(0.1..5.0);
            let b = rng.gen_range(-10.0..10.0);
            let q2 = q.mapv(|v| a * v + b);
            assert_eq!(argmax_row(&q, 0), argmax_row(&q2, 0));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.qnet");
        let mut net = QNetwork::new(64, 42);
        net.bn1.running_mean[3] = 0.25;
        net.save(&path).unwrap();
        let mut loaded = QNetwork::load(&path).unwrap();
        let x = net.encode(&random_map(6, 64));
        let qa = net.forward_eval(&x);
        let qb = loaded.forward_eval(&x);
        // f32 storage: agreement to single precision
        for (a, b) in qa.iter().zip(qb.iter()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        assert!((loaded.bn1.running_mean[3] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.qnet");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(
            QNetwork::load(&path),
            Err(DqnError::BadCheckpoint(_))
        ));
    }

    #[test]
    fn copy_from_matches_target() {
        let mut a = QNetwork::new(64, 1);
        let mut b = QNetwork::new(64, 2);
        let x = a.encode(&random_map(8, 64));
        assert_ne!(a.forward_eval(&x), b.forward_eval(&x));
        b.copy_from(&mut a);
        assert_eq!(a.forward_eval(&x), b.forward_eval(&x));
    }
}
