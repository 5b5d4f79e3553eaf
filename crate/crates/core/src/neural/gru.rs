use rand::Rng;

use super::graph::{Graph, NodeId};
use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Weights of one GRU cell. Input weights are `hidden×input`, recurrent
/// weights `hidden×hidden`, biases `1×hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCellParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

impl GruCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = Tensor::zeros(hidden, input);
        let u = Tensor::zeros(hidden, hidden);
        let b = Tensor::zeros(1, hidden);
        GruCellParams {
            w_z: w.clone(),
            w_r: w.clone(),
            w_h: w,
            u_z: u.clone(),
            u_r: u.clone(),
            u_h: u,
            b_z: b.clone(),
            b_r: b.clone(),
            b_h: b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.u_z.rows()
    }

    pub fn input(&self) -> usize {
        self.w_z.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden(), self.input());
        let checks = [
            ("w_z", &self.w_z, (h, i)),
            ("w_r", &self.w_r, (h, i)),
            ("w_h", &self.w_h, (h, i)),
            ("u_z", &self.u_z, (h, h)),
            ("u_r", &self.u_r, (h, h)),
            ("u_h", &self.u_h, (h, h)),
            ("b_z", &self.b_z, (1, h)),
            ("b_r", &self.b_r, (1, h)),
            ("b_h", &self.b_h, (1, h)),
        ];
        for (name, t, want) in checks {
            if t.shape() != want {
                return Err(Error::shape("gru_cell", format!("{name} is {:?}, expected {want:?}", t.shape())));
            }
        }
        Ok(())
    }
}

/// A GRU cell whose weights live in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_h: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_h: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_h: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl GruCell {
    /// Registers the nine tensors as `prefix.w_z` etc., uniform in ±1/√hidden.
    pub fn register<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        let mut add = |name: &str, r: usize, c: usize| store.add_uniform(&format!("{prefix}.{name}"), r, c, k, rng);
        GruCell {
            w_z: add("w_z", hidden, input),
            w_r: add("w_r", hidden, input),
            w_h: add("w_h", hidden, input),
            u_z: add("u_z", hidden, hidden),
            u_r: add("u_r", hidden, hidden),
            u_h: add("u_h", hidden, hidden),
            b_z: add("b_z", 1, hidden),
            b_r: add("b_r", 1, hidden),
            b_h: add("b_h", 1, hidden),
            input,
            hidden,
        }
    }

    pub fn params(&self, store: &ParamStore) -> GruCellParams {
        let v = |id| store.value(id).clone();
        GruCellParams {
            w_z: v(self.w_z),
            w_r: v(self.w_r),
            w_h: v(self.w_h),
            u_z: v(self.u_z),
            u_r: v(self.u_r),
            u_h: v(self.u_h),
            b_z: v(self.b_z),
            b_r: v(self.b_r),
            b_h: v(self.b_h),
        }
    }

    /// One batched step: `x: B×input`, `h: B×hidden` → `B×hidden`.
    pub fn step(&self, g: &mut Graph, store: &ParamStore, x: NodeId, h: NodeId) -> NodeId {
        let mut p = |id| g.param(store, id);
        let (w_z, w_r, w_h) = (p(self.w_z), p(self.w_r), p(self.w_h));
        let (u_z, u_r, u_h) = (p(self.u_z), p(self.u_r), p(self.u_h));
        let (b_z, b_r, b_h) = (p(self.b_z), p(self.b_r), p(self.b_h));

        let xz = g.linear(x, w_z, b_z);
        let hz = g.matmul_t(h, u_z);
        let z_pre = g.add(xz, hz);
        let z = g.sigmoid(z_pre);

        let xr = g.linear(x, w_r, b_r);
        let hr = g.matmul_t(h, u_r);
        let r_pre = g.add(xr, hr);
        let r = g.sigmoid(r_pre);

        let xn = g.linear(x, w_h, b_h);
        let rh = g.mul(r, h);
        let hn = g.matmul_t(rh, u_h);
        let n_pre = g.add(xn, hn);
        let n = g.tanh(n_pre);

        g.interpolate(z, n, h)
    }
}
