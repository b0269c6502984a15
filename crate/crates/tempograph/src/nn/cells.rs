use rand::Rng;

use crate::autodiff::{Parameter, Tape, Tensor};
use crate::graph::SparseOperator;
use crate::nn::layers::{cheb_basis, diffusion_basis, ChebConv, DiffusionConv};
use crate::{Error, Result};

fn check_hidden(h: &Tensor, rows: usize, filters: usize, cell: &'static str) -> Result<()> {
    if h.shape() != (rows, filters) {
        return Err(Error::ShapeMismatch {
            op: cell,
            lhs: format!("{rows}x{filters} hidden state"),
            rhs: format!("{}x{}", h.rows(), h.cols()),
        });
    }
    Ok(())
}

/// GRU recurrence whose dense projections are Chebyshev graph convolutions.
/// Six independent ChebConv parameter sets (x/h per gate).
pub struct GConvGruCell {
    filters: usize,
    conv_xz: ChebConv,
    conv_hz: ChebConv,
    conv_xr: ChebConv,
    conv_hr: ChebConv,
    conv_xh: ChebConv,
    conv_hh: ChebConv,
}

impl GConvGruCell {
    pub fn new<R: Rng>(
        prefix: &str,
        k: usize,
        in_channels: usize,
        filters: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let conv = |name: &str, d_in: usize, rng: &mut R| {
            ChebConv::new(&format!("{prefix}.{name}"), k, d_in, filters, rng)
        };
        Ok(GConvGruCell {
            filters,
            conv_xz: conv("xz", in_channels, rng)?,
            conv_hz: conv("hz", filters, rng)?,
            conv_xr: conv("xr", in_channels, rng)?,
            conv_hr: conv("hr", filters, rng)?,
            conv_xh: conv("xh", in_channels, rng)?,
            conv_hh: conv("hh", filters, rng)?,
        })
    }

    pub fn forward(
        &self,
        tape: &Tape,
        x: &Tensor,
        h_prev: Option<&Tensor>,
        l_hat: &SparseOperator,
    ) -> Result<Tensor> {
        let h0 = Tensor::zeros(x.rows(), self.filters);
        let h = match h_prev {
            Some(h) => {
                check_hidden(h, x.rows(), self.filters, "gconv_gru")?;
                h.clone()
            }
            None => h0,
        };
        // One Chebyshev basis per distinct input; every gate reuses them.
        let bx = cheb_basis(x, l_hat, self.conv_xz.order())?;
        let bh = cheb_basis(&h, l_hat, self.conv_hz.order())?;
        let z = ChebConv::fused(tape, &[(&self.conv_xz, &bx), (&self.conv_hz, &bh)])?.sigmoid()?;
        let r = ChebConv::fused(tape, &[(&self.conv_xr, &bx), (&self.conv_hr, &bh)])?.sigmoid()?;
        let brh = cheb_basis(&r.hadamard(&h)?, l_hat, self.conv_hh.order())?;
        let h_tilde =
            ChebConv::fused(tape, &[(&self.conv_xh, &bx), (&self.conv_hh, &brh)])?.tanh()?;
        z.blend(&h, &h_tilde)
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        [
            &self.conv_xz,
            &self.conv_hz,
            &self.conv_xr,
            &self.conv_hr,
            &self.conv_xh,
            &self.conv_hh,
        ]
        .iter()
        .flat_map(|c| c.parameters())
        .collect()
    }
}

/// LSTM recurrence with Chebyshev graph convolutions and per-unit peephole
/// connections (elementwise with `c_prev` for the input/forget gates and
/// with the fresh `c` for the output gate).
pub struct GConvLstmCell {
    filters: usize,
    conv_xi: ChebConv,
    conv_hi: ChebConv,
    conv_xf: ChebConv,
    conv_hf: ChebConv,
    conv_xc: ChebConv,
    conv_hc: ChebConv,
    conv_xo: ChebConv,
    conv_ho: ChebConv,
    w_ci: Parameter,
    w_cf: Parameter,
    w_co: Parameter,
}

impl GConvLstmCell {
    pub fn new<R: Rng>(
        prefix: &str,
        k: usize,
        in_channels: usize,
        filters: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let conv = |name: &str, d_in: usize, rng: &mut R| {
            ChebConv::new(&format!("{prefix}.{name}"), k, d_in, filters, rng)
        };
        Ok(GConvLstmCell {
            filters,
            conv_xi: conv("xi", in_channels, rng)?,
            conv_hi: conv("hi", filters, rng)?,
            conv_xf: conv("xf", in_channels, rng)?,
            conv_hf: conv("hf", filters, rng)?,
            conv_xc: conv("xc", in_channels, rng)?,
            conv_hc: conv("hc", filters, rng)?,
            conv_xo: conv("xo", in_channels, rng)?,
            conv_ho: conv("ho", filters, rng)?,
            w_ci: Parameter::glorot(format!("{prefix}.w_ci"), 1, filters, rng),
            w_cf: Parameter::glorot(format!("{prefix}.w_cf"), 1, filters, rng),
            w_co: Parameter::glorot(format!("{prefix}.w_co"), 1, filters, rng),
        })
    }

    pub fn forward(
        &self,
        tape: &Tape,
        x: &Tensor,
        state: Option<(&Tensor, &Tensor)>,
        l_hat: &SparseOperator,
    ) -> Result<(Tensor, Tensor)> {
        let (h, c) = match state {
            Some((h, c)) => {
                check_hidden(h, x.rows(), self.filters, "gconv_lstm")?;
                check_hidden(c, x.rows(), self.filters, "gconv_lstm")?;
                (h.clone(), c.clone())
            }
            None => (
                Tensor::zeros(x.rows(), self.filters),
                Tensor::zeros(x.rows(), self.filters),
            ),
        };
        // One Chebyshev basis per distinct input; every gate reuses them.
        let bx = cheb_basis(x, l_hat, self.conv_xi.order())?;
        let bh = cheb_basis(&h, l_hat, self.conv_hi.order())?;
        let i = ChebConv::fused(tape, &[(&self.conv_xi, &bx), (&self.conv_hi, &bh)])?
            .add(&c.mul_row(&self.w_ci.tracked(tape))?)?
            .sigmoid()?;
        let f = ChebConv::fused(tape, &[(&self.conv_xf, &bx), (&self.conv_hf, &bh)])?
            .add(&c.mul_row(&self.w_cf.tracked(tape))?)?
            .sigmoid()?;
        let g = ChebConv::fused(tape, &[(&self.conv_xc, &bx), (&self.conv_hc, &bh)])?.tanh()?;
        let c_new = f.mul_add(&c, &i, &g)?;
        let o = ChebConv::fused(tape, &[(&self.conv_xo, &bx), (&self.conv_ho, &bh)])?
            .add(&c_new.mul_row(&self.w_co.tracked(tape))?)?
            .sigmoid()?;
        let h_new = o.hadamard(&c_new.tanh()?)?;
        Ok((h_new, c_new))
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut params: Vec<&Parameter> = [
            &self.conv_xi,
            &self.conv_hi,
            &self.conv_xf,
            &self.conv_hf,
            &self.conv_xc,
            &self.conv_hc,
            &self.conv_xo,
            &self.conv_ho,
        ]
        .iter()
        .flat_map(|c| c.parameters())
        .collect();
        params.extend([&self.w_ci, &self.w_cf, &self.w_co]);
        params
    }
}

/// GRU recurrence whose gates are diffusion convolutions over the
/// concatenated input and hidden state `[x ‖ h]`.
pub struct DcrnnCell {
    filters: usize,
    conv_z: DiffusionConv,
    conv_r: DiffusionConv,
    conv_h: DiffusionConv,
}

impl DcrnnCell {
    pub fn new<R: Rng>(
        prefix: &str,
        k: usize,
        in_channels: usize,
        filters: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let concat = in_channels + filters;
        Ok(DcrnnCell {
            filters,
            conv_z: DiffusionConv::new(&format!("{prefix}.z"), k, concat, filters, rng)?,
            conv_r: DiffusionConv::new(&format!("{prefix}.r"), k, concat, filters, rng)?,
            conv_h: DiffusionConv::new(&format!("{prefix}.h"), k, concat, filters, rng)?,
        })
    }

    pub fn forward(
        &self,
        tape: &Tape,
        x: &Tensor,
        h_prev: Option<&Tensor>,
        rw_out: &SparseOperator,
        rw_in: &SparseOperator,
    ) -> Result<Tensor> {
        let h = match h_prev {
            Some(h) => {
                check_hidden(h, x.rows(), self.filters, "dcrnn")?;
                h.clone()
            }
            None => Tensor::zeros(x.rows(), self.filters),
        };
        let xh = x.concat_cols(&h)?;
        // z and r read the same concatenation: share its random-walk powers.
        let bxh = diffusion_basis(&xh, rw_out, rw_in, self.conv_z.order())?;
        let z = self.conv_z.forward_basis(tape, &bxh)?.sigmoid()?;
        let r = self.conv_r.forward_basis(tape, &bxh)?.sigmoid()?;
        let xrh = x.concat_cols(&r.hadamard(&h)?)?;
        let h_tilde = self.conv_h.forward(tape, &xrh, rw_out, rw_in)?.tanh()?;
        z.blend(&h, &h_tilde)
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        [&self.conv_z, &self.conv_r, &self.conv_h]
            .iter()
            .flat_map(|c| c.parameters())
            .collect()
    }
}
