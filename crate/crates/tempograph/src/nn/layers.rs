use rand::Rng;

use crate::autodiff::{Parameter, Tape, Tensor};
use crate::graph::SparseOperator;
use crate::{Error, Result};

/// Chebyshev spectral graph convolution of order `K`:
/// `sum_{k=0}^{K-1} T_k(L_hat) X W_k + b` with the recursion
/// `T_0 = X`, `T_1 = L_hat X`, `T_k = 2 L_hat T_{k-1} - T_{k-2}`.
pub struct ChebConv {
    k: usize,
    in_channels: usize,
    out_channels: usize,
    weights: Vec<Parameter>,
    bias: Parameter,
}

/// Chebyshev polynomial basis `[T_0 X, ..., T_{K-1} X]` of `X` under `L_hat`.
/// Recurrent cells share one basis across all gates reading the same input,
/// so each sparse product is computed (and stored for backward) once.
pub fn cheb_basis(x: &Tensor, l_hat: &SparseOperator, k: usize) -> Result<Vec<Tensor>> {
    let mut polys = vec![x.clone()];
    if k > 1 {
        polys.push(l_hat.apply(x)?);
        for _ in 2..k {
            let t_next = l_hat
                .apply(&polys[polys.len() - 1])?
                .scale(2.0)?
                .sub(&polys[polys.len() - 2])?;
            polys.push(t_next);
        }
    }
    Ok(polys)
}

impl ChebConv {
    pub fn new<R: Rng>(
        prefix: &str,
        k: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(
                "Chebyshev order K must be at least 1".into(),
            ));
        }
        let weights = (0..k)
            .map(|i| Parameter::glorot(format!("{prefix}.w{i}"), in_channels, out_channels, rng))
            .collect();
        Ok(ChebConv {
            k,
            in_channels,
            out_channels,
            weights,
            bias: Parameter::zeros(format!("{prefix}.bias"), 1, out_channels),
        })
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor, l_hat: &SparseOperator) -> Result<Tensor> {
        let basis = cheb_basis(x, l_hat, self.k)?;
        Self::fused(tape, &[(self, &basis)])
    }

    /// Sum of several Chebyshev convolutions as a single tape node:
    /// `sum_c (sum_k T_k(L_hat) X_c W_{c,k}) + sum_c b_c`, each part pairing a
    /// convolution with a precomputed [`cheb_basis`] of its input. Gated cells
    /// use this to evaluate `conv_x(x) + conv_h(h)` without materialising the
    /// two summands separately.
    pub fn fused(tape: &Tape, parts: &[(&ChebConv, &[Tensor])]) -> Result<Tensor> {
        let mut weights = Vec::new();
        let mut bias: Option<Tensor> = None;
        for (conv, basis) in parts {
            if basis.len() != conv.k {
                return Err(Error::ShapeMismatch {
                    op: "cheb_conv",
                    lhs: format!("Chebyshev basis of order {}", conv.k),
                    rhs: format!("{} polynomials", basis.len()),
                });
            }
            for (poly, w) in basis.iter().zip(&conv.weights) {
                if poly.cols() != conv.in_channels {
                    return Err(Error::ShapeMismatch {
                        op: "cheb_conv",
                        lhs: format!("{} input channels", conv.in_channels),
                        rhs: format!("{}x{}", poly.rows(), poly.cols()),
                    });
                }
                weights.push(w.tracked(tape));
            }
            let b = conv.bias.tracked(tape);
            bias = Some(match bias {
                Some(acc) => acc.add(&b)?,
                None => b,
            });
        }
        let polys = parts.iter().flat_map(|(_, basis)| basis.iter());
        let terms: Vec<(&Tensor, &Tensor)> = polys.zip(weights.iter()).collect();
        Tensor::matmul_sum(&terms, bias.as_ref())
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut params: Vec<&Parameter> = self.weights.iter().collect();
        params.push(&self.bias);
        params
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }
}

/// Random-walk power basis `[X, RW_out X, .., RW_out^K X, X, RW_in X, ..]`
/// shared by all diffusion convolutions of order `K` reading the same input.
pub fn diffusion_basis(
    x: &Tensor,
    rw_out: &SparseOperator,
    rw_in: &SparseOperator,
    k: usize,
) -> Result<Vec<Tensor>> {
    let mut powers = Vec::with_capacity(2 * (k + 1));
    for op in [rw_out, rw_in] {
        let mut power = x.clone();
        for i in 0..=k {
            if i > 0 {
                power = op.apply(&power)?;
            }
            powers.push(power.clone());
        }
    }
    Ok(powers)
}

/// Diffusion convolution over forward and backward random walks:
/// `sum_{k=0}^{K} (RW_out)^k X W_{k,out} + (RW_in)^k X W_{k,in} + b`,
/// powers applied by repeated sparse products.
pub struct DiffusionConv {
    k: usize,
    in_channels: usize,
    weights_out: Vec<Parameter>,
    weights_in: Vec<Parameter>,
    bias: Parameter,
}

impl DiffusionConv {
    pub fn new<R: Rng>(
        prefix: &str,
        k: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weights_out = (0..=k)
            .map(|i| Parameter::glorot(format!("{prefix}.out{i}"), in_channels, out_channels, rng))
            .collect();
        let weights_in = (0..=k)
            .map(|i| Parameter::glorot(format!("{prefix}.in{i}"), in_channels, out_channels, rng))
            .collect();
        Ok(DiffusionConv {
            k,
            in_channels,
            weights_out,
            weights_in,
            bias: Parameter::zeros(format!("{prefix}.bias"), 1, out_channels),
        })
    }

    pub fn forward(
        &self,
        tape: &Tape,
        x: &Tensor,
        rw_out: &SparseOperator,
        rw_in: &SparseOperator,
    ) -> Result<Tensor> {
        let basis = diffusion_basis(x, rw_out, rw_in, self.k)?;
        self.forward_basis(tape, &basis)
    }

    /// Forward pass over a precomputed [`diffusion_basis`], letting several
    /// gates share one set of sparse products.
    pub fn forward_basis(&self, tape: &Tape, basis: &[Tensor]) -> Result<Tensor> {
        if basis.len() != 2 * (self.k + 1) {
            return Err(Error::ShapeMismatch {
                op: "diffusion_conv",
                lhs: format!("diffusion basis of order {}", self.k),
                rhs: format!("{} powers", basis.len()),
            });
        }
        for power in basis {
            if power.cols() != self.in_channels {
                return Err(Error::ShapeMismatch {
                    op: "diffusion_conv",
                    lhs: format!("{} input channels", self.in_channels),
                    rhs: format!("{}x{}", power.rows(), power.cols()),
                });
            }
        }
        let weights: Vec<Tensor> = self
            .weights_out
            .iter()
            .chain(&self.weights_in)
            .map(|w| w.tracked(tape))
            .collect();
        let terms: Vec<(&Tensor, &Tensor)> = basis.iter().zip(weights.iter()).collect();
        Tensor::matmul_sum(&terms, Some(&self.bias.tracked(tape)))
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut params: Vec<&Parameter> = self.weights_out.iter().collect();
        params.extend(self.weights_in.iter());
        params.push(&self.bias);
        params
    }

    pub fn order(&self) -> usize {
        self.k
    }
}

/// Affine map `X W + b`.
pub struct Linear {
    in_features: usize,
    weight: Parameter,
    bias: Parameter,
}

impl Linear {
    pub fn new<R: Rng>(
        prefix: &str,
        in_features: usize,
        out_features: usize,
        rng: &mut R,
    ) -> Self {
        Linear {
            in_features,
            weight: Parameter::glorot(format!("{prefix}.weight"), in_features, out_features, rng),
            bias: Parameter::zeros(format!("{prefix}.bias"), 1, out_features),
        }
    }

    pub fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.in_features {
            return Err(Error::ShapeMismatch {
                op: "linear",
                lhs: format!("{} input features", self.in_features),
                rhs: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        let w = self.weight.tracked(tape);
        Tensor::matmul_sum(&[(x, &w)], Some(&self.bias.tracked(tape)))
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.weight, &self.bias]
    }
}
