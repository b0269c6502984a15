//! Reverse-mode autodiff in isolation: record a computation on a tape, run
//! one backward sweep, and read gradients for both inputs.

use tempograph::autodiff::{Tape, Tensor};

fn main() -> tempograph::Result<()> {
    let tape = Tape::new();
    let a = tape.leaf(&Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]])?);
    let b = tape.leaf(&Tensor::from_rows(&[vec![0.5], vec![-1.5]])?);

    // loss = mean((tanh(A b))^2)
    let h = a.matmul(&b)?.tanh()?;
    let loss = h.hadamard(&h)?.mean()?;
    println!("loss = {:.6}", loss.item()?);

    let grads = tape.backward(&loss)?;
    println!("dloss/dA = {:?}", grads.get(&a).unwrap().data());
    println!("dloss/dB = {:?}", grads.get(&b).unwrap().data());

    // The tape is define-by-run: a second backward over the same tape
    // produces identical gradients.
    let again = tape.backward(&loss)?;
    assert_eq!(grads.get(&a).unwrap().data(), again.get(&a).unwrap().data());
    Ok(())
}
