//! Backpropagation against central differences: a network with every
//! activation the cGAN uses, before and after a deliberately broken
//! backward pass.
//!
//!     cargo run --release --example gradient_check

use ulsgan::nn::{grad_check, grad_check_with, init_network, Activation, SquaredError};

fn main() -> ulsgan::Result<()> {
    let dims = [6, 10, 8, 3];
    let acts = [Activation::LeakyRelu, Activation::Tanh, Activation::Softmax];
    let net = init_network(&dims, &acts, 11)?;
    let loss = SquaredError(vec![0.0, 1.0, 0.0]);
    let x = [0.3, -1.2, 0.8, 0.05, -0.4, 1.5];

    println!(
        "network {:?} ({} parameters), activations {:?}",
        net.dims(),
        net.parameter_count(),
        net.activations()
    );
    for eps in [1e-4, 1e-5, 1e-6, 1e-7] {
        println!("  eps {eps:.0e}: worst relative error {:.2e}", grad_check(&net, &loss, &x, eps)?);
    }

    let broken = grad_check_with(&net, &loss, &x, 1e-6, |g| {
        let w = g.layers[1].weights.as_mut_slice();
        w[5] = -w[5];
    })?;
    println!("with one weight gradient sign-flipped: {broken:.2e}");
    Ok(())
}
