//! Kernels of the inverse transformation.
//!
//! ```text
//! ψ(x) = (√(cα)/β) sin(κx),   μ(x) = c e^{cx},   ζ(x) = cos(κx)/β,   κ = √(c/α)
//! ```

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// √(c/α)
    pub kappa: f64,
}

impl Kernels {
    pub fn new(c: f64, alpha: f64, beta: f64) -> Self {
        assert!(c > 0.0 && alpha > 0.0 && beta > 0.0, "kernels need c, α, β > 0");
        Self {
            c,
            alpha,
            beta,
            kappa: (c / alpha).sqrt(),
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        (self.c * self.alpha).sqrt() / self.beta * (self.kappa * x).sin()
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        self.c / self.beta * (self.kappa * x).cos()
    }

    pub fn mu(&self, x: f64) -> f64 {
        self.c * (self.c * x).exp()
    }

    pub fn zeta(&self, x: f64) -> f64 {
        (self.kappa * x).cos() / self.beta
    }

    pub fn zeta_prime(&self, x: f64) -> f64 {
        -self.kappa * (self.kappa * x).sin() / self.beta
    }
}

/// `(ψ(x), μ(x), ζ(x))`.
pub fn kernels(x: f64, c: f64, alpha: f64, beta: f64) -> (f64, f64, f64) {
    let k = Kernels::new(c, alpha, beta);
    (k.psi(x), k.mu(x), k.zeta(x))
}
