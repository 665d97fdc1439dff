//! Lattice-periodic conformal factor fields.
//!
//! A scalar field u on the hexagonal torus represents the metric e^{2u}·g
//! over the flat background g. Fields are finite sums of Fourier cosine
//! modes cos(2π⟨k,q⟩ + φ) with k on the dual lattice, so periodicity and the
//! gradient are exact. Deck symmetrization (averaging over the order-3
//! rotation orbit) makes a field descend to the quotient sphere; evaluation
//! applies it on the fly, which keeps invariance exact rather than
//! approximate.
//!
//! Text format, one directive per line:
//!
//! ```text
//! # comment
//! const 0.1
//! mode 1 0 0.05 0.0
//! mode -2 1 0.02 1.5707963267948966
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cover::DECK_ROTATION;
use crate::lattice::PlanePoint;

/// Dual basis vector to (1, 0): k1 = (1, −1/√3).
const DUAL_K1: PlanePoint = PlanePoint {
    x: 1.0,
    y: -0.577_350_269_189_625_8,
};
/// Dual basis vector to (1/2, √3/2): k2 = (0, 2/√3).
const DUAL_K2: PlanePoint = PlanePoint {
    x: 0.0,
    y: 1.154_700_538_379_251_7,
};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("field directives are empty")]
    Empty,
}

/// Value and exact gradient of a field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    pub gradient: PlanePoint,
}

/// Symbolic field expression, stored pre-symmetrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldExpr {
    Constant(f64),
    /// amplitude · cos(2π⟨m·k1 + n·k2, q⟩ + phase)
    Mode {
        m: i32,
        n: i32,
        amplitude: f64,
        phase: f64,
    },
    Sum(Vec<FieldExpr>),
    Scale(f64, Box<FieldExpr>),
}

impl FieldExpr {
    fn eval(&self, q: PlanePoint) -> FieldValue {
        match self {
            FieldExpr::Constant(c) => FieldValue {
                value: *c,
                gradient: PlanePoint::ORIGIN,
            },
            FieldExpr::Mode {
                m,
                n,
                amplitude,
                phase,
            } => {
                let k = DUAL_K1.scale(*m as f64).add(DUAL_K2.scale(*n as f64));
                let arg = TAU * k.dot(q) + phase;
                let (sin, cos) = arg.sin_cos();
                FieldValue {
                    value: amplitude * cos,
                    gradient: k.scale(-amplitude * TAU * sin),
                }
            }
            FieldExpr::Sum(terms) => {
                let mut value = 0.0;
                let mut gradient = PlanePoint::ORIGIN;
                for term in terms {
                    let fv = term.eval(q);
                    value += fv.value;
                    gradient = gradient.add(fv.gradient);
                }
                FieldValue { value, gradient }
            }
            FieldExpr::Scale(factor, inner) => {
                let fv = inner.eval(q);
                FieldValue {
                    value: factor * fv.value,
                    gradient: fv.gradient.scale(*factor),
                }
            }
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            FieldExpr::Constant(c) => Some(*c),
            FieldExpr::Mode { amplitude, .. } => (*amplitude == 0.0).then_some(0.0),
            FieldExpr::Sum(terms) => terms
                .iter()
                .map(FieldExpr::constant_value)
                .try_fold(0.0, |acc, c| c.map(|c| acc + c)),
            FieldExpr::Scale(factor, inner) => {
                if *factor == 0.0 {
                    Some(0.0)
                } else {
                    inner.constant_value().map(|c| factor * c)
                }
            }
        }
    }

    fn canonical_text(&self, out: &mut String) {
        match self {
            FieldExpr::Constant(c) => out.push_str(&format!("const {c:?};")),
            FieldExpr::Mode {
                m,
                n,
                amplitude,
                phase,
            } => out.push_str(&format!("mode {m} {n} {amplitude:?} {phase:?};")),
            FieldExpr::Sum(terms) => {
                out.push_str("sum[");
                for t in terms {
                    t.canonical_text(out);
                }
                out.push_str("];");
            }
            FieldExpr::Scale(factor, inner) => {
                out.push_str(&format!("scale {factor:?}["));
                inner.canonical_text(out);
                out.push_str("];");
            }
        }
    }
}

/// A conformal factor exponent u, optionally deck-symmetrized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactorField {
    expr: FieldExpr,
    deck_symmetrized: bool,
}

impl ConformalFactorField {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            expr: FieldExpr::Constant(c),
            deck_symmetrized: true,
        }
    }

    /// A single raw (unsymmetrized) Fourier mode.
    pub fn mode(m: i32, n: i32, amplitude: f64, phase: f64) -> Self {
        Self {
            expr: FieldExpr::Mode {
                m,
                n,
                amplitude,
                phase,
            },
            deck_symmetrized: false,
        }
    }

    pub fn from_expr(expr: FieldExpr) -> Self {
        Self {
            expr,
            deck_symmetrized: false,
        }
    }

    /// Deck-averages the field: u ↦ (u + u∘R + u∘R²)/3. Idempotent.
    pub fn symmetrize(mut self) -> Self {
        self.deck_symmetrized = true;
        self
    }

    pub fn is_symmetrized(&self) -> bool {
        self.deck_symmetrized
    }

    /// Adds a constant offset (homothety of the metric).
    pub fn offset(self, c: f64) -> Self {
        let symmetrized = self.deck_symmetrized;
        Self {
            expr: FieldExpr::Sum(vec![self.expr, FieldExpr::Constant(c)]),
            // a constant is deck-invariant, so the flag carries over
            deck_symmetrized: symmetrized,
        }
    }

    /// Multiplies the exponent by `factor` (interpolation toward zero).
    pub fn scaled(self, factor: f64) -> Self {
        let symmetrized = self.deck_symmetrized;
        Self {
            expr: FieldExpr::Scale(factor, Box::new(self.expr)),
            deck_symmetrized: symmetrized,
        }
    }

    /// Structurally constant fields report their value.
    pub fn constant_value(&self) -> Option<f64> {
        self.expr.constant_value()
    }

    /// Value and exact gradient of u at any plane point.
    pub fn eval(&self, q: PlanePoint) -> FieldValue {
        if !self.deck_symmetrized {
            return self.expr.eval(q);
        }
        // chain rule: ∇(u∘R^j)(q) = (R^j)ᵀ (∇u)(R^j q)
        let mut value = 0.0;
        let mut gradient = PlanePoint::ORIGIN;
        let mut rotated = q;
        for j in 0..3 {
            let fv = self.expr.eval(rotated);
            value += fv.value;
            let mut g = fv.gradient;
            for _ in 0..j {
                g = DECK_ROTATION.apply_transposed(g);
            }
            gradient = gradient.add(g);
            rotated = DECK_ROTATION.apply_plane(rotated);
        }
        FieldValue {
            value: value / 3.0,
            gradient: gradient.scale(1.0 / 3.0),
        }
    }

    /// Convenience: e^{u(q)}.
    pub fn conformal_factor(&self, q: PlanePoint) -> f64 {
        self.eval(q).value.exp()
    }

    /// Parses the one-directive-per-line text format. The result is always
    /// deck-symmetrized.
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        let mut terms = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let directive = parts.next().expect("non-empty line has a first token");
            let rest: Vec<&str> = parts.collect();
            match directive {
                "const" => {
                    let [c] = parse_numbers::<1>(&rest, line, "const <c>")?;
                    terms.push(FieldExpr::Constant(c));
                }
                "mode" => {
                    let [m, n, amplitude, phase] =
                        parse_numbers::<4>(&rest, line, "mode <m> <n> <amplitude> <phase>")?;
                    let (m_int, n_int) = (m as i32, n as i32);
                    if m.fract() != 0.0 || n.fract() != 0.0 {
                        return Err(FieldError::Parse {
                            line,
                            message: format!("mode indices must be integers, got {m} {n}"),
                        });
                    }
                    terms.push(FieldExpr::Mode {
                        m: m_int,
                        n: n_int,
                        amplitude,
                        phase,
                    });
                }
                other => {
                    return Err(FieldError::Parse {
                        line,
                        message: format!("unknown directive `{other}`"),
                    });
                }
            }
        }
        if terms.is_empty() {
            return Err(FieldError::Empty);
        }
        let expr = if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            FieldExpr::Sum(terms)
        };
        Ok(Self {
            expr,
            deck_symmetrized: true,
        })
    }

    /// Deterministic random field: Fourier terms with |m|,|n| ≤ `max_mode`,
    /// deck-symmetrized, then scaled so a 64×64 grid estimate of ‖u‖_∞ equals
    /// `target_sup`. A zero target gives the zero field.
    pub fn random(seed: u64, target_sup: f64, max_mode: i32) -> Self {
        if target_sup == 0.0 {
            return Self::zero();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(4..=7);
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let (m, n) = loop {
                let m = rng.gen_range(-max_mode..=max_mode);
                let n = rng.gen_range(-max_mode..=max_mode);
                if m != 0 || n != 0 {
                    break (m, n);
                }
            };
            terms.push(FieldExpr::Mode {
                m,
                n,
                amplitude: rng.gen_range(-1.0..1.0),
                phase: rng.gen_range(0.0..TAU),
            });
        }
        let unscaled = Self {
            expr: FieldExpr::Sum(terms),
            deck_symmetrized: true,
        };
        let sup = unscaled.grid_sup_abs(64);
        if sup == 0.0 {
            return Self::zero();
        }
        unscaled.scaled(target_sup / sup)
    }

    fn grid_sup_abs(&self, n: usize) -> f64 {
        let hex = crate::lattice::hex_basis();
        let mut sup: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let q = hex
                    .b1
                    .scale(i as f64 / n as f64)
                    .add(hex.b2.scale(j as f64 / n as f64));
                sup = sup.max(self.eval(q).value.abs());
            }
        }
        sup
    }

    /// SHA-256 digest of the canonical expression text; identifies the field
    /// in reports.
    pub fn digest(&self) -> String {
        let mut text = String::new();
        self.expr.canonical_text(&mut text);
        text.push_str(if self.deck_symmetrized { "sym" } else { "raw" });
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_numbers<const N: usize>(
    parts: &[&str],
    line: usize,
    usage: &str,
) -> Result<[f64; N], FieldError> {
    if parts.len() != N {
        return Err(FieldError::Parse {
            line,
            message: format!("expected `{usage}`, got {} arguments", parts.len()),
        });
    }
    let mut out = [0.0; N];
    for (slot, token) in out.iter_mut().zip(parts) {
        *slot = token.parse::<f64>().map_err(|_| FieldError::Parse {
            line,
            message: format!("`{token}` is not a number"),
        })?;
    }
    Ok(out)
}
