use serde::{Deserialize, Serialize};

/// `coef · x^powers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial(pub f64, pub Vec<u32>);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: f64, d: usize) -> Self {
        Polynomial { terms: vec![Monomial(c, vec![0; d])] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|Monomial(c, p)| {
                let mut v = *c;
                for (xi, &e) in x.iter().zip(p) {
                    v *= xi.powi(e as i32);
                }
                v
            })
            .sum()
    }

    pub fn derivative(&self, alpha: &[usize]) -> Polynomial {
        let mut out = Vec::new();
        'terms: for Monomial(c, p) in &self.terms {
            let mut coef = *c;
            let mut powers = p.clone();
            for (i, &a) in alpha.iter().enumerate() {
                let e = powers.get(i).copied().unwrap_or(0) as usize;
                if a > e {
                    continue 'terms;
                }
                for k in 0..a {
                    coef *= (e - k) as f64;
                }
                if i < powers.len() {
                    powers[i] = (e - a) as u32;
                }
            }
            out.push(Monomial(coef, powers));
        }
        Polynomial { terms: out }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.1.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|m| m.1.len())
    }
}

/// Scalar gauge function f in A' = A + df.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFunction {
    Zero,
    Constant { c: f64 },
    Polynomial { terms: Polynomial },
    /// amplitude · sin(⟨k, x⟩ + phase)
    Wave { amplitude: f64, k: Vec<f64>, phase: f64 },
    Sum { terms: Vec<ScalarFunction> },
}

impl ScalarFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarFunction::Zero => 0.0,
            ScalarFunction::Constant { c } => *c,
            ScalarFunction::Polynomial { terms } => terms.eval(x),
            ScalarFunction::Wave { amplitude, k, phase } => amplitude * (dot(k, x) + phase).sin(),
            ScalarFunction::Sum { terms } => terms.iter().map(|f| f.value(x)).sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        match self {
            ScalarFunction::Zero | ScalarFunction::Constant { .. } => vec![0.0; d],
            ScalarFunction::Polynomial { terms } => (0..d)
                .map(|i| {
                    let mut a = vec![0; d];
                    a[i] = 1;
                    terms.derivative(&a).eval(x)
                })
                .collect(),
            ScalarFunction::Wave { amplitude, k, phase } => {
                let c = amplitude * (dot(k, x) + phase).cos();
                k.iter().map(|ki| c * ki).collect()
            }
            ScalarFunction::Sum { terms } => {
                let mut g = vec![0.0; d];
                for f in terms {
                    for (gi, fi) in g.iter_mut().zip(f.gradient(x)) {
                        *gi += fi;
                    }
                }
                g
            }
        }
    }

    /// Row-major d×d Hessian.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        match self {
            ScalarFunction::Zero | ScalarFunction::Constant { .. } => {}
            ScalarFunction::Polynomial { terms } => {
                for i in 0..d {
                    for j in 0..d {
                        let mut a = vec![0; d];
                        a[i] += 1;
                        a[j] += 1;
                        h[i * d + j] = terms.derivative(&a).eval(x);
                    }
                }
            }
            ScalarFunction::Wave { amplitude, k, phase } => {
                let s = -amplitude * (dot(k, x) + phase).sin();
                for i in 0..d {
                    for j in 0..d {
                        h[i * d + j] = s * k[i] * k[j];
                    }
                }
            }
            ScalarFunction::Sum { terms } => {
                for f in terms {
                    for (hi, fi) in h.iter_mut().zip(f.hessian(x)) {
                        *hi += fi;
                    }
                }
            }
        }
        h
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ⟨x⟩ = sqrt(1 + |x|²)
pub fn japanese(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// All multi-indices of length `d` with total order `m`, in lexicographic order.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == d {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=m).rev() {
            prefix.push(k);
            rec(d, m - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(d, m, &mut Vec::with_capacity(d), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivative() {
        // p = 3 x² y + y³
        let p = Polynomial::new(vec![Monomial(3.0, vec![2, 1]), Monomial(1.0, vec![0, 3])]);
        let px = p.derivative(&[1, 0]);
        let pyy = p.derivative(&[0, 2]);
        let x = [0.7, -1.3];
        assert!((px.eval(&x) - 6.0 * 0.7 * -1.3).abs() < 1e-14);
        assert!((pyy.eval(&x) - 6.0 * -1.3).abs() < 1e-14);
        assert_eq!(p.derivative(&[3, 0]).eval(&x), 0.0);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 3).len(), 4);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert!(multi_indices(2, 2).iter().all(|a| a.iter().sum::<usize>() == 2));
    }

    #[test]
    fn wave_gradient_matches_difference() {
        let f = ScalarFunction::Wave { amplitude: 0.4, k: vec![0.3, -0.2], phase: 0.1 };
        let x = [1.1, 2.3];
        let g = f.gradient(&x);
        let h = 1e-6;
        let fd = (f.value(&[x[0] + h, x[1]]) - f.value(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-9);
    }
}
