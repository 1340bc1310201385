//! Multi-component nodal fields and the few vector operations the schemes need.

use num_complex::Complex64;

/// Nodal values indexed as `[component][node]`.
pub type Field = Vec<Vec<Complex64>>;

pub fn zeros(components: usize, nodes: usize) -> Field {
    vec![vec![Complex64::new(0.0, 0.0); nodes]; components]
}

pub fn zeros_like(u: &Field) -> Field {
    u.iter().map(|c| vec![Complex64::new(0.0, 0.0); c.len()]).collect()
}

pub fn from_real(values: Vec<Vec<f64>>) -> Field {
    values
        .into_iter()
        .map(|c| c.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
        .collect()
}

pub fn real_parts(u: &Field) -> Vec<Vec<f64>> {
    u.iter().map(|c| c.iter().map(|z| z.re).collect()).collect()
}

/// `a + b`.
pub fn add(a: &Field, b: &Field) -> Field {
    combine(a, b, |x, y| x + y)
}

/// `a - b`.
pub fn sub(a: &Field, b: &Field) -> Field {
    combine(a, b, |x, y| x - y)
}

/// `y + alpha * x`.
pub fn axpy(y: &Field, alpha: f64, x: &Field) -> Field {
    combine(y, x, |a, b| a + b * alpha)
}

pub fn scale(u: &Field, alpha: f64) -> Field {
    u.iter().map(|c| c.iter().map(|z| z * alpha).collect()).collect()
}

fn combine(a: &Field, b: &Field, op: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
    assert_eq!(a.len(), b.len(), "component count mismatch");
    a.iter()
        .zip(b)
        .map(|(ca, cb)| {
            assert_eq!(ca.len(), cb.len(), "node count mismatch");
            ca.iter().zip(cb).map(|(&x, &y)| op(x, y)).collect()
        })
        .collect()
}

/// Discrete L2 norm over all components and nodes.
pub fn l2_norm(u: &Field) -> f64 {
    u.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(u: &Field) -> f64 {
    u.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// True if every entry is finite and no larger than `limit` in modulus.
pub fn is_bounded(u: &Field, limit: f64) -> bool {
    u.iter()
        .flatten()
        .all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() <= limit)
}

/// Node vector of component values at `node`.
pub fn node_vector(u: &Field, node: usize) -> Vec<Complex64> {
    u.iter().map(|c| c[node]).collect()
}
