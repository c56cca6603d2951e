use crate::error::{Error, Result};

/// Finite-difference settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffConfig {
    /// Base step.
    pub h: f64,
    /// Number of Richardson levels; 1 means the plain central stencil.
    pub levels: usize,
    pub tol: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { h: 1e-2, levels: 2, tol: 1e-8 }
    }
}

impl DiffConfig {
    /// Settings used for third-order limits.
    pub fn third_order() -> Self {
        DiffConfig { h: 5e-2, levels: 3, tol: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || self.levels == 0 {
            return Err(Error::Config(format!("invalid DiffConfig h={} levels={}", self.h, self.levels)));
        }
        Ok(())
    }
}

/// A finite-difference estimate with its observed convergence order.
#[derive(Clone, Debug, PartialEq)]
pub struct FdEstimate {
    pub value: Vec<f64>,
    /// `log2` ratio of successive differences over steps h, h/2, h/4.
    pub order: f64,
}

fn check(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn axpy(acc: &mut [f64], c: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += c * b;
    }
}

/// Richardson tableau over `levels` halvings of `h`; even-power error expansion.
fn richardson(stencil: &mut dyn FnMut(f64) -> Result<Vec<f64>>, h: f64, levels: usize) -> Result<Vec<f64>> {
    let mut row: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for l in 0..levels {
        row.push(stencil(h / f64::powi(2.0, l as i32))?);
    }
    for j in 1..levels {
        let f = f64::powi(4.0, j as i32);
        for i in (j..levels).rev() {
            let fine = row[i].clone();
            let coarse = &row[i - 1];
            row[i] = fine.iter().zip(coarse).map(|(a, b)| (f * a - b) / (f - 1.0)).collect();
        }
    }
    Ok(row.pop().unwrap_or_default())
}

fn estimate(stencil: &mut dyn FnMut(f64) -> Result<Vec<f64>>, cfg: &DiffConfig) -> Result<FdEstimate> {
    cfg.validate()?;
    let e0 = richardson(stencil, cfg.h, cfg.levels)?;
    let e1 = richardson(stencil, cfg.h / 2.0, cfg.levels)?;
    let e2 = richardson(stencil, cfg.h / 4.0, cfg.levels)?;
    let d01 = super::norm2(&e0.iter().zip(&e1).map(|(a, b)| a - b).collect::<Vec<_>>());
    let d12 = super::norm2(&e1.iter().zip(&e2).map(|(a, b)| a - b).collect::<Vec<_>>());
    let order = if d12 == 0.0 { f64::INFINITY } else { (d01 / d12).log2() };
    Ok(FdEstimate { value: e0, order })
}

/// Derivative of order 1, 2 or 3 of a vector-valued curve at `t0`.
pub fn fd_derivative(
    f: &dyn Fn(f64) -> Vec<f64>,
    t0: f64,
    order: usize,
    cfg: &DiffConfig,
) -> Result<FdEstimate> {
    let mut stencil = |h: f64| -> Result<Vec<f64>> {
        let (pts, w, scale): (&[f64], &[f64], f64) = match order {
            1 => (&[1.0, -1.0], &[1.0, -1.0], 2.0 * h),
            2 => (&[1.0, 0.0, -1.0], &[1.0, -2.0, 1.0], h * h),
            3 => (&[2.0, 1.0, -1.0, -2.0], &[1.0, -2.0, 2.0, -1.0], 2.0 * h * h * h),
            _ => return Err(Error::Config(format!("derivative order {order} unsupported"))),
        };
        let mut acc: Vec<f64> = Vec::new();
        for (p, c) in pts.iter().zip(w) {
            let v = f(t0 + p * h);
            check(&v)?;
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            axpy(&mut acc, c / scale, &v);
        }
        Ok(acc)
    };
    estimate(&mut stencil, cfg)
}

/// Mixed partial `d^k f / dt_1 ... dt_k` at `t = 0` by nested central differences with equal steps.
pub fn fd_mixed(f: &dyn Fn(&[f64]) -> Vec<f64>, k: usize, cfg: &DiffConfig) -> Result<FdEstimate> {
    let mut stencil = |h: f64| -> Result<Vec<f64>> {
        let mut acc: Vec<f64> = Vec::new();
        let mut t = vec![0.0; k];
        for mask in 0..(1usize << k) {
            let mut sign = 1.0;
            for (i, ti) in t.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *ti = -h;
                    sign = -sign;
                } else {
                    *ti = h;
                }
            }
            let v = f(&t);
            check(&v)?;
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            axpy(&mut acc, sign / (2.0 * h).powi(k as i32), &v);
        }
        Ok(acc)
    };
    estimate(&mut stencil, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_and_sine() {
        let cfg = DiffConfig::default();
        let d = fd_derivative(&|t| vec![t * t], 1.0, 1, &cfg).unwrap();
        assert!((d.value[0] - 2.0).abs() < 1e-12);
        let s = fd_derivative(&|t: f64| vec![t.sin()], 0.0, 1, &cfg).unwrap();
        assert!((s.value[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_order_for_sine() {
        let cfg = DiffConfig { h: 0.2, levels: 2, tol: 1e-8 };
        let s = fd_derivative(&|t: f64| vec![t.sin()], 0.3, 1, &cfg).unwrap();
        assert!(s.order >= 3.9, "order {}", s.order);
        let plain = DiffConfig { h: 0.2, levels: 1, tol: 1e-8 };
        let s = fd_derivative(&|t: f64| vec![t.sin()], 0.3, 1, &plain).unwrap();
        assert!((s.order - 2.0).abs() < 0.05, "order {}", s.order);
    }

    #[test]
    fn higher_orders_exact_on_polynomials() {
        let cfg = DiffConfig::default();
        let d2 = fd_derivative(&|t| vec![t * t * t], 0.5, 2, &cfg).unwrap();
        assert!((d2.value[0] - 3.0).abs() < 1e-9);
        let d3 = fd_derivative(&|t| vec![t.powi(4)], 0.5, 3, &DiffConfig::third_order()).unwrap();
        assert!((d3.value[0] - 12.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_partials() {
        let cfg = DiffConfig::default();
        let f = |t: &[f64]| vec![(t[0] + 1.0).exp() * (2.0 * t[1]).sin()];
        let m = fd_mixed(&f, 2, &cfg).unwrap();
        assert!((m.value[0] - 2.0 * 1f64.exp()).abs() < 1e-8);
        let g = |t: &[f64]| vec![t[0] * t[1] * t[2] + t[0] * t[0] * t[1]];
        let m3 = fd_mixed(&g, 3, &DiffConfig::third_order()).unwrap();
        assert!((m3.value[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_is_an_error() {
        let r = fd_derivative(&|t: f64| vec![1.0 / t], 0.0, 2, &DiffConfig { h: 1.0, levels: 1, tol: 0.0 });
        assert!(matches!(r, Err(Error::NonFinite)));
    }
}
