/// One classical RK4 step of `y' = f(t, y)`, written into `out`.
pub fn rk4_step<F: FnMut(f64, &[f64], &mut [f64])>(mut f: F, t: f64, y: &[f64], h: f64, out: &mut [f64]) {
    let d = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    f(t, y, &mut k1);
    for i in 0..d {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2);
    for i in 0..d {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3);
    for i in 0..d {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    for i in 0..d {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_fourth_order() {
        let mut y = [1.0];
        let mut out = [0.0];
        let h = 0.01;
        for k in 0..100 {
            rk4_step(|_, y, dy| dy[0] = -y[0], k as f64 * h, &y, h, &mut out);
            y = out;
        }
        assert!((y[0] - (-1f64).exp()).abs() < 1e-10);
    }
}
