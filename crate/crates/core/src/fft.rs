//! Radix-2 complex FFT for the power-of-two frame sizes used by the metrics.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn scale(self, k: f64) -> Self {
        Self { re: self.re * k, im: self.im * k }
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Precomputed plan for one transform length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    twiddles: Vec<Complex>,
    bit_reverse: Vec<usize>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two() && len >= 2, "FFT length must be a power of two");
        let bits = len.trailing_zeros();
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bit_reverse = (0..len).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Self { len, twiddles, bit_reverse }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform, `X[k] = sum x[n] e^{-2 pi i k n / N}`.
    pub fn forward(&self, data: &mut [Complex]) {
        self.transform(data, false);
    }

    /// In-place inverse transform including the `1/N` scale.
    pub fn inverse(&self, data: &mut [Complex]) {
        self.transform(data, true);
        let k = 1.0 / self.len as f64;
        for x in data.iter_mut() {
            *x = x.scale(k);
        }
    }

    fn transform(&self, data: &mut [Complex], inverse: bool) {
        assert_eq!(data.len(), self.len);
        for i in 0..self.len {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.len {
            let half = size / 2;
            let stride = self.len / size;
            for start in (0..self.len).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// Power `|X[k]|^2` of a real frame for bins `0..=N/2`.
pub fn power_spectrum(fft: &Fft, frame: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(fft.len(), Complex::ZERO);
    fft.forward(&mut buf);
    buf[..=fft.len() / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Magnitude `|X[k]|` of a real frame for bins `0..=N/2`.
pub fn magnitude_spectrum(fft: &Fft, frame: &[f64]) -> Vec<f64> {
    power_spectrum(fft, frame).into_iter().map(libm::sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex]) -> Vec<Complex> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::ZERO, |acc, (t, &v)| {
                    let angle = -2.0 * PI * (k * t % n) as f64 / n as f64;
                    acc + v * Complex::new(libm::cos(angle), libm::sin(angle))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let input: Vec<Complex> = (0..64)
            .map(|i| Complex::new(libm::sin(i as f64 * 0.37) + 0.1 * i as f64, libm::cos(i as f64 * 1.3)))
            .collect();
        let mut fast = input.clone();
        Fft::new(64).forward(&mut fast);
        for (a, b) in fast.iter().zip(naive_dft(&input)) {
            assert!((*a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let input: Vec<Complex> = (0..128).map(|i| Complex::new(i as f64, -(i as f64) / 3.0)).collect();
        let fft = Fft::new(128);
        let mut buf = input.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&input) {
            assert!((*a - *b).norm() < 1e-9);
        }
    }
}
