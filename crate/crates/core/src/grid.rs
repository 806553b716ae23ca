//! Row-major 2-D grids of reals.

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Grid { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Grid { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Separable Gaussian blur with edge replication. `sigma == 0` is the
    /// identity.
    pub fn gaussian_blur(&self, sigma: f64) -> Grid {
        if sigma <= 0.0 || self.is_empty() {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel: Vec<f64> =
            (-radius..=radius).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);

        let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
        let horizontal = Grid::from_fn(self.rows, self.cols, |r, c| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * self.get(r, clamp(c as isize + k as isize - radius, self.cols)))
                .sum()
        });
        Grid::from_fn(self.rows, self.cols, |r, c| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * horizontal.get(clamp(r as isize + k as isize - radius, self.rows), c))
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_preserves_constants_and_mass_direction() {
        let flat = Grid::filled(5, 7, 0.3);
        let blurred = flat.gaussian_blur(1.0);
        assert!(blurred.data().iter().all(|v| (v - 0.3).abs() < 1e-12));

        let mut spike = Grid::filled(9, 9, 0.0);
        spike.set(4, 4, 1.0);
        let b = spike.gaussian_blur(0.5);
        assert!(b.get(4, 4) < 1.0 && b.get(4, 5) > 0.0);
        assert!((b.get(4, 5) - b.get(5, 4)).abs() < 1e-15);
        assert!((b.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(spike.gaussian_blur(0.0), spike);
    }
}
