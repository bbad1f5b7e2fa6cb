//! Gradient-lattice noise and multi-octave fusion.
//!
//! A [`GradientLattice`] carries one random unit gradient per grid vertex.
//! Sampling dots the per-corner displacement against the corner gradient and
//! blends the four ramp values with quintic-faded bilinear interpolation,
//! which is C1-continuous across cell boundaries. [`fbm_field`] sums octaves
//! with halving amplitude and doubling lattice resolution to get the
//! multi-scale field used as the initial fog intensity map.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::rng::CounterRng;

/// Quintic smoothing curve `6t^5 - 15t^4 + 10t^3`.
///
/// Zero first and second derivatives at both endpoints, which is what kills
/// visible seams at lattice lines.
pub fn fade(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("fade input {t} outside [0, 1]")));
    }
    Ok(fade_unit(t))
}

#[inline]
fn fade_unit(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Linear interpolation `a + t(b - a)`.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// An n×m cell grid with one random unit gradient per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientLattice {
    cells_x: usize,
    cells_y: usize,
    /// (cells_x+1) * (cells_y+1) gradients, vertex-row-major.
    gradients: Vec<[f64; 2]>,
    seed: u64,
}

impl GradientLattice {
    /// Builds the lattice. Gradient angles are uniform on [0, 2π), drawn from
    /// a counter generator keyed by the seed and indexed by vertex, so
    /// construction order never matters.
    pub fn build(cells_x: usize, cells_y: usize, seed: u64) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 {
            return Err(Error::invalid("lattice must have at least one cell per axis"));
        }
        let rng = CounterRng::new(seed);
        let n_vertices = (cells_x + 1) * (cells_y + 1);
        let gradients = (0..n_vertices)
            .map(|idx| {
                let theta = rng.unit_f64(idx as u64) * std::f64::consts::TAU;
                [theta.cos(), theta.sin()]
            })
            .collect();
        Ok(GradientLattice {
            cells_x,
            cells_y,
            gradients,
            seed,
        })
    }

    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gradients(&self) -> &[[f64; 2]] {
        &self.gradients
    }

    #[inline]
    fn gradient(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.gradients[iy * (self.cells_x + 1) + ix]
    }

    /// Noise value at lattice coordinates `(x, y)`, `0 <= x <= cells_x`,
    /// `0 <= y <= cells_y`.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=self.cells_x as f64).contains(&x) || !(0.0..=self.cells_y as f64).contains(&y) {
            return Err(Error::invalid(format!(
                "sample point ({x}, {y}) outside lattice {}x{}",
                self.cells_x, self.cells_y
            )));
        }
        Ok(self.sample(x, y))
    }

    #[inline]
    fn sample(&self, x: f64, y: f64) -> f64 {
        // Right/top boundary folds into the last cell with offset 1.
        let ix = (x as usize).min(self.cells_x - 1);
        let iy = (y as usize).min(self.cells_y - 1);
        let dx = x - ix as f64;
        let dy = y - iy as f64;

        // Ramp value at each corner: displacement · gradient.
        let ramp = |cx: usize, cy: usize| -> f64 {
            let g = self.gradient(cx, cy);
            let ox = x - cx as f64;
            let oy = y - cy as f64;
            ox * g[0] + oy * g[1]
        };
        let s_ld = ramp(ix, iy);
        let s_rd = ramp(ix + 1, iy);
        let s_lu = ramp(ix, iy + 1);
        let s_ru = ramp(ix + 1, iy + 1);

        let wx = fade_unit(dx);
        let wy = fade_unit(dy);
        let low = lerp(s_ld, s_rd, wx);
        let high = lerp(s_lu, s_ru, wx);
        lerp(low, high, wy)
    }
}

/// Octave schedule for multi-scale fusion: amplitude halves and lattice
/// resolution doubles per octave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FbmSpec {
    octaves: usize,
    base_cells: usize,
}

impl FbmSpec {
    pub const DEFAULT_OCTAVES: usize = 6;
    pub const DEFAULT_BASE_CELLS: usize = 4;

    pub fn new(octaves: usize, base_cells: usize) -> Result<Self> {
        if octaves == 0 {
            return Err(Error::invalid("octave count must be at least 1"));
        }
        if base_cells == 0 {
            return Err(Error::invalid("base cell count must be at least 1"));
        }
        Ok(FbmSpec { octaves, base_cells })
    }

    pub fn octaves(&self) -> usize {
        self.octaves
    }

    pub fn base_cells(&self) -> usize {
        self.base_cells
    }

    /// Amplitude of octave `k`: 2^-k.
    pub fn amplitude(&self, k: usize) -> f64 {
        0.5f64.powi(k as i32)
    }

    /// Frequency multiplier of octave `k`: 2^k.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0f64.powi(k as i32)
    }

    /// Lattice cell count per axis at octave `k`.
    pub fn lattice_cells(&self, k: usize) -> usize {
        self.base_cells << k
    }

    /// Sum of all octave amplitudes (the geometric series 2 - 2^(1-K)).
    pub fn amplitude_sum(&self) -> f64 {
        (0..self.octaves).map(|k| self.amplitude(k)).sum()
    }
}

impl Default for FbmSpec {
    fn default() -> Self {
        FbmSpec {
            octaves: Self::DEFAULT_OCTAVES,
            base_cells: Self::DEFAULT_BASE_CELLS,
        }
    }
}

/// Renders one octave of the schedule into a height×width field. Pixel
/// centers map to `((col+0.5)/width, (row+0.5)/height)` scaled to the
/// octave's own lattice, which keeps every sample strictly interior.
pub fn octave_field(
    spec: &FbmSpec,
    octave: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<ScalarField> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("field dimensions must be positive"));
    }
    let cells = spec.lattice_cells(octave);
    let lattice = GradientLattice::build(cells, cells, seed ^ octave as u64)?;
    let sx = cells as f64 / width as f64;
    let sy = cells as f64 / height as f64;
    Ok(ScalarField::from_fn(height, width, |row, col| {
        lattice.sample((col as f64 + 0.5) * sx, (row as f64 + 0.5) * sy)
    }))
}

/// Multi-octave fused field: sum over octaves of amplitude(k) times the
/// octave-k field. Each octave gets its own lattice seeded `seed ^ k`;
/// sharing one lattice across octaves would correlate scales.
pub fn fbm_field(spec: &FbmSpec, height: usize, width: usize, seed: u64) -> Result<ScalarField> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("field dimensions must be positive"));
    }
    let mut acc = vec![0.0f64; height * width];
    for k in 0..spec.octaves() {
        let amp = spec.amplitude(k);
        let layer = octave_field(spec, k, height, width, seed)?;
        for (a, &v) in acc.iter_mut().zip(layer.values()) {
            *a += amp * v;
        }
    }
    ScalarField::new(height, width, acc)
}

/// Affine min-max rescaling to [0, 1]. A constant field has no range to
/// stretch and maps to all 0.5.
pub fn normalize01(field: &ScalarField) -> ScalarField {
    let (lo, hi) = field.min_max();
    if hi == lo {
        return field.map(|_| 0.5);
    }
    // Division rather than reciprocal multiplication: the extremes must map
    // to exactly 0 and 1.
    let span = hi - lo;
    field.map(|v| (v - lo) / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2_OVER_2: f64 = std::f64::consts::SQRT_2 / 2.0;

    #[test]
    fn fade_endpoint_and_midpoint_values() {
        assert_eq!(fade(0.0).unwrap(), 0.0);
        assert_eq!(fade(1.0).unwrap(), 1.0);
        assert_eq!(fade(0.5).unwrap(), 0.5);
    }

    #[test]
    fn fade_rejects_out_of_range() {
        assert!(fade(-0.1).is_err());
        assert!(fade(1.1).is_err());
    }

    #[test]
    fn fade_monotone_on_unit_interval() {
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = fade(i as f64 / 1000.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    /// Independent polynomial oracle: fade must agree with the literal
    /// quintic, whose central differences vanish at both endpoints.
    #[test]
    fn fade_derivatives_vanish_at_endpoints() {
        let poly = |t: f64| 6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((fade(t).unwrap() - poly(t)).abs() < 1e-12);
        }
        let h = 1e-4;
        for t0 in [0.0, 1.0] {
            let d1 = (poly(t0 + h) - poly(t0 - h)) / (2.0 * h);
            let d2 = (poly(t0 + h) - 2.0 * poly(t0) + poly(t0 - h)) / (h * h);
            assert!(d1.abs() < 1e-4, "fade'({t0}) = {d1}");
            assert!(d2.abs() < 1e-4, "fade''({t0}) = {d2}");
        }
    }

    #[test]
    fn lerp_midpoint_and_endpoints() {
        assert_eq!(lerp(2.0, 4.0, 0.5), 3.0);
        assert_eq!(lerp(2.0, 4.0, 0.0), 2.0);
        assert_eq!(lerp(2.0, 4.0, 1.0), 4.0);
        assert_eq!(lerp(-1.5, 0.25, 0.0), -1.5);
        assert_eq!(lerp(-1.5, 0.25, 1.0), 0.25);
    }

    #[test]
    fn lattice_is_deterministic_per_seed() {
        let a = GradientLattice::build(4, 4, 99).unwrap();
        let b = GradientLattice::build(4, 4, 99).unwrap();
        assert_eq!(a.gradients(), b.gradients());
    }

    #[test]
    fn lattice_has_unit_gradients_and_right_count() {
        let lat = GradientLattice::build(3, 5, 7).unwrap();
        assert_eq!(lat.gradients().len(), 4 * 6);
        for g in lat.gradients() {
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = GradientLattice::build(4, 4, 1).unwrap();
        let b = GradientLattice::build(4, 4, 2).unwrap();
        assert!(a
            .gradients()
            .iter()
            .zip(b.gradients())
            .any(|(ga, gb)| ga != gb));
    }

    #[test]
    fn lattice_rejects_zero_dims() {
        assert!(GradientLattice::build(0, 4, 1).is_err());
        assert!(GradientLattice::build(4, 0, 1).is_err());
    }

    #[test]
    fn perlin_zero_at_every_vertex() {
        let lat = GradientLattice::build(4, 4, 17).unwrap();
        for iy in 0..=4 {
            for ix in 0..=4 {
                assert_eq!(lat.value_at(ix as f64, iy as f64).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn perlin_rejects_out_of_lattice_points() {
        let lat = GradientLattice::build(2, 2, 3).unwrap();
        assert!(lat.value_at(-0.1, 1.0).is_err());
        assert!(lat.value_at(1.0, 2.5).is_err());
    }

    /// Dense-sampling oracle for continuity: nearby points give nearby
    /// values.
    #[test]
    fn perlin_continuity_probe() {
        let lat = GradientLattice::build(4, 4, 11).unwrap();
        let rng = CounterRng::new(500);
        for i in 0..10_000u64 {
            let x = rng.unit_f64(2 * i) * 3.9999;
            let y = rng.unit_f64(2 * i + 1) * 4.0;
            let a = lat.value_at(x, y).unwrap();
            let b = lat.value_at(x + 1e-5, y).unwrap();
            assert!((a - b).abs() < 1e-3);
        }
    }

    /// Brute-force sampling oracle for the amplitude bound sqrt(2)/2.
    #[test]
    fn perlin_respects_amplitude_bound() {
        let lat = GradientLattice::build(4, 4, 23).unwrap();
        let rng = CounterRng::new(501);
        for i in 0..1_000_000u64 {
            let x = rng.unit_f64(2 * i) * 4.0;
            let y = rng.unit_f64(2 * i + 1) * 4.0;
            let v = lat.value_at(x, y).unwrap();
            assert!(v.abs() <= SQRT2_OVER_2 + 1e-6, "|{v}| exceeds bound");
        }
    }

    #[test]
    fn fbm_single_octave_is_plain_perlin() {
        let spec = FbmSpec::new(1, 4).unwrap();
        let fused = fbm_field(&spec, 16, 16, 42).unwrap();
        let single = octave_field(&spec, 0, 16, 16, 42).unwrap();
        assert_eq!(fused, single);
    }

    #[test]
    fn fbm_amplitude_schedule_for_six_octaves() {
        let spec = FbmSpec::default();
        let expected = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(spec.amplitude(k), e);
        }
        assert_eq!(spec.frequency(3), 8.0);
        assert_eq!(spec.lattice_cells(3), 32);
    }

    #[test]
    fn fbm_two_octave_decomposition() {
        let spec = FbmSpec::new(2, 4).unwrap();
        let fused = fbm_field(&spec, 24, 24, 7).unwrap();
        let oct0 = octave_field(&spec, 0, 24, 24, 7).unwrap();
        let oct1 = octave_field(&spec, 1, 24, 24, 7).unwrap();
        for ((f, a), b) in fused
            .values()
            .iter()
            .zip(oct0.values())
            .zip(oct1.values())
        {
            assert!((f - (a + 0.5 * b)).abs() < 1e-9);
        }
    }

    #[test]
    fn fbm_is_deterministic() {
        let spec = FbmSpec::default();
        let a = fbm_field(&spec, 32, 32, 1234).unwrap();
        let b = fbm_field(&spec, 32, 32, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fbm_bounded_by_weighted_amplitude_sum() {
        let spec = FbmSpec::default();
        let bound = SQRT2_OVER_2 * spec.amplitude_sum();
        let field = fbm_field(&spec, 64, 64, 9).unwrap();
        for &v in field.values() {
            assert!(v.abs() <= bound + 1e-6);
        }
    }

    #[test]
    fn normalize01_affine_map() {
        let f = ScalarField::new(1, 3, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(normalize01(&f).values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize01_hits_both_extremes() {
        let spec = FbmSpec::default();
        let f = normalize01(&fbm_field(&spec, 16, 16, 3).unwrap());
        let (lo, hi) = f.min_max();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
        assert!(f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn normalize01_constant_field_maps_to_half() {
        let f = ScalarField::new(2, 2, vec![7.3; 4]).unwrap();
        assert!(normalize01(&f).values().iter().all(|&v| v == 0.5));
    }
}
